import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import DATA, TEST_DATA
from dreadfuzz.dread import default_rulebase, dread_variables
from dreadfuzz.dsl import (
    RuleBaseSyntaxError,
    Severity,
    load_rulebase,
    parse_rulebase,
    serialize_rulebase,
    validate,
)
from dreadfuzz.fuzzy import (
    Defuzz,
    LinguisticVariable,
    MembershipFunction,
    Rule,
    RuleBase,
    Term,
)

MINIMAL = """\
variable A range 0 1 {
    term x trap 0 0 1 1
}
output Out range 0 1 {
    term y trap 0 0 1 1
}
rule IF A IS x THEN Out IS y
"""


def codes(result):
    return [d.code for d in result.diagnostics]


def test_minimal_document():
    res = parse_rulebase(MINIMAL)
    assert res.ok and not res.errors
    assert len(res.rulebase.rules) == 1
    rule = res.rulebase.rules[0]
    assert rule.antecedents == (("A", "x"),)
    assert rule.consequent == ("Out", "y")
    assert rule.weight == 1.0


def test_unknown_term_reports_rule_line():
    text = (DATA / "dread-variables.frb").read_text()
    text += "\nrule IF DamagePotential IS Huge THEN RiskLevel IS High\n"
    res = parse_rulebase(text)
    assert not res.ok
    [err] = res.errors
    assert err.code == "unknown-term"
    assert err.line == text.count("\n")
    assert "Huge" in err.message


def test_blind_sql_rules():
    res = parse_rulebase((TEST_DATA / "blind_sql.frb").read_text())
    assert res.ok, res.errors
    rules = res.rulebase.rules
    assert len(rules) == 8
    assert rules[0].consequent == ("RiskLevel", "S_W_High")
    assert rules[7].consequent == ("RiskLevel", "VeryHigh")


def test_canonical_triangle_text():
    var = LinguisticVariable("A", 0, 5, (Term("x", MembershipFunction.tri(1, 2.5, 4)),))
    out = LinguisticVariable("Out", 0, 5, (Term("y", MembershipFunction.tri(1, 2.5, 4)),))
    text = serialize_rulebase(RuleBase((var,), out))
    assert "    term x tri 1 2.5 4\n" in text


def test_round_trip_structural():
    res = parse_rulebase(MINIMAL)
    again = parse_rulebase(serialize_rulebase(res.rulebase))
    assert again.rulebase == res.rulebase


def test_empty_rule_list_warns_on_reload():
    inputs, output = dread_variables()
    text = serialize_rulebase(RuleBase(inputs, output))
    assert "rule" not in text
    res = parse_rulebase(text)
    assert res.ok
    assert codes(res) == ["empty-rulebase"]
    assert res.diagnostics[0].severity is Severity.WARNING


def test_shipped_base_is_canonical_and_clean():
    text = (DATA / "dread.frb").read_text(encoding="utf-8")
    assert text == serialize_rulebase(default_rulebase())
    res = parse_rulebase(text)
    assert res.ok
    assert res.diagnostics == []
    assert serialize_rulebase(res.rulebase) == text


def test_shipped_variables_file():
    inputs, output = dread_variables()
    assert (DATA / "dread-variables.frb").read_text() == serialize_rulebase(RuleBase(inputs, output))


def test_validator_on_default_base():
    diags = validate(default_rulebase())
    assert not [d for d in diags if d.severity is Severity.ERROR]
    assert not [d for d in diags if d.code == "coverage-gap"]


def test_conflicting_rules_error():
    res = parse_rulebase((TEST_DATA / "conflicting.frb").read_text())
    assert not res.ok
    [err] = res.errors
    assert err.code == "conflicting-rules"
    assert err.line == 13


def test_conflicting_rules_from_validate():
    v = LinguisticVariable("A", 0, 1, (Term("x", MembershipFunction.trap(0, 0, 1, 1)),))
    out = LinguisticVariable("Out", 0, 1, (Term("y", MembershipFunction.tri(0, 0.5, 1)),
                                           Term("z", MembershipFunction.tri(0, 0.5, 1))))
    rb = RuleBase((v,), out, (Rule((("A", "x"),), ("Out", "y")), Rule((("A", "x"),), ("Out", "z"))))
    assert [d.code for d in validate(rb) if d.severity is Severity.ERROR] == ["conflicting-rules"]


def test_exact_duplicate_rule():
    res = parse_rulebase(MINIMAL + "rule IF A IS x THEN Out IS y\n")
    assert codes(res) == ["duplicate-rule"]


def test_coverage_gap_warning():
    text = """\
variable Gappy range 0 10 {
    term Lo trap 0 0 2 4.5
    term Hi trap 5 7 10 10
}
output Out range 0 1 {
    term y trap 0 0 1 1
}
rule IF Gappy IS Lo THEN Out IS y
rule IF Gappy IS Hi THEN Out IS y
"""
    res = parse_rulebase(text)
    assert res.ok
    [gap] = res.warnings
    assert gap.code == "coverage-gap"
    assert "[4.5, 5]" in gap.message
    assert gap.line == 1


def test_unused_term_and_dead_region_warnings():
    text = """\
variable A range 0 1 {
    term x trap 0 0 0.5 1
    term w trap 0 0.5 1 1
}
variable B range 0 1 {
    term p trap 0 0 1 1
}
output Out range 0 1 {
    term y trap 0 0 1 1
    term z trap 0 0 1 1
}
rule IF A IS x AND B IS p THEN Out IS y
"""
    res = parse_rulebase(text)
    assert res.ok
    assert sorted(codes(res)) == ["no-rule-region", "unused-term", "unused-term"]


@pytest.mark.parametrize(
    "snippet, code",
    [
        ("variable B range 0 1 {\n term q tri 0.8 0.5 1\n}\n", "bad-mf-params"),
        ("variable B range 0 1 {\n term q tri 0 0.5 1\n term q tri 0 0.5 1\n}\n", "duplicate-term"),
        ("variable B range 1 0 {\n term q tri 0 0.5 1\n}\n", "bad-range"),
        ("variable B range 0 1 {\n term q tri 0 0.5 2\n}\n", "term-outside-universe"),
        ("variable A range 0 1 {\n term q tri 0 0.5 1\n}\n", "duplicate-variable"),
        ("variable B range 0 1 {\n}\n", "no-terms"),
        ("output O2 range 0 1 {\n term q tri 0 0.5 1\n}\n", "duplicate-output"),
        ("rule IF Nope IS x THEN Out IS y\n", "unknown-variable"),
        ("rule IF A IS x THEN A IS x\n", "not-output"),
        ("rule IF Out IS y THEN Out IS y\n", "output-in-antecedent"),
        ("rule IF A IS x AND A IS x THEN Out IS y\n", "repeated-antecedent"),
        ("rule IF A IS x THEN Out IS y weight 2\n", "bad-weight"),
        ("rule IF A IS x OR A IS x THEN Out IS y\n", "unsupported-or"),
        ("rule IF A IS x THEN Out y\n", "syntax"),
        ("rule IF A IS x THEN Out IS y extra\n", "syntax"),
        ("term z tri 0 1 2\n", "syntax"),
        ("variable rule range 0 1 {\n term q tri 0 0.5 1\n}\n", "reserved-keyword"),
        ("variable B range 0 1 {\n term q tri 0 0.5 1e999\n}\n", "bad-number"),
        ("defuzz centroid\n", "bad-config"),
        ("resolution 50\n", "bad-config"),
        ("variable B range 0 1 {\n term q tri 0 0.5 1\n", "unclosed-block"),
        ("rule IF A IS x THEN Out IS y @\n", "syntax"),
    ],
)
def test_error_codes(snippet, code):
    res = parse_rulebase(MINIMAL + snippet)
    assert not res.ok
    assert code in codes(res), res.diagnostics
    lines = (MINIMAL + snippet).split("\n")
    for d in res.diagnostics:
        assert 1 <= d.line <= len(lines)
        assert 1 <= d.column <= len(lines[d.line - 1]) + 1


def test_missing_output_and_input():
    res = parse_rulebase("")
    assert {"missing-output", "missing-input"} <= set(codes(res))


def test_syntax_error_location():
    res = parse_rulebase((TEST_DATA / "broken.frb").read_text())
    [err] = res.errors
    assert (err.code, err.line, err.column) == ("syntax", 10, 33)


def test_config_directives_and_weights():
    text = "defuzz mom\nresolution 2001\n" + MINIMAL.replace("Out IS y", "Out IS y weight 0.25")
    res = parse_rulebase(text)
    assert res.config == {"defuzz": Defuzz.MOM, "resolution": 2001}
    assert res.inference_config().resolution == 2001
    assert res.rulebase.rules[0].weight == 0.25
    out = serialize_rulebase(res.rulebase, res.config)
    assert out.startswith("defuzz MOM\nresolution 2001\n")
    assert "THEN Out IS y weight 0.25" in out
    assert parse_rulebase(out).config == res.config


def test_keywords_case_insensitive_names_case_sensitive():
    text = MINIMAL.replace("rule IF A IS x THEN Out IS y", "rule if A is x then Out is y")
    assert parse_rulebase(text).ok
    bad = MINIMAL.replace("rule IF A IS x", "rule IF a IS x")
    assert codes(parse_rulebase(bad)) == ["unknown-variable"]


def test_one_line_block_and_comments():
    text = "# header\nvariable A range 0 1 { term x tri 0 0.5 1 }  # trailing\n" \
           "output Out range 0 1 { term y tri 0 0.5 1 }\nrule IF A IS x THEN Out IS y\n"
    assert parse_rulebase(text).ok


def test_load_rulebase(tmp_path):
    rb, res = load_rulebase(DATA / "dread.frb")
    assert len(rb.rules) == 3125
    bad = tmp_path / "bad.frb"
    bad.write_text("rule oops\n")
    with pytest.raises(RuleBaseSyntaxError, match="bad.frb:1"):
        load_rulebase(bad)
    with pytest.raises(OSError):
        load_rulebase(tmp_path / "missing.frb")


# -- properties ------------------------------------------------------------------

names = st.sampled_from(["A", "B", "C"])
term_names = st.sampled_from(["p", "q", "r"])


@st.composite
def rulebases(draw):
    def variable(name, lo, hi):
        n = draw(st.integers(1, 3))
        terms = []
        for i in range(n):
            pts = sorted(draw(st.lists(st.floats(lo, hi, allow_nan=False), min_size=4, max_size=4)))
            mf = MembershipFunction.trap(*pts) if draw(st.booleans()) else MembershipFunction.tri(pts[0], pts[1], pts[3])
            terms.append(Term(f"t{i}", mf))
        return LinguisticVariable(name, lo, hi, tuple(terms))

    inputs = tuple(variable(n, 0, draw(st.sampled_from([1, 10, 2.5]))) for n in ("A", "B"))
    output = variable("Out", -5, 50)
    rules = {}
    for _ in range(draw(st.integers(0, 6))):
        ants = tuple((v.name, draw(st.sampled_from(v.term_names))) for v in inputs if draw(st.booleans())) \
            or ((inputs[0].name, inputs[0].terms[0].name),)
        r = Rule(ants, ("Out", draw(st.sampled_from(output.term_names))), draw(st.sampled_from([1, 0.5, 0.125])))
        rules.setdefault(r.pattern, r)
    return RuleBase(inputs, output, tuple(rules.values()))


@settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(rulebases())
def test_serialize_round_trip_is_byte_stable(rb):
    text = serialize_rulebase(rb)
    res = parse_rulebase(text)
    assert res.ok, res.errors
    assert res.rulebase == rb
    assert serialize_rulebase(res.rulebase) == text


TOKENS = ["variable", "output", "range", "term", "tri", "trap", "rule", "IF", "AND", "OR", "IS",
          "THEN", "weight", "defuzz", "resolution", "{", "}", "\n", "A", "x", "Out", "y", "0", "1",
          "0.5", "-3", "10", "1e999", "COA", "@", "#c"]


@settings(max_examples=300, deadline=None)
@given(st.lists(st.sampled_from(TOKENS), max_size=40))
def test_random_token_streams_never_crash(tokens):
    text = " ".join(tokens)
    res = parse_rulebase(MINIMAL + text)
    lines = (MINIMAL + text).split("\n")
    if res.ok:
        assert not res.errors
        assert serialize_rulebase(parse_rulebase(serialize_rulebase(res.rulebase)).rulebase) == \
            serialize_rulebase(res.rulebase)
    else:
        assert res.errors
    for d in res.diagnostics:
        if d.line is not None:
            assert 1 <= d.line <= len(lines)
            assert 1 <= d.column <= len(lines[d.line - 1]) + 1


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=200))
def test_arbitrary_text_never_crashes(text):
    res = parse_rulebase(text)
    assert res.ok or res.errors
