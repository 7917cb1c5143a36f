"""Reading, writing and checking ``.frb`` rule-base documents.

A document is line oriented::

    # comment
    defuzz COA
    resolution 1001

    variable DamagePotential range 0 10 {
        term Negligible trap 0 0 1 2
        term Slight tri 1 2.5 4
    }

    output RiskLevel range 0 50 {
        term Low tri 0 10 20
    }

    rule IF DamagePotential IS Slight THEN RiskLevel IS Low weight 0.5

Keywords are matched case-insensitively and may not be used as names.
Names are case-sensitive.
"""

from __future__ import annotations

import enum
import itertools
import math
import random
import re
from dataclasses import dataclass, field
from pathlib import Path

from .fuzzy import (
    Defuzz,
    FuzzyError,
    InferenceConfig,
    LinguisticVariable,
    MembershipFunction,
    MFKind,
    Rule,
    RuleBase,
    Term,
    coverage_gaps,
    format_number,
    rule_patterns,
)

KEYWORDS = frozenset(
    "variable output range term tri trap rule if and or is then weight defuzz resolution".split()
)

# combinations of input terms enumerated exhaustively below this count, sampled above
_REGION_ENUMERATION_LIMIT = 100_000
_REGION_SAMPLES = 20_000


class Severity(str, enum.Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    line: int | None
    column: int | None
    message: str
    code: str

    def format(self, source: str | None = None) -> str:
        where = source or "<input>"
        if self.line is not None:
            where += f":{self.line}:{self.column or 1}"
        return f"{where}: {self.severity.value}[{self.code}]: {self.message}"

    def __str__(self):
        return self.format()


def _error(code, message, line=None, column=None):
    return Diagnostic(Severity.ERROR, line, column, message, code)


def _warning(code, message, line=None, column=None):
    return Diagnostic(Severity.WARNING, line, column, message, code)


@dataclass
class ParseResult:
    rulebase: RuleBase | None
    config: dict = field(default_factory=dict)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity is Severity.ERROR]

    @property
    def warnings(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity is Severity.WARNING]

    @property
    def ok(self) -> bool:
        return self.rulebase is not None

    def inference_config(self, base: InferenceConfig | None = None) -> InferenceConfig:
        base = base or InferenceConfig()
        return InferenceConfig(
            defuzz=self.config.get("defuzz", base.defuzz),
            resolution=self.config.get("resolution", base.resolution),
        )


class RuleBaseSyntaxError(FuzzyError, ValueError):
    """Raised by :func:`load_rulebase` when a document has errors."""

    def __init__(self, diagnostics, source=None):
        self.diagnostics = list(diagnostics)
        self.source = source
        errors = [d for d in self.diagnostics if d.severity is Severity.ERROR]
        super().__init__("\n".join(d.format(source) for d in errors))


_TOKEN = re.compile(
    r"(?P<ws>[ \t\r\f\v]+)"
    r"|(?P<comment>#[^\n]*)"
    r"|(?P<nl>\n)"
    r"|(?P<brace>[{}])"
    r"|(?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?(?![A-Za-z0-9_.]))"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<bad>\S[^\s{}#]*)"
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int

    @property
    def kw(self) -> str | None:
        if self.kind == "ident" and self.text.lower() in KEYWORDS:
            return self.text.lower()
        return None


def _tokenize(text: str) -> list[list[_Tok]]:
    """Tokens grouped by physical line; comments and whitespace dropped."""
    lines: list[list[_Tok]] = [[]]
    line, line_start = 1, 0
    for m in _TOKEN.finditer(text):
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
            lines.append([])
        elif kind not in ("ws", "comment"):
            lines[-1].append(_Tok(kind, m.group(), line, m.start() - line_start + 1))
    return lines


class _LineError(Exception):
    def __init__(self, diag):
        self.diag = diag


@dataclass
class _VarDraft:
    name: str
    lo: float
    hi: float
    is_output: bool
    line: int
    col: int
    terms: list = field(default_factory=list)  # (name, kind, params, tok)


class _Cursor:
    def __init__(self, toks: list[_Tok], eol: tuple[int, int]):
        self.toks = toks
        self.i = 0
        self.eol = eol

    def done(self):
        return self.i >= len(self.toks)

    def peek(self):
        return None if self.done() else self.toks[self.i]

    def _where(self):
        tok = self.peek()
        return (tok.line, tok.col) if tok else self.eol

    def fail(self, code, message):
        raise _LineError(_error(code, message, *self._where()))

    def next(self, what):
        tok = self.peek()
        if tok is None:
            self.fail("syntax", f"expected {what}, found end of line")
        self.i += 1
        return tok

    def keyword(self, kw):
        tok = self.peek()
        if tok is None or tok.kw != kw:
            found = "end of line" if tok is None else repr(tok.text)
            self.fail("syntax", f"expected {kw!r}, found {found}")
        self.i += 1
        return tok

    def name(self, what):
        tok = self.next(what)
        if tok.kind != "ident":
            self.i -= 1
            self.fail("syntax", f"expected {what}, found {tok.text!r}")
        if tok.kw:
            self.i -= 1
            self.fail("reserved-keyword", f"{tok.text!r} is a keyword and cannot name a {what}")
        return tok

    def number(self, what):
        tok = self.next(what)
        if tok.kind != "num":
            self.i -= 1
            self.fail("syntax", f"expected number for {what}, found {tok.text!r}")
        value = float(tok.text)
        if not math.isfinite(value):
            self.i -= 1
            self.fail("bad-number", f"{what} {tok.text!r} is not a finite number")
        return value


def parse_rulebase(text: str) -> ParseResult:
    """Parse a document; the result carries a RuleBase only if there are no errors."""
    diags: list[Diagnostic] = []
    raw_lines = text.split("\n")
    token_lines = _tokenize(text)
    config: dict = {}
    drafts: list[_VarDraft] = []
    rule_drafts: list[tuple] = []  # (antecedent toks, consequent toks, weight, line)
    block: _VarDraft | None = None
    block_open = False  # inside braces, block may be None after a bad header
    block_line = (1, 1)

    for lineno, toks in enumerate(token_lines, start=1):
        eol = (lineno, len(raw_lines[lineno - 1]) + 1)
        cur = _Cursor(toks, eol)
        try:
            for tok in toks:
                if tok.kind == "bad":
                    raise _LineError(_error("syntax", f"unexpected character(s) {tok.text!r}", tok.line, tok.col))
            while not cur.done():
                if block_open:
                    tok = cur.peek()
                    if tok.kind == "brace" and tok.text == "}":
                        cur.next("'}'")
                        if block is not None:
                            drafts.append(block)
                        block, block_open = None, False
                        continue
                    cur.keyword("term")
                    name = cur.name("term name")
                    shape = cur.next("'tri' or 'trap'")
                    if shape.kw not in ("tri", "trap"):
                        cur.i -= 1
                        cur.fail("syntax", f"expected 'tri' or 'trap', found {shape.text!r}")
                    count = 3 if shape.kw == "tri" else 4
                    params = tuple(cur.number("membership parameter") for _ in range(count))
                    if block is not None:
                        block.terms.append((name.text, shape.kw, params, name))
                    continue

                head = cur.peek()
                if head.kw in ("variable", "output"):
                    cur.next("declaration")
                    try:
                        name = cur.name("variable name")
                        cur.keyword("range")
                        lo = cur.number("range lower bound")
                        hi = cur.number("range upper bound")
                        brace = cur.next("'{'")
                        if brace.text != "{":
                            cur.i -= 1
                            cur.fail("syntax", f"expected '{{', found {brace.text!r}")
                    except _LineError:
                        # keep the block structure so following term lines are not misread
                        if any(t.kind == "brace" and t.text == "{" for t in toks):
                            block, block_open, block_line = None, True, (head.line, head.col)
                        raise
                    block = _VarDraft(name.text, lo, hi, head.kw == "output", head.line, head.col)
                    block_open, block_line = True, (head.line, head.col)
                elif head.kw == "rule":
                    cur.next("rule")
                    rule_drafts.append(_parse_rule(cur, head))
                elif head.kw == "defuzz":
                    cur.next("defuzz")
                    tok = cur.next("defuzzification method")
                    try:
                        config["defuzz"] = Defuzz.parse(tok.text)
                    except ValueError as exc:
                        raise _LineError(_error("bad-config", str(exc), tok.line, tok.col)) from None
                elif head.kw == "resolution":
                    cur.next("resolution")
                    tok = cur.peek()
                    value = cur.number("resolution")
                    try:
                        config["resolution"] = InferenceConfig(resolution=value).resolution
                    except ValueError as exc:
                        raise _LineError(_error("bad-config", str(exc), tok.line, tok.col)) from None
                elif head.kw == "term":
                    cur.fail("syntax", "'term' outside a variable block")
                elif head.kind == "brace":
                    cur.fail("syntax", f"unexpected {head.text!r}")
                else:
                    cur.fail("syntax", f"expected a declaration, found {head.text!r}")
        except _LineError as exc:
            diags.append(exc.diag)

    if block_open:
        diags.append(_error("unclosed-block", "variable block is never closed with '}'", *block_line))

    rb = None
    if not diags:
        rb = _build(drafts, rule_drafts, diags, raw_lines)
    if rb is not None:
        diags.extend(validate(rb))
        if any(d.severity is Severity.ERROR for d in diags):
            rb = None
    return ParseResult(rb, config, diags)


def _parse_rule(cur: _Cursor, head: _Tok):
    cur.keyword("if")
    ants = []
    while True:
        var = cur.name("variable name")
        cur.keyword("is")
        term = cur.name("term name")
        ants.append((var, term))
        tok = cur.peek()
        if tok is not None and tok.kw == "or":
            cur.fail("unsupported-or", "OR is reserved; only AND-joined antecedents are supported")
        if tok is not None and tok.kw == "and":
            cur.next("AND")
            continue
        break
    cur.keyword("then")
    out = cur.name("output variable")
    cur.keyword("is")
    out_term = cur.name("output term")
    weight, weight_tok = 1.0, None
    if not cur.done():
        weight_tok = cur.peek()
        cur.keyword("weight")
        weight_tok = cur.peek() or weight_tok
        weight = cur.number("weight")
    if not cur.done():
        cur.fail("syntax", f"unexpected {cur.peek().text!r} after rule")
    return ants, (out, out_term), weight, weight_tok, head


def _build(drafts, rule_drafts, diags, raw_lines) -> RuleBase | None:
    outputs = [d for d in drafts if d.is_output]
    inputs = [d for d in drafts if not d.is_output]
    last = (len(raw_lines), len(raw_lines[-1]) + 1)
    if not outputs:
        diags.append(_error("missing-output", "document declares no output variable", *last))
    for extra in outputs[1:]:
        diags.append(_error("duplicate-output", f"second output variable {extra.name!r}", extra.line, extra.col))
    if not inputs:
        diags.append(_error("missing-input", "document declares no input variable", *last))

    seen_vars = set()
    built: dict[str, LinguisticVariable] = {}
    for d in drafts:
        if d.name in seen_vars:
            diags.append(_error("duplicate-variable", f"variable {d.name!r} declared twice", d.line, d.col))
            continue
        seen_vars.add(d.name)
        ok = True
        if not d.lo < d.hi:
            diags.append(_error("bad-range", f"{d.name}: range {format_number(d.lo)} {format_number(d.hi)} is empty", d.line, d.col))
            ok = False
        terms, seen_terms = [], set()
        for name, kind, params, tok in d.terms:
            if name in seen_terms:
                diags.append(_error("duplicate-term", f"{d.name}: term {name!r} defined twice", tok.line, tok.col))
                ok = False
                continue
            seen_terms.add(name)
            if any(p > q for p, q in zip(params, params[1:])):
                shown = " ".join(format_number(p) for p in params)
                diags.append(_error("bad-mf-params", f"{d.name}.{name}: parameters must be non-decreasing ({kind} {shown})", tok.line, tok.col))
                ok = False
                continue
            if params[0] < d.lo or params[-1] > d.hi:
                diags.append(_error("term-outside-universe", f"{d.name}.{name}: support [{format_number(params[0])}, {format_number(params[-1])}] leaves range [{format_number(d.lo)}, {format_number(d.hi)}]", tok.line, tok.col))
                ok = False
                continue
            terms.append(Term(name, MembershipFunction(MFKind(kind), params), line=tok.line))
        if not d.terms:
            diags.append(_error("no-terms", f"variable {d.name!r} has no terms", d.line, d.col))
            ok = False
        if ok:
            built[d.name] = LinguisticVariable(d.name, d.lo, d.hi, tuple(terms), line=d.line)

    output_name = outputs[0].name if outputs else None
    rules = []
    for ants, (out, out_term), weight, weight_tok, head in rule_drafts:
        ok = True
        used = set()
        for var, term in ants:
            if var.text == output_name:
                diags.append(_error("output-in-antecedent", f"output {var.text!r} cannot appear in a condition", var.line, var.col))
                ok = False
            elif var.text not in seen_vars:
                diags.append(_error("unknown-variable", f"unknown variable {var.text!r}", var.line, var.col))
                ok = False
            elif var.text in built and term.text not in built[var.text].term_names:
                diags.append(_error("unknown-term", f"{var.text} has no term {term.text!r}", term.line, term.col))
                ok = False
            if var.text in used:
                diags.append(_error("repeated-antecedent", f"{var.text!r} appears twice in one rule", var.line, var.col))
                ok = False
            used.add(var.text)
        if out.text != output_name:
            code = "unknown-variable" if out.text not in seen_vars else "not-output"
            diags.append(_error(code, f"{out.text!r} is not the output variable", out.line, out.col))
            ok = False
        elif out.text in built and out_term.text not in built[out.text].term_names:
            diags.append(_error("unknown-term", f"{out.text} has no term {out_term.text!r}", out_term.line, out_term.col))
            ok = False
        if not 0.0 <= weight <= 1.0:
            diags.append(_error("bad-weight", f"weight {format_number(weight)} outside [0, 1]", weight_tok.line, weight_tok.col))
            ok = False
        if ok:
            rules.append(Rule(tuple((v.text, t.text) for v, t in ants), (out.text, out_term.text), weight, line=head.line))

    if diags:
        return None
    try:
        return RuleBase(
            tuple(built[d.name] for d in inputs),
            built[output_name],
            tuple(rules),
        )
    except FuzzyError as exc:  # pragma: no cover - guarded by the checks above
        diags.append(_error("invalid", str(exc), 1, 1))
        return None


def validate(rb: RuleBase) -> list[Diagnostic]:
    """Report coverage gaps, duplicate patterns, unreachable regions and unused terms."""
    diags: list[Diagnostic] = []

    for var in (*rb.inputs, rb.output):
        for lo, hi in coverage_gaps(var):
            diags.append(_warning(
                "coverage-gap",
                f"{var.name}: no term covers [{format_number(lo)}, {format_number(hi)}]",
                var.line, 1 if var.line else None,
            ))

    for pattern, group in rule_patterns(rb.rules).items():
        if len(group) < 2:
            continue
        first = group[0]
        consequents = {r.consequent for r in group}
        code = "conflicting-rules" if len(consequents) > 1 else "duplicate-rule"
        for r in group[1:]:
            where = f" (first at line {first.line})" if first.line else ""
            diags.append(_error(code, f"antecedents repeat an earlier rule{where}: {r}", r.line, 1 if r.line else None))

    if not rb.rules:
        line = rb.output.line
        diags.append(_warning("empty-rulebase", "rule base has no rules; inference will always fail", line, 1 if line else None))
        return diags

    used_inputs = {pair for r in rb.rules for pair in r.antecedents}
    for var in rb.inputs:
        for t in var.terms:
            if (var.name, t.name) not in used_inputs:
                diags.append(_warning("unused-term", f"{var.name}.{t.name} is never used by a rule", t.line, 1 if t.line else None))
    used_outputs = {r.consequent[1] for r in rb.rules}
    for t in rb.output.terms:
        if t.name not in used_outputs:
            diags.append(_warning("unused-term", f"{rb.output.name}.{t.name} is never a consequent", t.line, 1 if t.line else None))

    diags.extend(_unreachable_regions(rb))
    return diags


def _unreachable_regions(rb: RuleBase) -> list[Diagnostic]:
    """Combinations of one term per input under which no rule can fire."""
    names = [v.name for v in rb.inputs]
    term_lists = [v.term_names for v in rb.inputs]
    total = math.prod(len(t) for t in term_lists)
    if total == 0:
        return []
    # rules with weight 0 never fire
    keyed: dict[tuple[str, ...], set] = {}
    for r in rb.rules:
        if r.weight <= 0:
            continue
        vars_ = tuple(sorted(v for v, _ in r.antecedents))
        lookup = dict(r.antecedents)
        keyed.setdefault(vars_, set()).add(tuple(lookup[v] for v in vars_))
    index = {n: i for i, n in enumerate(names)}
    projections = [(tuple(index[v] for v in vars_), combos) for vars_, combos in keyed.items()]

    if total <= _REGION_ENUMERATION_LIMIT:
        combos = itertools.product(*term_lists)
        sampled = False
    else:
        rng = random.Random(0)
        combos = (tuple(rng.choice(ts) for ts in term_lists) for _ in range(_REGION_SAMPLES))
        sampled = True

    dead = 0
    example = None
    for combo in combos:
        if not any(tuple(combo[i] for i in idx) in allowed for idx, allowed in projections):
            dead += 1
            if example is None:
                example = combo
    if not dead:
        return []
    shown = ", ".join(f"{n} IS {t}" for n, t in zip(names, example))
    scope = f"{dead} of {_REGION_SAMPLES} sampled" if sampled else f"{dead} of {total}"
    line = rb.rules[0].line
    return [_warning("no-rule-region", f"{scope} input term combinations fire no rule, e.g. {shown}", line, 1 if line else None)]


def _format_variable(var: LinguisticVariable, keyword: str) -> list[str]:
    lines = [f"{keyword} {var.name} range {format_number(var.lo)} {format_number(var.hi)} {{"]
    for t in var.terms:
        params = " ".join(format_number(p) for p in t.mf.params)
        lines.append(f"    term {t.name} {t.mf.kind.value} {params}")
    lines.append("}")
    return lines


def serialize_rulebase(rb: RuleBase, config: InferenceConfig | dict | None = None) -> str:
    """Canonical text: config, inputs in order, the output, then one rule per line."""
    out: list[str] = []
    if isinstance(config, InferenceConfig):
        config = {"defuzz": config.defuzz, "resolution": config.resolution}
    if config:
        if "defuzz" in config:
            out.append(f"defuzz {Defuzz.parse(config['defuzz']).value}")
        if "resolution" in config:
            out.append(f"resolution {int(config['resolution'])}")
        out.append("")
    for var in rb.inputs:
        out.extend(_format_variable(var, "variable"))
        out.append("")
    out.extend(_format_variable(rb.output, "output"))
    if rb.rules:
        out.append("")
        out.extend(f"rule {r.to_text()}" for r in rb.rules)
    return "\n".join(out) + "\n"


def load_rulebase(path) -> tuple[RuleBase, ParseResult]:
    """Read and parse a file, raising :class:`RuleBaseSyntaxError` on errors.

    ``OSError`` and ``UnicodeDecodeError`` propagate unchanged.
    """
    path = Path(path)
    result = parse_rulebase(path.read_text(encoding="utf-8"))
    if not result.ok:
        raise RuleBaseSyntaxError(result.diagnostics, str(path))
    return result.rulebase, result
