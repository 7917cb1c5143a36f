"""Mamdani fuzzy inference: membership functions, rules, aggregation, defuzzification.

Everything here is immutable. Inference is min for AND, truncation for
implication and pointwise max for aggregation, evaluated on a uniform grid
spanning the output universe.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

MIN_RESOLUTION = 101
DEFAULT_RESOLUTION = 1001


class FuzzyError(Exception):
    """Base class for errors raised by the inference engine."""


class DefinitionError(FuzzyError, ValueError):
    """A membership function, variable or rule violates its invariants."""


class OutOfRangeError(FuzzyError, ValueError):
    """A crisp value lies outside a variable's universe of discourse."""

    def __init__(self, variable: str, value: float, lo: float, hi: float):
        super().__init__(
            f"{variable}: value {format_number(value)} outside universe "
            f"[{format_number(lo)}, {format_number(hi)}]"
        )
        self.variable = variable
        self.value = value


class UnresolvedReferenceError(FuzzyError, LookupError):
    """A rule names a variable or term that does not exist."""


class NoActivationError(FuzzyError):
    """No rule fired, so the aggregated set is empty and cannot be defuzzified."""


def format_number(x: float) -> str:
    """Shortest decimal text that parses back to ``x`` ("1", "2.5", "0.1")."""
    x = float(x)
    if x == 0:
        return "0"
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


class MFKind(str, enum.Enum):
    TRIANGULAR = "tri"
    TRAPEZOIDAL = "trap"


@dataclass(frozen=True)
class MembershipFunction:
    """Piecewise-linear fuzzy set: ``tri(a, b, c)`` or ``trap(a, b, c, d)``."""

    kind: MFKind
    params: tuple[float, ...]

    def __post_init__(self):
        kind = MFKind(self.kind)
        params = tuple(float(p) for p in self.params)
        expected = 3 if kind is MFKind.TRIANGULAR else 4
        if len(params) != expected:
            raise DefinitionError(f"{kind.value} needs {expected} parameters, got {len(params)}")
        if not all(math.isfinite(p) for p in params):
            raise DefinitionError(f"{kind.value} parameters must be finite: {params}")
        if any(p > q for p, q in zip(params, params[1:])):
            raise DefinitionError(f"{kind.value} parameters must be non-decreasing: {params}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", params)

    @classmethod
    def tri(cls, a: float, b: float, c: float) -> "MembershipFunction":
        return cls(MFKind.TRIANGULAR, (a, b, c))

    @classmethod
    def trap(cls, a: float, b: float, c: float, d: float) -> "MembershipFunction":
        return cls(MFKind.TRAPEZOIDAL, (a, b, c, d))

    @property
    def corners(self) -> tuple[float, float, float, float]:
        """The four trapezoid corners; a triangle has a one-point plateau."""
        if self.kind is MFKind.TRIANGULAR:
            a, b, c = self.params
            return a, b, b, c
        return self.params  # type: ignore[return-value]

    @property
    def support(self) -> tuple[float, float]:
        a, _, _, d = self.corners
        return a, d

    @property
    def peak(self) -> float:
        """Midpoint of the plateau where the degree is 1."""
        _, b, c, _ = self.corners
        return (b + c) / 2

    def __call__(self, x):
        return eval_mf(self, x)


def eval_mf(mf: MembershipFunction, x):
    """Degree of membership of ``x``; accepts a scalar or an array."""
    a, b, c, d = mf.corners
    if np.ndim(x) == 0:
        x = float(x)
        if x < a or x > d:
            return 0.0
        if b <= x <= c:
            return 1.0
        if x < b:
            return (x - a) / (b - a)
        return (d - x) / (d - c)

    x = np.asarray(x, dtype=float)
    mu = np.zeros_like(x)
    mu[(x >= b) & (x <= c)] = 1.0
    if b > a:
        rising = (x >= a) & (x < b)
        mu[rising] = (x[rising] - a) / (b - a)
    if d > c:
        falling = (x > c) & (x <= d)
        mu[falling] = (d - x[falling]) / (d - c)
    return mu


@dataclass(frozen=True)
class Term:
    name: str
    mf: MembershipFunction
    line: int | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class LinguisticVariable:
    """A named universe ``[lo, hi]`` with terms listed in severity order."""

    name: str
    lo: float
    hi: float
    terms: tuple[Term, ...]
    line: int | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.lo < self.hi:
            raise DefinitionError(f"{self.name}: empty universe [{self.lo}, {self.hi}]")
        seen = set()
        for term in self.terms:
            if term.name in seen:
                raise DefinitionError(f"{self.name}: duplicate term {term.name!r}")
            seen.add(term.name)
            lo, hi = term.mf.support
            if lo < self.lo or hi > self.hi:
                raise DefinitionError(
                    f"{self.name}.{term.name}: support [{lo}, {hi}] leaves the universe"
                )

    @property
    def term_names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.terms)

    def term(self, name: str) -> Term:
        for t in self.terms:
            if t.name == name:
                return t
        raise UnresolvedReferenceError(f"{self.name} has no term {name!r}")

    def index(self, name: str) -> int:
        return self.term_names.index(name)

    def grid(self, resolution: int) -> np.ndarray:
        return np.linspace(self.lo, self.hi, resolution)


@dataclass(frozen=True)
class FuzzifiedInput:
    variable: str
    degrees: Mapping[str, float]

    def __getitem__(self, term: str) -> float:
        return self.degrees[term]


def fuzzify(var: LinguisticVariable, x: float) -> FuzzifiedInput:
    x = float(x)
    if not var.lo <= x <= var.hi:
        raise OutOfRangeError(var.name, x, var.lo, var.hi)
    return FuzzifiedInput(var.name, {t.name: eval_mf(t.mf, x) for t in var.terms})


@dataclass(frozen=True)
class Rule:
    """``IF v1 IS t1 AND ... THEN out IS t`` with an optional weight."""

    antecedents: tuple[tuple[str, str], ...]
    consequent: tuple[str, str]
    weight: float = 1.0
    line: int | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        ants = tuple((str(v), str(t)) for v, t in self.antecedents)
        object.__setattr__(self, "antecedents", ants)
        object.__setattr__(self, "consequent", tuple(self.consequent))
        object.__setattr__(self, "weight", float(self.weight))
        if not ants:
            raise DefinitionError("rule needs at least one antecedent")
        names = [v for v, _ in ants]
        if len(set(names)) != len(names):
            raise DefinitionError(f"rule names a variable twice: {names}")
        if not 0.0 <= self.weight <= 1.0:
            raise DefinitionError(f"rule weight {self.weight} outside [0, 1]")

    @property
    def pattern(self) -> frozenset[tuple[str, str]]:
        return frozenset(self.antecedents)

    def to_text(self) -> str:
        text = " AND ".join(f"{v} IS {t}" for v, t in self.antecedents)
        text = f"IF {text} THEN {self.consequent[0]} IS {self.consequent[1]}"
        if self.weight != 1.0:
            text += f" weight {format_number(self.weight)}"
        return text

    def __str__(self):
        return self.to_text()


@dataclass(frozen=True)
class RuleBase:
    """Input variables, one output variable and the rules relating them.

    Construction checks that every name resolves. Duplicate antecedent
    patterns are reported by :func:`dreadfuzz.dsl.validate` instead, and
    parsing refuses them.
    """

    inputs: tuple[LinguisticVariable, ...]
    output: LinguisticVariable
    rules: tuple[Rule, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "rules", tuple(self.rules))
        names = [v.name for v in self.inputs] + [self.output.name]
        if len(set(names)) != len(names):
            raise DefinitionError(f"duplicate variable names: {names}")
        by_name = self.variables
        for rule in self.rules:
            for var, term in rule.antecedents:
                if var not in by_name or var == self.output.name:
                    raise UnresolvedReferenceError(f"unknown input variable {var!r} in: {rule}")
                by_name[var].term(term)
            out, term = rule.consequent
            if out != self.output.name:
                raise UnresolvedReferenceError(f"consequent must use {self.output.name!r}: {rule}")
            self.output.term(term)

    @property
    def variables(self) -> dict[str, LinguisticVariable]:
        return {v.name: v for v in (*self.inputs, self.output)}

    def input(self, name: str) -> LinguisticVariable:
        for v in self.inputs:
            if v.name == name:
                return v
        raise UnresolvedReferenceError(f"no input variable {name!r}")


class Defuzz(str, enum.Enum):
    COA = "COA"
    BOA = "BOA"
    MOM = "MOM"
    SOM = "SOM"
    LOM = "LOM"

    @classmethod
    def parse(cls, value) -> "Defuzz":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown defuzzification method {value!r} (choose {choices})") from None


@dataclass(frozen=True)
class InferenceConfig:
    """Defuzzification method and output grid size; min/max operators are fixed."""

    defuzz: Defuzz = Defuzz.COA
    resolution: int = DEFAULT_RESOLUTION

    def __post_init__(self):
        object.__setattr__(self, "defuzz", Defuzz.parse(self.defuzz))
        if int(self.resolution) != self.resolution:
            raise ValueError(f"resolution must be an integer, got {self.resolution!r}")
        object.__setattr__(self, "resolution", int(self.resolution))
        if self.resolution < MIN_RESOLUTION:
            raise ValueError(f"resolution below minimum {MIN_RESOLUTION}")


@dataclass(frozen=True, eq=False)
class AggregatedSet:
    variable: str
    x: np.ndarray
    mu: np.ndarray

    @property
    def lo(self) -> float:
        return float(self.x[0])

    @property
    def hi(self) -> float:
        return float(self.x[-1])

    @property
    def height(self) -> float:
        return float(self.mu.max()) if self.mu.size else 0.0

    def support(self) -> tuple[float, float] | None:
        nz = np.flatnonzero(self.mu > 0)
        if nz.size == 0:
            return None
        return float(self.x[nz[0]]), float(self.x[nz[-1]])

    def area(self) -> float:
        return float(np.trapezoid(self.mu, self.x))


def fire_rule(rule: Rule, inputs: Iterable[FuzzifiedInput] | Mapping[str, FuzzifiedInput]) -> float:
    """Activation degree: weight times the minimum antecedent degree."""
    if not isinstance(inputs, Mapping):
        inputs = {f.variable: f for f in inputs}
    degree = 1.0
    for var, term in rule.antecedents:
        try:
            d = inputs[var].degrees[term]
        except KeyError:
            raise UnresolvedReferenceError(f"cannot resolve {var} IS {term} in: {rule}") from None
        if d < degree:
            degree = d
    return rule.weight * degree


@functools.lru_cache(maxsize=256)
def _sampled(mf: MembershipFunction, lo: float, hi: float, resolution: int) -> np.ndarray:
    mu = eval_mf(mf, np.linspace(lo, hi, resolution))
    mu.setflags(write=False)
    return mu


def aggregate(
    output: LinguisticVariable,
    activations: Iterable[tuple[str, float]],
    resolution: int = DEFAULT_RESOLUTION,
) -> AggregatedSet:
    """Pointwise max of each consequent term truncated at its activation."""
    x = output.grid(resolution)
    mu = np.zeros(resolution)
    for term, level in activations:
        if level <= 0:
            continue
        clipped = np.minimum(_sampled(output.term(term).mf, output.lo, output.hi, resolution), level)
        np.maximum(mu, clipped, out=mu)
    return AggregatedSet(output.name, x, mu)


def defuzzify(agg: AggregatedSet, method=Defuzz.COA) -> float:
    method = Defuzz.parse(method)
    x, mu = agg.x, agg.mu
    if mu.size == 0 or not np.any(mu > 0):
        raise NoActivationError(f"{agg.variable}: aggregated set is empty")

    if method is Defuzz.COA:
        value = float(np.dot(x, mu) / mu.sum())
    elif method is Defuzz.BOA:
        # cumulative trapezoidal area, first grid point reaching half of it
        steps = np.diff(x) * (mu[1:] + mu[:-1]) / 2
        cumulative = np.concatenate(([0.0], np.cumsum(steps)))
        total = cumulative[-1]
        if total <= 0:
            # isolated single-sample spike
            value = float(x[np.argmax(mu)])
        else:
            half = total / 2 * (1 - 1e-12)
            value = float(x[np.searchsorted(cumulative, half, side="left")])
    else:
        top = mu.max()
        at_max = x[np.isclose(mu, top, rtol=0, atol=1e-9)]
        if method is Defuzz.SOM:
            value = float(at_max[0])
        elif method is Defuzz.LOM:
            value = float(at_max[-1])
        else:
            value = float(at_max.mean())
    return min(max(value, agg.lo), agg.hi)


class InferenceResult(NamedTuple):
    crisp: float
    fired: list[tuple[Rule, float]]
    aggregated: AggregatedSet


def infer(
    rb: RuleBase,
    cfg: InferenceConfig | None = None,
    inputs: Mapping[str, float] | None = None,
) -> InferenceResult:
    """Run the Mamdani pipeline on one vector of crisp inputs."""
    cfg = cfg or InferenceConfig()
    inputs = dict(inputs or {})
    expected = {v.name for v in rb.inputs}
    missing = expected - inputs.keys()
    extra = inputs.keys() - expected
    if missing or extra:
        raise UnresolvedReferenceError(
            f"inputs must match variables {sorted(expected)}; "
            f"missing {sorted(missing)}, unexpected {sorted(extra)}"
        )
    fuzzified = {v.name: fuzzify(v, inputs[v.name]) for v in rb.inputs}

    fired: list[tuple[Rule, float]] = []
    levels: dict[str, float] = {}
    for rule in rb.rules:
        act = fire_rule(rule, fuzzified)
        if act > 0:
            fired.append((rule, act))
            term = rule.consequent[1]
            if act > levels.get(term, 0.0):
                levels[term] = act

    agg = aggregate(rb.output, levels.items(), cfg.resolution)
    if not np.any(agg.mu > 0):
        raise NoActivationError(
            f"no rule fired for inputs {', '.join(f'{k}={format_number(v)}' for k, v in inputs.items())}"
        )
    return InferenceResult(defuzzify(agg, cfg.defuzz), fired, agg)


def defuzzify_all(agg: AggregatedSet) -> dict[str, float]:
    return {m.value: defuzzify(agg, m) for m in Defuzz}


def coverage_gaps(var: LinguisticVariable, samples: int = 101) -> list[tuple[float, float]]:
    """Closed intervals of sample points where every term has degree zero."""
    xs = var.grid(samples)
    covered = np.zeros(samples, dtype=bool)
    for t in var.terms:
        covered |= eval_mf(t.mf, xs) > 0
    gaps = []
    start = None
    for i, ok in enumerate(covered):
        if not ok and start is None:
            start = i
        elif ok and start is not None:
            gaps.append((float(xs[start]), float(xs[i - 1])))
            start = None
    if start is not None:
        gaps.append((float(xs[start]), float(xs[-1])))
    return gaps


def rule_patterns(rules: Sequence[Rule]) -> dict[frozenset, list[Rule]]:
    groups: dict[frozenset, list[Rule]] = {}
    for r in rules:
        groups.setdefault(r.pattern, []).append(r)
    return groups
