"""Fuzzy DREAD threat prioritization.

A Mamdani inference engine, a text format for rule bases, the DREAD
variables and default rule base, and catalog ranking/reporting.
"""

from .catalog import (
    DEFAULT_POLICY,
    ActionPolicy,
    CatalogError,
    RankedReport,
    ThreatRecord,
    action_hint,
    build_report,
    emit_report,
    load_catalog,
    rank,
    report_from_json,
)
from .dread import (
    Assessment,
    ConventionalResult,
    DreadScores,
    DreadValidationError,
    FuzzyBand,
    LegacyRiskInputs,
    assess,
    conventional_score,
    default_rulebase,
    dread_variables,
    generate_rules,
    label_band,
    legacy_risk,
)
from .dsl import Diagnostic, ParseResult, load_rulebase, parse_rulebase, serialize_rulebase, validate
from .fuzzy import (
    AggregatedSet,
    Defuzz,
    FuzzifiedInput,
    InferenceConfig,
    LinguisticVariable,
    MembershipFunction,
    NoActivationError,
    OutOfRangeError,
    Rule,
    RuleBase,
    Term,
    UnresolvedReferenceError,
    defuzzify,
    eval_mf,
    fire_rule,
    fuzzify,
    infer,
)

__version__ = "0.1.0"
