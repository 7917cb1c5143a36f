"""Threat catalogs: loading, batch assessment, ranking and report output."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from .dread import (
    FIELD_TO_VARIABLE,
    Assessment,
    ConventionalResult,
    DreadScores,
    FuzzyBand,
    assess,
)
from .dsl import serialize_rulebase
from .fuzzy import InferenceConfig, RuleBase, format_number

SCORE_FIELDS = tuple(FIELD_TO_VARIABLE)
REQUIRED_COLUMNS = ("id", "title", *SCORE_FIELDS)
OPTIONAL_COLUMNS = ("stride_tag", "description")
CSV_REPORT_COLUMNS = ("id", "total", "average", "rating", "fuzzy_value", "fuzzy_band", "action")
ACTIONS = ("accept", "transfer", "remove", "mitigate")
REPORT_SCHEMA_VERSION = 1


class CatalogError(ValueError):
    """A catalog could not be loaded; ``row`` is 1-based over data records."""

    def __init__(self, code: str, message: str, row: int | None = None, field: str | None = None):
        where = ""
        if row is not None:
            where = f"row {row}"
            if field:
                where += f", field {field!r}"
            where += ": "
        super().__init__(f"{where}{message}")
        self.code = code
        self.row = row
        self.field = field


@dataclass(frozen=True)
class ThreatRecord:
    id: str
    title: str
    scores: DreadScores
    description: str | None = None
    stride_tag: str | None = None


def _record(raw: dict, row: int) -> ThreatRecord:
    values = {}
    for name in SCORE_FIELDS:
        text = raw[name]
        if isinstance(text, bool) or text is None:
            raise CatalogError("malformed-number", f"expected a number, got {text!r}", row, name)
        try:
            value = float(text)
        except (TypeError, ValueError):
            raise CatalogError("malformed-number", f"expected a number, got {text!r}", row, name) from None
        if not 0 <= value <= 10:
            raise CatalogError("score-out-of-range", f"score {text} outside [0, 10]", row, name)
        values[name] = value
    ident = str(raw["id"]).strip()
    if not ident:
        raise CatalogError("missing-id", "empty id", row, "id")
    optional = {k: (str(raw[k]) if raw.get(k) not in (None, "") else None) for k in OPTIONAL_COLUMNS}
    return ThreatRecord(ident, str(raw["title"]), DreadScores(**values), **optional)


def parse_catalog(text: str, format: str) -> list[ThreatRecord]:
    format = format.lower()
    if format == "csv":
        reader = csv.DictReader(io.StringIO(text))
        header = reader.fieldnames or []
        if not header:
            raise CatalogError("no-records", "catalog is empty")
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise CatalogError("missing-column", f"missing column(s): {', '.join(missing)}")
        rows = list(reader)
        for i, raw in enumerate(rows, start=1):
            if None in raw or any(raw.get(c) is None for c in REQUIRED_COLUMNS):
                raise CatalogError("malformed-row", "wrong number of fields", i)
    elif format == "json":
        try:
            rows = json.loads(text) if text.strip() else []
        except json.JSONDecodeError as exc:
            raise CatalogError("malformed-json", f"invalid JSON: {exc}") from None
        if not isinstance(rows, list):
            raise CatalogError("malformed-json", "expected a JSON array of threat objects")
        for i, raw in enumerate(rows, start=1):
            if not isinstance(raw, dict):
                raise CatalogError("malformed-row", "expected an object", i)
            missing = [c for c in REQUIRED_COLUMNS if c not in raw]
            if missing:
                raise CatalogError("missing-column", f"missing field(s): {', '.join(missing)}", i)
    else:
        raise ValueError(f"unknown catalog format {format!r} (choose csv or json)")

    if not rows:
        raise CatalogError("no-records", "catalog contains no threats")
    records, seen = [], {}
    for i, raw in enumerate(rows, start=1):
        rec = _record(raw, i)
        if rec.id in seen:
            raise CatalogError("duplicate-id", f"id {rec.id!r} already used in row {seen[rec.id]}", i, "id")
        seen[rec.id] = i
        records.append(rec)
    return records


def load_catalog(source, format: str | None = None) -> list[ThreatRecord]:
    """Read threats from a ``.csv`` or ``.json`` file.

    ``format`` defaults to the file suffix. I/O errors propagate as ``OSError``.
    """
    path = Path(source)
    if format is None:
        format = "json" if path.suffix.lower() == ".json" else "csv"
    return parse_catalog(path.read_text(encoding="utf-8"), format)


def catalog_to_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow((*REQUIRED_COLUMNS, *OPTIONAL_COLUMNS))
    for r in records:
        writer.writerow((
            r.id, r.title,
            *(format_number(v) for v in r.scores.as_tuple()),
            r.stride_tag or "", r.description or "",
        ))
    return buf.getvalue()


@dataclass(frozen=True)
class ActionPolicy:
    """``actions[i]`` applies below ``bounds[i]``; the last action has no upper bound."""

    bounds: tuple[float, ...] = (14.0, 28.0, 35.0)
    actions: tuple[str, ...] = ("accept", "transfer", "remove", "mitigate")

    def __post_init__(self):
        object.__setattr__(self, "bounds", tuple(float(b) for b in self.bounds))
        object.__setattr__(self, "actions", tuple(self.actions))
        if len(self.actions) != len(self.bounds) + 1:
            raise ValueError("need exactly one more action than thresholds")
        if any(a >= b for a, b in zip(self.bounds, self.bounds[1:])):
            raise ValueError(f"thresholds must be strictly increasing: {self.bounds}")
        unknown = [a for a in self.actions if a not in ACTIONS]
        if unknown:
            raise ValueError(f"unknown action(s) {unknown}; choose from {ACTIONS}")

    def action_for(self, value: float) -> str:
        for bound, action in zip(self.bounds, self.actions):
            if value < bound:
                return action
        return self.actions[-1]


DEFAULT_POLICY = ActionPolicy()


def action_hint(a: Assessment, policy: ActionPolicy = DEFAULT_POLICY) -> str:
    return policy.action_for(a.fuzzy_value)


def rulebase_hash(rb: RuleBase) -> str:
    return hashlib.sha256(serialize_rulebase(rb).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RankedReport:
    assessments: tuple[Assessment, ...]
    rulebase_path: str
    rulebase_hash: str
    config: InferenceConfig = field(default_factory=InferenceConfig)
    policy: ActionPolicy = DEFAULT_POLICY
    timestamp: str | None = None


def rank_key(a: Assessment):
    return (-a.fuzzy_value, -a.conventional.total, a.threat_id)


def rank(
    assessments,
    *,
    rulebase_path: str = "<embedded>",
    rulebase_hash: str = "",
    config: InferenceConfig | None = None,
    policy: ActionPolicy = DEFAULT_POLICY,
    timestamp: str | None = None,
) -> RankedReport:
    """Order by fuzzy value, then conventional total (both descending), then id."""
    assessments = list(assessments)
    if not assessments:
        raise ValueError("cannot rank an empty list of assessments")
    return RankedReport(
        tuple(sorted(assessments, key=rank_key)),
        rulebase_path,
        rulebase_hash,
        config or InferenceConfig(),
        policy,
        timestamp,
    )


def assess_catalog(records, rb: RuleBase, cfg: InferenceConfig | None = None) -> list[Assessment]:
    cfg = cfg or InferenceConfig()
    return [assess(r.scores, rb, cfg, threat_id=r.id, title=r.title) for r in records]


def build_report(
    records,
    rb: RuleBase,
    cfg: InferenceConfig | None = None,
    *,
    rulebase_path: str = "<embedded>",
    policy: ActionPolicy = DEFAULT_POLICY,
    timestamp: str | None = None,
) -> RankedReport:
    cfg = cfg or InferenceConfig()
    return rank(
        assess_catalog(records, rb, cfg),
        rulebase_path=rulebase_path,
        rulebase_hash=rulebase_hash(rb),
        config=cfg,
        policy=policy,
        timestamp=timestamp,
    )


def fmt2(x: float) -> str:
    """Round half up to two decimals."""
    return str(Decimal(repr(float(x))).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


# -- JSON ------------------------------------------------------------------

def _assessment_to_dict(a: Assessment, policy: ActionPolicy, rank_no: int) -> dict:
    return {
        "rank": rank_no,
        "id": a.threat_id,
        "title": a.title,
        "scores": a.scores.as_dict() if a.scores else None,
        "total": a.conventional.total,
        "average": a.conventional.average,
        "rating": a.conventional.rating,
        "fuzzy_value": a.fuzzy_value,
        "fuzzy_band": {"index": a.fuzzy_band.index, "name": a.fuzzy_band.name},
        "action": policy.action_for(a.fuzzy_value),
        "fired": [{"rule": text, "activation": act} for text, act in a.fired],
    }


def report_to_dict(r: RankedReport) -> dict:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "rulebase": {"path": r.rulebase_path, "sha256": r.rulebase_hash},
        "config": {"defuzz": r.config.defuzz.value, "resolution": r.config.resolution},
        "policy": {"bounds": list(r.policy.bounds), "actions": list(r.policy.actions)},
        "timestamp": r.timestamp,
        "assessments": [_assessment_to_dict(a, r.policy, i) for i, a in enumerate(r.assessments, 1)],
    }


def report_from_json(text: str) -> RankedReport:
    doc = json.loads(text)
    assessments = []
    for item in doc["assessments"]:
        scores = DreadScores(**item["scores"]) if item.get("scores") else None
        assessments.append(Assessment(
            threat_id=item["id"],
            conventional=ConventionalResult(item["total"], item["average"], item["rating"]),
            fuzzy_value=item["fuzzy_value"],
            fuzzy_band=FuzzyBand(item["fuzzy_band"]["index"], item["fuzzy_band"]["name"]),
            fired=tuple((f["rule"], f["activation"]) for f in item["fired"]),
            title=item.get("title", ""),
            scores=scores,
        ))
    return RankedReport(
        tuple(assessments),
        doc["rulebase"]["path"],
        doc["rulebase"]["sha256"],
        InferenceConfig(doc["config"]["defuzz"], doc["config"]["resolution"]),
        ActionPolicy(tuple(doc["policy"]["bounds"]), tuple(doc["policy"]["actions"])),
        doc.get("timestamp"),
    )


# -- emitters --------------------------------------------------------------

def _csv_report(r: RankedReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_REPORT_COLUMNS)
    for a in r.assessments:
        writer.writerow((
            a.threat_id,
            fmt2(a.conventional.total),
            fmt2(a.conventional.average),
            a.conventional.rating,
            fmt2(a.fuzzy_value),
            a.fuzzy_band.name,
            r.policy.action_for(a.fuzzy_value),
        ))
    return buf.getvalue()


def _text_report(r: RankedReport) -> str:
    header = ("#", "ID", "Threat", "D", "R", "E", "A", "D", "Total", "Average",
              "Rating", "Fuzzy", "Fuzzy level", "Fired", "Action")
    rows = []
    for i, a in enumerate(r.assessments, 1):
        scores = [format_number(v) for v in a.scores.as_tuple()] if a.scores else ["-"] * 5
        rows.append((
            str(i), a.threat_id, a.title, *scores,
            fmt2(a.conventional.total), fmt2(a.conventional.average), a.conventional.rating,
            fmt2(a.fuzzy_value), f"{a.fuzzy_band.name} ({a.fuzzy_band.index})",
            str(len(a.fired)), r.policy.action_for(a.fuzzy_value),
        ))
    widths = [max(len(h), *(len(row[k]) for row in rows)) for k, h in enumerate(header)]
    numeric = {0, 3, 4, 5, 6, 7, 8, 9, 11, 13}

    def line(cells):
        return "  ".join(c.rjust(w) if k in numeric else c.ljust(w)
                         for k, (c, w) in enumerate(zip(cells, widths))).rstrip()

    out = [
        f"rule base : {r.rulebase_path}",
        f"sha256    : {r.rulebase_hash}",
        f"defuzz    : {r.config.defuzz.value} (resolution {r.config.resolution})",
    ]
    if r.timestamp:
        out.append(f"generated : {r.timestamp}")
    out.append("")
    out.append(line(header))
    out.append(line(["-" * w for w in widths]))
    out.extend(line(row) for row in rows)
    return "\n".join(out) + "\n"


def emit_report(r: RankedReport, format: str = "text") -> str:
    format = format.lower()
    if format == "json":
        return json.dumps(report_to_dict(r), indent=2) + "\n"
    if format == "csv":
        return _csv_report(r)
    if format == "text":
        return _text_report(r)
    raise ValueError(f"unknown report format {format!r} (choose text, json or csv)")
