"""Ranking a catalog and emitting text, CSV and JSON reports.

Run: python demos/04_ranked_report.py
"""

from pathlib import Path

import dreadfuzz
from dreadfuzz import ActionPolicy, InferenceConfig, build_report, default_rulebase, emit_report, load_catalog
from dreadfuzz.catalog import report_from_json

records = load_catalog(Path(dreadfuzz.__file__).parent / "data" / "gwis.csv")
rb = default_rulebase()

report = build_report(records, rb, InferenceConfig(), rulebase_path="<embedded>", timestamp=None)
print(emit_report(report, "text"))
print(emit_report(report, "csv"))

# A stricter policy moves the thresholds down.
strict = ActionPolicy((10, 20, 30), ("accept", "transfer", "mitigate", "remove"))
strict_report = build_report(records, rb, InferenceConfig(), rulebase_path="<embedded>",
                             timestamp=None, policy=strict)
print(emit_report(strict_report, "csv"))

# JSON round-trips.
text = emit_report(report, "json")
assert report_from_json(text) == report
print(f"json report: {len(text)} bytes, round-trip ok")
