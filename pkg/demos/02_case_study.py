"""Fuzzy and conventional scoring of the nine web application threats.

The default rule base reproduces the three distinct fuzzy values (39, 32.5
and 19) and shows how the fuzzy scale separates threats that the additive
rating lumps together.

Run: python demos/02_case_study.py
"""

from pathlib import Path

import dreadfuzz
from dreadfuzz import InferenceConfig, assess, default_rulebase, load_catalog

DATA = Path(dreadfuzz.__file__).parent / "data"

rb = default_rulebase()
cfg = InferenceConfig("COA", 1001)
print(f"rule base: {len(rb.rules)} rules over {len(rb.inputs)} inputs\n")

print(f"{'id':<4} {'scores':<18} {'total':>5} {'rating':<7} {'fuzzy':>6}  band")
for rec in load_catalog(DATA / "gwis.csv"):
    a = assess(rec.scores, rb, cfg, threat_id=rec.id, title=rec.title)
    c = a.conventional
    print(f"{rec.id:<4} {str(rec.scores.as_tuple()):<18} {c.total:>5} {c.rating:<7} "
          f"{a.fuzzy_value:>6.2f}  {a.fuzzy_band.name}")

# The fired rules behind the highest value.
a = assess(dreadfuzz.DreadScores(9, 6, 8, 9, 6), rb, cfg)
print("\nfired for (9, 6, 8, 9, 6):")
for text, act in a.fired:
    print(f"  {act:.4f}  {text}")
