"""Rewrite the shipped .frb data files from the in-code DREAD definitions."""

from pathlib import Path

from dreadfuzz.dread import default_rulebase, dread_variables
from dreadfuzz.dsl import serialize_rulebase
from dreadfuzz.fuzzy import RuleBase

DATA = Path(__file__).resolve().parents[1] / "src" / "dreadfuzz" / "data"

if __name__ == "__main__":
    inputs, output = dread_variables()
    (DATA / "dread.frb").write_text(serialize_rulebase(default_rulebase()), encoding="utf-8")
    (DATA / "dread-variables.frb").write_text(serialize_rulebase(RuleBase(inputs, output)), encoding="utf-8")
    print(f"wrote {DATA}/dread.frb and dread-variables.frb")
