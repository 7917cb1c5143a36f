"""Writing a small rule base in the text format, with diagnostics.

Run: python demos/03_rulebase_dsl.py
"""

from dreadfuzz import infer, parse_rulebase, serialize_rulebase

SOURCE = """\
# two inputs, one output
variable Load range 0 10 {
    term Low trap 0 0 3 6
    term High trap 4 7 10 10
}
variable Noise range 0 10 {
    term Quiet trap 0 0 4 7
    term Loud trap 3 6 10 10
}
output Alarm range 0 100 {
    term Off trap 0 0 20 55
    term On trap 50 80 100 100
}
rule IF Load IS Low AND Noise IS Quiet THEN Alarm IS Off
rule IF Load IS High THEN Alarm IS On
rule IF Noise IS Loud THEN Alarm IS On weight 0.5
defuzz COA
"""

res = parse_rulebase(SOURCE)
print("ok:", res.ok, "| warnings:", [d.message for d in res.warnings])
cfg = res.inference_config()
for load, noise in [(1, 1), (5, 5), (9, 2), (2, 9)]:
    crisp, fired, _ = infer(res.rulebase, cfg, {"Load": load, "Noise": noise})
    print(f"Load={load} Noise={noise} -> Alarm {crisp:6.2f} ({len(fired)} rule(s) fired)")

# A broken source: diagnostics carry line and column.
broken = SOURCE.replace("THEN Alarm IS On weight 0.5", "THEN Alarm IS Maybe")
for d in parse_rulebase(broken).diagnostics:
    print(d.format("broken.frb"))

print()
print(serialize_rulebase(res.rulebase, res.config))
