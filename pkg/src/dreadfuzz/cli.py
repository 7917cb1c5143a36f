"""``dreadfuzz`` command line: assess, explain, validate, gen-rules.

Exit status is 0 on success, 1 for validation or diagnostic errors and 2 for
I/O errors.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import os
import sys
from importlib import resources

from . import catalog as cat
from .dread import assess, dread_variables, generate_rules
from .dsl import RuleBaseSyntaxError, Severity, parse_rulebase, serialize_rulebase, validate
from .fuzzy import (
    Defuzz,
    FuzzyError,
    InferenceConfig,
    RuleBase,
    defuzzify_all,
    format_number,
    fuzzify,
    infer,
)

ENV_RULEBASE = "DREADFUZZ_RULEBASE"
EMBEDDED = "<embedded dread.frb>"

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INVALID):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(f"{self.prog}: {message}", EXIT_INVALID)


def embedded_rulebase_text(name: str = "dread.frb") -> str:
    return resources.files("dreadfuzz").joinpath("data", name).read_text(encoding="utf-8")


def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise CliError(f"cannot read {path}: {getattr(exc, 'strerror', None) or exc}", EXIT_IO) from None


def _load_rulebase(args) -> tuple[RuleBase, str, dict]:
    path = args.rulebase or os.environ.get(ENV_RULEBASE) or None
    if path:
        text, label = _read_text(path), path
    else:
        text, label = embedded_rulebase_text(), EMBEDDED
    result = parse_rulebase(text)
    for d in result.warnings:
        print(d.format(label), file=sys.stderr)
    if not result.ok:
        raise CliError(str(RuleBaseSyntaxError(result.diagnostics, label)), EXIT_INVALID)
    return result.rulebase, label, result.config


def _config(args, overrides: dict) -> InferenceConfig:
    defuzz = args.defuzz or overrides.get("defuzz", Defuzz.COA)
    resolution = args.resolution if args.resolution is not None else overrides.get("resolution", 1001)
    try:
        return InferenceConfig(defuzz, resolution)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _load_catalog(path: str):
    try:
        return cat.load_catalog(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}", EXIT_IO) from None
    except UnicodeDecodeError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from None
    except cat.CatalogError as exc:
        raise CliError(f"{path}: {exc} [{exc.code}]") from None


def _write(text: str, out: str | None):
    if not out:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {out}: {exc.strerror or exc}", EXIT_IO) from None


def cmd_assess(args) -> int:
    rb, label, overrides = _load_rulebase(args)
    cfg = _config(args, overrides)
    records = _load_catalog(args.catalog)
    stamp = None if args.no_timestamp else _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    try:
        report = cat.build_report(records, rb, cfg, rulebase_path=label, timestamp=stamp)
    except FuzzyError as exc:
        raise CliError(str(exc)) from None
    _write(cat.emit_report(report, args.format or "text"), args.out)
    return EXIT_OK


def cmd_explain(args) -> int:
    rb, label, overrides = _load_rulebase(args)
    cfg = _config(args, overrides)
    records = {r.id: r for r in _load_catalog(args.catalog)}
    if args.threat_id not in records:
        raise CliError(f"no threat with id {args.threat_id!r} in {args.catalog}")
    rec = records[args.threat_id]
    try:
        result = infer(rb, cfg, rec.scores.as_inputs())
        a = assess(rec.scores, rb, cfg, threat_id=rec.id, title=rec.title)
    except FuzzyError as exc:
        raise CliError(str(exc)) from None

    out = [f"{rec.id}: {rec.title}", f"rule base: {label}", "", "fuzzification:"]
    for var in rb.inputs:
        x = rec.scores.as_inputs().get(var.name)
        degrees = fuzzify(var, x).degrees
        shown = "  ".join(f"{t}={format_number(round(d, 4))}" for t, d in degrees.items())
        out.append(f"  {var.name} = {format_number(x)}: {shown}")
    out += ["", f"fired rules ({len(result.fired)} of {len(rb.rules)}):"]
    for rule, act in result.fired:
        out.append(f"  [{act:.4f}] {rule.to_text()}")
    agg = result.aggregated
    lo, hi = agg.support()
    out += [
        "",
        f"aggregated set: support [{format_number(round(lo, 4))}, {format_number(round(hi, 4))}], "
        f"height {agg.height:.4f}, area {agg.area():.4f}, {len(agg.x)} samples",
        "",
        "defuzzified:",
    ]
    for method, value in defuzzify_all(agg).items():
        note = "" if method == cfg.defuzz.value else "  (informational)"
        out.append(f"  {method}: {cat.fmt2(value)}{note}")
    c = a.conventional
    out += [
        "",
        f"fuzzy risk: {cat.fmt2(a.fuzzy_value)} -> {a.fuzzy_band.name} (category {a.fuzzy_band.index}), "
        f"action {cat.action_hint(a)}",
        f"conventional: total {format_number(c.total)}, average {cat.fmt2(c.average)}, rating {c.rating}",
    ]
    _write("\n".join(out) + "\n", None)
    return EXIT_OK


def cmd_validate(args) -> int:
    path = args.path or args.rulebase or os.environ.get(ENV_RULEBASE)
    if path:
        text, label = _read_text(path), path
    else:
        text, label = embedded_rulebase_text(), EMBEDDED
    result = parse_rulebase(text)
    for d in result.diagnostics:
        print(d.format(label))
    n_err, n_warn = len(result.errors), len(result.warnings)
    rules = len(result.rulebase.rules) if result.ok else 0
    print(f"{label}: {n_err} error(s), {n_warn} warning(s), {rules} rule(s)")
    return EXIT_OK if n_err == 0 else EXIT_INVALID


def cmd_gen_rules(args) -> int:
    inputs, output = dread_variables()
    try:
        rules = generate_rules(args.strategy, (inputs, output))
    except ValueError as exc:
        raise CliError(str(exc)) from None
    rb = RuleBase(inputs, output, tuple(rules))
    assert not [d for d in validate(rb) if d.severity is Severity.ERROR]
    _write(serialize_rulebase(rb), args.out)
    return EXIT_OK


def _global_flags(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--rulebase", metavar="PATH", default=default,
                        help=f"rule base file (default: ${ENV_RULEBASE} or the embedded DREAD base)")
    parser.add_argument("--defuzz", type=str.upper, choices=[m.value for m in Defuzz], default=default,
                        help="defuzzification method (default COA)")
    parser.add_argument("--resolution", type=int, metavar="N", default=default,
                        help="output grid samples (default 1001, minimum 101)")
    parser.add_argument("--format", choices=["text", "json", "csv"], default=default,
                        help="report format (default text)")
    parser.add_argument("--no-timestamp", action="store_true",
                        default=argparse.SUPPRESS if suppress else False,
                        help="omit the generation timestamp from reports")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dreadfuzz", description="Fuzzy DREAD threat prioritization.")
    _global_flags(parser, suppress=False)
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("assess", parents=[common], help="score and rank a threat catalog")
    p.add_argument("catalog", help="threat catalog (.csv or .json)")
    p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_assess)

    p = sub.add_parser("explain", parents=[common], help="show the inference steps for one threat")
    p.add_argument("catalog")
    p.add_argument("threat_id")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("validate", parents=[common], help="check a rule base file")
    p.add_argument("path", nargs="?", help="rule base file (default: --rulebase or embedded)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("gen-rules", parents=[common], help="write a generated full rule base")
    p.add_argument("--strategy", default="sum", choices=["sum"])
    p.add_argument("--out", metavar="PATH", help="destination file (default stdout)")
    p.set_defaults(func=cmd_gen_rules)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
