"""Command-line interface: validate, enumerate, orders, witness, diff.

Exit codes: 0 success, 1 comparison mismatch, 2 usage or config error.
All errors are written to stderr with the prefix ``torusblocks: error:``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .search import (
    SearchReport,
    bad_order_set,
    enumerate_systems,
    order_verdicts,
)
from .weightconfig import ConfigError, builtin_names, load_builtin, parse_config, validate
from .witness import witness_report

ERROR_PREFIX = "torusblocks: error:"
JOBS_ENV = "TORUSBLOCKS_JOBS"


def _fail(msg: str, code: int = 2) -> int:
    print(f"{ERROR_PREFIX} {msg}", file=sys.stderr)
    return code


def _load_config(name_or_path: str):
    if name_or_path in builtin_names():
        return load_builtin(name_or_path)
    with open(name_or_path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _default_jobs() -> int:
    raw = os.environ.get(JOBS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# Fixture shorthand

def expand_set(spec) -> list[int]:
    """Expand a fixture set spec into a sorted list of integers.

    Accepted forms: an explicit list; {"start": a, "step": s, "stop": b}
    (inclusive arithmetic progression); {"multiples_of": k, "min": a,
    "max": b}; {"range": [a, b]} (inclusive); {"union": [spec, ...]}.
    """
    if isinstance(spec, list):
        return sorted(int(x) for x in spec)
    if not isinstance(spec, dict):
        raise ValueError(f"bad set spec: {spec!r}")
    if "union" in spec:
        out: set[int] = set()
        for sub in spec["union"]:
            out.update(expand_set(sub))
        return sorted(out)
    if "range" in spec:
        a, b = spec["range"]
        return list(range(int(a), int(b) + 1))
    if "multiples_of" in spec:
        k = int(spec["multiples_of"])
        lo, hi = int(spec["min"]), int(spec["max"])
        start = ((lo + k - 1) // k) * k
        return list(range(start, hi + 1, k))
    if "start" in spec:
        return list(range(int(spec["start"]), int(spec["stop"]) + 1, int(spec["step"])))
    raise ValueError(f"bad set spec: {spec!r}")


def diff_report(report: dict, fixture: dict) -> list[str]:
    """Field-by-field comparison; returns mismatch descriptions."""
    problems = []

    def check(field, expected, actual):
        if expected != actual:
            problems.append(f"{field}: expected {expected!r}, actual {actual!r}")

    for field in ("config", "mode", "systems_total", "center_order", "cofactor_m"):
        if field in fixture:
            check(field, fixture[field], report.get(field))
    if "profile" in fixture:
        expected = {str(k): v for k, v in fixture["profile"].items()}
        check("profile", expected, report.get("profile"))
    if "exponent_set" in fixture:
        # fixtures carry exponents in the published normalization (scaled
        # by cofactor_m); reports list both raw and scaled values
        scaled = report.get("exponents_scaled")
        actual = (sorted(set(scaled)) if scaled is not None
                  else report.get("exponent_set"))
        check("exponent_set", expand_set(fixture["exponent_set"]), actual)
    for field in ("order_set", "avoiding_orders"):
        if field in fixture:
            check(field, expand_set(fixture[field]), report.get(field))
    if "avoiding_odd" in fixture:
        actual = report.get("avoiding_orders")
        actual_odd = None if actual is None else [x for x in actual if x % 2]
        check("avoiding_odd", expand_set(fixture["avoiding_odd"]), actual_odd)
    for field in ("all_witnessed", "any_failing"):
        if field in fixture:
            if field == "any_failing":
                check(field, fixture[field], bool(report.get("failing")))
            else:
                check(field, fixture[field], report.get(field))
    if "class_count_at_least" in fixture:
        actual = report.get("class_count", 0)
        if actual < fixture["class_count_at_least"]:
            problems.append(
                f"class_count: expected >= {fixture['class_count_at_least']}, "
                f"actual {actual}"
            )
    return problems


# ---------------------------------------------------------------------------
# Subcommands

def _cmd_validate(args) -> int:
    try:
        config = _load_config(args.config)
        diag = validate(config)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        return _fail(str(exc))
    print(f"config {config.name}: r={config.r} d={config.d} "
          f"group={diag.group_size} m={config.cofactor_m}")
    for line in diag.messages:
        print(f"  {line}")
    return 0 if diag.ok else _fail("config failed validation")


def _cmd_enumerate(args) -> int:
    try:
        config = _load_config(args.config)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        return _fail(str(exc))
    report = enumerate_systems(
        config,
        mode=args.mode,
        threshold=args.threshold,
        jobs=args.jobs,
        limit_seeds=args.limit_seeds,
        checkpoint=args.checkpoint,
        log=(lambda msg: print(msg, file=sys.stderr)) if args.verbose else None,
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
    print(report.table())
    if not args.out:
        print(report.to_json())
    return 0


def _cmd_orders(args) -> int:
    pairs = []
    try:
        for path in args.reports:
            with open(path, encoding="utf-8") as fh:
                report = SearchReport.from_json(fh.read())
            config = _load_config(report.config)
            pairs.append((report, config.bad_primes))
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        return _fail(str(exc))
    verdicts = order_verdicts(pairs, args.max)
    for v in verdicts:
        if v.certified_good:
            print(f"{v.n}: good ({v.reason}; {', '.join(v.configs)})")
        else:
            print(f"{v.n}: BAD")
    bad = bad_order_set(verdicts)
    print(f"bad set: {bad}")
    refs = {cfg_ref for rep, _ in pairs
            if (cfg_ref := _load_config(rep.config).reference_tG) is not None}
    for ref in sorted(refs):
        print(f"reference threshold: {ref}")
    return 0


def _cmd_witness(args) -> int:
    try:
        config = _load_config(args.config)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        return _fail(str(exc))
    report = witness_report(config, args.order, args.mult)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
    print(report.table())
    return 0


def _cmd_diff(args) -> int:
    try:
        with open(args.report, encoding="utf-8") as fh:
            report = json.load(fh)
        with open(args.fixture, encoding="utf-8") as fh:
            fixture = json.load(fh)
        problems = diff_report(report, fixture)
    except (FileNotFoundError, ValueError) as exc:
        return _fail(str(exc))
    if problems:
        for p in problems:
            print(f"MISMATCH {p}")
        return 1
    print("ok")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torusblocks",
        description="Block systems of torus eigenvalue forms: enumeration, "
                    "order certification, and powering witnesses.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and sanity-check a config")
    p.add_argument("config", help="builtin config name or file path")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("enumerate", help="enumerate block systems")
    p.add_argument("config")
    p.add_argument("--mode", choices=("full", "hybrid"), default="full")
    p.add_argument("--threshold", type=int, default=0)
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.add_argument("--limit-seeds", type=int, default=None)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--out", default=None, help="report JSON path")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=_cmd_enumerate)

    p = sub.add_parser("orders", help="certify element orders from reports")
    p.add_argument("reports", nargs="+", help="report JSON paths")
    p.add_argument("--max", type=int, default=100)
    p.set_defaults(func=_cmd_orders)

    p = sub.add_parser("witness", help="powering-witness search")
    p.add_argument("config")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--mult", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_witness)

    p = sub.add_parser("diff", help="compare a report against a fixture")
    p.add_argument("report")
    p.add_argument("fixture")
    p.set_defaults(func=_cmd_diff)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:  # pragma: no cover
        return _fail("interrupted", 130)


if __name__ == "__main__":
    sys.exit(main())
