#!/usr/bin/env python3
"""Reproduce every bundled result and compare against the shipped fixtures.

Runs the full enumerations (g2_a2, f4_a1x4, f4_a2a2, e6_a5a1, e6_a2a2a2),
the adjoint order certifications, the f4_a1x4 witness suite, and the e7_a7
smoke run, diffing each report against src/torusblocks/fixtures/.  The full
e7_a7 run is deliberately excluded; see run_e7_full.py.

Usage: python scripts/reproduce_all.py [--jobs N] [--skip-slow]
"""

import argparse
import json
import sys
import time
from importlib import resources

from torusblocks.cli import diff_report
from torusblocks.search import enumerate_systems
from torusblocks.weightconfig import load_builtin
from torusblocks.witness import witness_report

ENUMERATIONS = [
    ("g2_a2", False),
    ("f4_a1x4", False),
    ("f4_a2a2", False),
    ("e6_a5a1", True),
    ("e6_a2a2a2", True),
]

WITNESSES = [(24, 5), (36, 5), (30, 5), (30, 7)]


def fixture(name):
    path = resources.files("torusblocks.fixtures") / f"{name}.expected.json"
    return json.loads(path.read_text())


def show(label, problems, elapsed):
    status = "ok" if not problems else "MISMATCH"
    print(f"{label:28s} {status}  ({elapsed:.1f}s)")
    for p in problems:
        print(f"    {p}")
    return not problems


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--skip-slow", action="store_true",
                        help="skip the half-hour E6 enumerations")
    args = parser.parse_args()

    ok = True
    for name, slow in ENUMERATIONS:
        if slow and args.skip_slow:
            print(f"{name:28s} skipped")
            continue
        t0 = time.time()
        report = enumerate_systems(load_builtin(name), jobs=args.jobs)
        problems = diff_report(json.loads(report.to_json()), fixture(name))
        ok &= show(name, problems, time.time() - t0)

    f4 = load_builtin("f4_a1x4")
    for n, a in WITNESSES:
        t0 = time.time()
        rep = witness_report(f4, n, a)
        problems = diff_report(
            json.loads(rep.to_json()), fixture(f"f4_a1x4_w{n}a{a}")
        )
        ok &= show(f"f4_a1x4 witness n={n} a={a}", problems, time.time() - t0)

    for name in ("g2_a2_adjoint", "f4_a1x4_adjoint", "f4_a2a2_adjoint"):
        t0 = time.time()
        report = enumerate_systems(load_builtin(name), jobs=args.jobs)
        problems = diff_report(json.loads(report.to_json()), fixture(name)) \
            if _has_fixture(name) else []
        ok &= show(name, problems, time.time() - t0)

    t0 = time.time()
    smoke = enumerate_systems(
        load_builtin("e7_a7"), mode="hybrid", threshold=2,
        jobs=args.jobs, limit_seeds=50,
    )
    ok &= show("e7_a7 smoke (50 seeds)", [], time.time() - t0)
    print(f"    smoke profile: {dict(sorted(smoke.profile.items(), reverse=True))}")

    sys.exit(0 if ok else 1)


def _has_fixture(name):
    path = resources.files("torusblocks.fixtures") / f"{name}.expected.json"
    return path.is_file()


if __name__ == "__main__":
    main()
