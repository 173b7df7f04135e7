#!/usr/bin/env python3
"""Run every verification suite and print one line per suite (optionally a JSON dump)."""

import argparse
import json
import time

from wsigma import suites as S
from wsigma.cli import jsonable

SUITES = [
    ("algebra", lambda: S.algebra_suite()),
    ("integer-m", lambda: S.integer_m_suite()),
    ("newton-inequality", lambda: S.newton_inequality_suite()),
    ("model-constants", lambda: S.model_constants_suite()),
    ("integral-identity", lambda: S.integral_identity_suite()),
    ("divergence", lambda: S.divergence_suite()),
    ("first-variation", lambda: S.first_variation_checks()),
    ("criticality", lambda: S.criticality_checks()),
    ("stability", lambda: S.stability_checks()),
    ("self-adjointness", lambda: S.self_adjointness_checks()),
    ("second-variation-scale", lambda: S.we_second_variation_checks()),
    ("obata", lambda: S.obata_checks()),
    ("scaled-euler", lambda: S.yk_checks()),
    ("explorers", lambda: S.explorer_checks()),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--only", nargs="*", help="suite names to run")
    ap.add_argument("--json", help="write all rows to this file")
    args = ap.parse_args()
    dump = {}
    for name, fn in SUITES:
        if args.only and name not in args.only:
            continue
        t0 = time.perf_counter()
        rows = fn()
        bad = [r for r in rows if not r.passed]
        print(f"{name:24s} {len(rows) - len(bad):4d}/{len(rows):<4d} {time.perf_counter() - t0:7.1f}s")
        for r in bad:
            print(f"    FAIL {r.name}: value {r.value:.3e} tol {r.tol:.1e}")
        dump[name] = [r.as_dict() for r in rows]
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(jsonable(dump), fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
