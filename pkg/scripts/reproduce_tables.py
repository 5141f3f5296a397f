#!/usr/bin/env python3
"""Regenerate the double-mesh error tables for both builtin problems.

Writes table_<problem>_<variant>_<mode>.csv/.json into --out-dir and
prints the aligned text tables.  The default grid matches the quick
desk runs used by the acceptance tests (N up to 256); --full appends
the N = 512 column, which takes a few extra minutes.
"""
import argparse
import json
import sys
import time
from pathlib import Path

from cd2d import DoubleMeshMode, Variant, builtin_problem, run_sweep
from cd2d.analysis import format_table_text, sweep_to_dict, write_table_csv

EPSILONS = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
DESK_NS = [32, 64, 128, 256]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--variant", choices=[v.value for v in Variant],
                    default="transformed")
    ap.add_argument("--double-mesh", choices=[m.value for m in DoubleMeshMode],
                    default="bisect")
    ap.add_argument("--full", action="store_true",
                    help="extend the N grid to 512")
    args = ap.parse_args(argv)

    ns = DESK_NS + [512] if args.full else DESK_NS
    variant = Variant(args.variant)
    mode = DoubleMeshMode(args.double_mesh)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    missing = 0
    for name in ("Example1", "Example2"):
        spec = builtin_problem(name)
        start = time.perf_counter()
        result = run_sweep(spec, EPSILONS, ns, variant, mode,
                           workers=args.workers)
        elapsed = time.perf_counter() - start
        stem = f"table_{name.lower()}_{variant.value}_{mode.value}"
        with open(out / f"{stem}.csv", "w") as fh:
            write_table_csv(result.table, fh)
        with open(out / f"{stem}.json", "w") as fh:
            json.dump(sweep_to_dict(result), fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"{name} ({variant.value}, {mode.value}, {elapsed:.0f}s):")
        print(format_table_text(result.table))
        print()
        missing += sum(1 for c in result.cells if not c.ok)

    if missing:
        print(f"{missing} cells failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
