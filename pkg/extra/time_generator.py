#!/usr/bin/python3
# SPDX-License-Identifier: LGPL-2.1+
"""
Generate -n formulas and report generator and simplifier throughput. Every
simplified formula is checked against the truth table of its unsimplified
tree, and the distribution of binary operators before and after
simplification is summarized.
"""
import argparse
import statistics
import sys
import time

import numpy as np

from boolreg.formula import binary_gate_count, truth_table
from boolreg.generator import GeneratorConfig, make_rng, sample_raw_formula
from boolreg.simplify import simplify


def parse_args(argv):
    parser = argparse.ArgumentParser(
        description=__doc__,
    )
    parser.add_argument(
        "-n",
        type=int,
        required=True,
        help="""Number of formulas to generate.""",
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=0,
        help="""Generator seed.""",
    )
    parser.add_argument(
        "--b-max",
        type=int,
        default=500,
        dest="b_max",
        help="""Maximum number of binary operators.""",
    )
    parser.add_argument(
        "--no-check",
        action="store_false",
        dest="check",
        help="""Do not compare truth tables before and after simplification.""",
    )

    args = parser.parse_args(argv)

    if args.n <= 0:
        parser.error("argument to -n must be a non-zero positive integer")

    return args


def info(*k, **kw):
    kw["file"] = sys.stderr
    kw["flush"] = True
    print(*k, **kw)


def status(msg, **kw):
    kw["end"] = ""
    info(f"\r\033[K{msg}", **kw)


def run(n, seed, b_max, check):
    cfg = GeneratorConfig.noiseless(b_max=b_max)
    gen_time = simp_time = 0.0
    before, after = [], []
    mismatches = 0
    for i in range(n):
        rng = make_rng(seed, i)
        t0 = time.monotonic()
        raw, meta = sample_raw_formula(cfg, rng)
        t1 = time.monotonic()
        f = simplify(raw)
        t2 = time.monotonic()
        gen_time += t1 - t0
        simp_time += t2 - t1
        before.append(binary_gate_count(raw))
        after.append(binary_gate_count(f))
        if check and not np.array_equal(truth_table(raw, meta.D), truth_table(f, meta.D)):
            mismatches += 1
        if (i + 1) % 100 == 0 or i + 1 == n:
            status(f"Generating [{i + 1}/{n}] ({(i + 1) / (gen_time + simp_time):.0f} formulas/s)")
    info()
    return gen_time, simp_time, before, after, mismatches


def print_report(n, gen_time, simp_time, before, after, mismatches, check):
    print("Number of formulas:", n)
    print(f"Generator: {gen_time:.3f}s ({n / gen_time:.0f} formulas/s)")
    print(f"Simplifier: {simp_time:.3f}s ({n / simp_time:.0f} formulas/s)")
    print()

    print("Binary operators  before  after")
    for title, fn in (("mean", statistics.mean), ("median", statistics.median), ("mode", statistics.mode)):
        print(f"{title:>16}  {fn(before):>6.1f}  {fn(after):>5.1f}")
    grown = sum(1 for b, a in zip(before, after) if a > b)
    print()
    print("Formulas that grew:", grown)
    if check:
        print("Truth-table mismatches:", mismatches)


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    args = parse_args(argv)

    gen_time, simp_time, before, after, mismatches = run(args.n, args.seed, args.b_max, args.check)
    print_report(args.n, gen_time, simp_time, before, after, mismatches, args.check)
    return 1 if mismatches else 0


if __name__ == "__main__":
    sys.exit(main())
