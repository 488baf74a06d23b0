# SPDX-License-Identifier: LGPL-2.1+
"""
Two-level (sum-of-products) minimization and the comparison harness.

``quine_mccluskey()`` computes the prime implicants of a truth table by
repeated merging of implicants that differ in one position, then selects a
cover: an exact minimum number of product terms with Petrick's method up to
``EXACT_MAX_DIM`` variables, a greedy set cover above that (flagged as
heuristic in ``SopResult.exact``).

An implicant is a pair ``(value, mask)`` of integers over the D bits of a
truth-table index, variable 0 being the most significant bit. Bits set in
``mask`` are don't-care; ``value`` has them cleared.

``compare_synthesis()`` runs a predictor and the minimizer on the same
generated functions and reports lengths (binary gates and tokens) and
wall-clock times for both.
"""
import collections
import dataclasses
import json
import logging
import math
import pathlib
import time

import numpy as np
import pandas as pd

from .data import ObservationSet, full_hypercube
from .evaluation import perfect_recovery
from .formula import FALSE, TRUE, CapacityError, Gate, Kind, Not, Var, active_variables, truth_table
from .generator import make_rng, sample_formula
from .helpers import atomic_write
from .inference import NoCandidateError

EXACT_MAX_DIM = 6
MAX_DIM = 10

REPORT_COLUMNS = [
    "index",
    "D",
    "active",
    "target_gates",
    "model_perfect",
    "model_gates",
    "model_tokens",
    "model_time",
    "qm_gates",
    "qm_tokens",
    "qm_terms",
    "qm_exact",
    "qm_time",
    "outcome",
]

_logger = logging.getLogger(__name__)


class SynthesisError(Exception):
    pass


@dataclasses.dataclass(frozen=True)
class SopResult:
    formula: object
    implicants: tuple
    exact: bool


def _popcount(x):
    return bin(x).count("1")


def prime_implicants(minterms, D):
    """Prime implicants ``(value, mask)`` covering the set ``minterms``."""
    current = {(m, 0) for m in minterms}
    primes = set()
    while current:
        groups = collections.defaultdict(list)
        for value, mask in current:
            groups[(mask, _popcount(value))].append(value)

        merged = set()
        used = set()
        for (mask, ones), values in groups.items():
            upper = groups.get((mask, ones + 1))
            if not upper:
                continue
            for a in values:
                for b in upper:
                    diff = a ^ b
                    if diff & (diff - 1) == 0 and b & diff:
                        merged.add((a, mask | diff))
                        used.add((a, mask))
                        used.add((b, mask))
        primes |= current - used
        current = merged
    return sorted(primes, key=lambda p: (_popcount(p[1]), p[0]))


def _covers(imp, m):
    value, mask = imp
    return m & ~mask == value


def _literal_count(imp, D):
    return D - _popcount(imp[1])


def _petrick(primes, minterms, D):
    """Minimum-cardinality cover (fewest literals on ties) by expanding the product of sums."""
    # each product is a bitmask over prime indices
    products = {0}
    for m in minterms:
        clause = [i for i, p in enumerate(primes) if _covers(p, m)]
        nxt = set()
        for prod in products:
            if any(prod >> i & 1 for i in clause):
                nxt.add(prod)
            else:
                nxt.update(prod | (1 << i) for i in clause)
        # absorption: drop any product that contains another one
        ordered = sorted(nxt, key=_popcount)
        kept = []
        for prod in ordered:
            if not any(k & prod == k for k in kept):
                kept.append(prod)
        products = set(kept)

    def cost(prod):
        idx = [i for i in range(len(primes)) if prod >> i & 1]
        return (len(idx), sum(_literal_count(primes[i], D) for i in idx), idx)

    best = min(products, key=cost)
    return [primes[i] for i in range(len(primes)) if best >> i & 1]


def _greedy(primes, minterms, D):
    uncovered = set(minterms)
    chosen = []
    while uncovered:
        best = max(primes, key=lambda p: (sum(1 for m in uncovered if _covers(p, m)), -_literal_count(p, D)))
        chosen.append(best)
        uncovered = {m for m in uncovered if not _covers(best, m)}
    return chosen


def _essential(primes, minterms):
    """Primes that are the only cover of some minterm, and the minterms they leave uncovered."""
    essential = []
    for m in minterms:
        cover = [p for p in primes if _covers(p, m)]
        if len(cover) == 1 and cover[0] not in essential:
            essential.append(cover[0])
    rest = [m for m in minterms if not any(_covers(p, m) for p in essential)]
    return essential, rest


def implicant_formula(imp, D):
    value, mask = imp
    lits = []
    for i in range(D):
        bit = 1 << (D - 1 - i)
        if mask & bit:
            continue
        lits.append(Var(i) if value & bit else Not(Var(i)))
    return Gate(Kind.AND, lits) if lits else TRUE


def sop_formula(implicants, D):
    if not implicants:
        return FALSE
    terms = [implicant_formula(imp, D) for imp in implicants]
    if TRUE in terms:
        return TRUE
    return Gate(Kind.OR, sorted(set(terms), key=lambda t: t.sort_key))


def _check_table(table, D):
    table = np.asarray(table).reshape(-1)
    if D > MAX_DIM:
        raise CapacityError(f"two-level minimization is limited to {MAX_DIM} variables, got {D}")
    if len(table) != 1 << D:
        raise SynthesisError(f"truth table has {len(table)} entries, expected 2^{D}")
    if np.any((table != 0) & (table != 1)):
        raise SynthesisError("truth table entries must be 0 or 1")
    return table


def minimize(table, D):
    """``SopResult`` for ``table`` (2^D bits, variable 0 most significant)."""
    table = _check_table(table, D)
    minterms = [int(i) for i in np.flatnonzero(table)]
    if not minterms:
        return SopResult(FALSE, (), True)
    if len(minterms) == len(table):
        return SopResult(TRUE, ((0, (1 << D) - 1),), True)

    primes = prime_implicants(minterms, D)
    essential, rest = _essential(primes, minterms)
    others = [p for p in primes if p not in essential]
    exact = D <= EXACT_MAX_DIM
    if not rest:
        extra = []
    elif exact:
        extra = _petrick(others, rest, D)
    else:
        extra = _greedy(others, rest, D)
    chosen = tuple(sorted(essential + extra))
    return SopResult(sop_formula(chosen, D), chosen, exact)


def quine_mccluskey(table, D):
    """Sum-of-products formula for ``table``."""
    return minimize(table, D).formula


def compare_synthesis(predictor, gen_cfg, count, seed=0):
    """
    Generate ``count`` noiseless targets and minimize each with ``predictor``
    and with ``minimize()``. Returns ``(rows, summary)``: a DataFrame with
    ``REPORT_COLUMNS`` and a dict of aggregates.

    ``outcome`` is the head-to-head comparison of binary gate counts
    ("shorter" means the predictor's formula is shorter) and "failed" when
    the predictor did not reproduce the table; failed rows are left out of
    the length aggregates.
    """
    rows = []
    for i in range(count):
        rng = make_rng(seed, i)
        f, meta = sample_formula(gen_cfg, rng)
        D = meta.D
        table = truth_table(f, D)
        obs = ObservationSet(full_hypercube(D), table, D)

        t0 = time.perf_counter()
        try:
            cand = predictor(obs, rng=make_rng(seed, i, 1))
        except NoCandidateError:
            cand = None
        t1 = time.perf_counter()
        sop = minimize(table, D)
        t2 = time.perf_counter()

        ok = cand is not None and perfect_recovery(cand.fitting_accuracy)
        qm_gates = sop.formula.gates
        if not ok:
            outcome = "failed"
        elif cand.gate_count < qm_gates:
            outcome = "shorter"
        elif cand.gate_count == qm_gates:
            outcome = "equal"
        else:
            outcome = "longer"
        rows.append(
            {
                "index": i,
                "D": D,
                "active": len(active_variables(f)),
                "target_gates": f.gates,
                "model_perfect": int(bool(ok)),
                "model_gates": cand.gate_count if cand else -1,
                "model_tokens": cand.token_length if cand else -1,
                "model_time": t1 - t0,
                "qm_gates": qm_gates,
                "qm_tokens": sop.formula.ntokens,
                "qm_terms": len(sop.implicants),
                "qm_exact": int(sop.exact),
                "qm_time": t2 - t1,
                "outcome": outcome,
            }
        )

    df = pd.DataFrame(rows, columns=REPORT_COLUMNS)
    return df, summarize(df)


def _mean(series):
    return float(series.mean()) if len(series) else math.nan


def summarize(df):
    ok = df[df.model_perfect == 1]
    n = len(df)
    outcomes = ok.outcome.value_counts()
    summary = {
        "count": n,
        "valid_simplification_rate": len(ok) / n if n else math.nan,
        "failed": int(n - len(ok)),
        "heuristic_cover": int((df.qm_exact == 0).sum()),
        "outcome_pct": {k: (float(outcomes.get(k, 0)) / len(ok) if len(ok) else math.nan) for k in ("shorter", "equal", "longer")},
        "mean_gates": {"model": _mean(ok.model_gates), "qm": _mean(ok.qm_gates)},
        "mean_tokens": {"model": _mean(ok.model_tokens), "qm": _mean(ok.qm_tokens)},
        "mean_time": {"model": _mean(df.model_time), "qm": _mean(df.qm_time)},
        "by_active": {},
    }
    for active, group in ok.groupby("active"):
        summary["by_active"][str(active)] = {
            "count": int(len(group)),
            "model_gates": _mean(group.model_gates),
            "qm_gates": _mean(group.qm_gates),
        }
    return summary


def write_report(df, summary, path, header=None):
    """Write the rows to ``path`` (CSV) and the summary next to it as JSON."""
    path = pathlib.Path(path)
    with atomic_write(path, "w") as f:
        for line in header or ():
            f.write(f"# {line}\n")
        df.to_csv(f, index=False)
    with atomic_write(path.with_suffix(".json"), "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    return path.with_suffix(".json")
