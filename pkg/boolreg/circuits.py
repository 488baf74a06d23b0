# SPDX-License-Identifier: LGPL-2.1+
"""
Reference logic circuits.

Small, well-known functions used to probe a noiseless model: multiplexer,
comparator, majority, parity, and the bits of the sum and product of two
binary numbers. Functions with a natural small formula are returned as
``Formula``; arithmetic ones as truth tables (uint8 vectors of length 2^D,
variable 0 most significant).

Multi-bit numbers are read most significant bit first: for two k-bit numbers
``a`` uses variables 0..k-1 and ``b`` uses k..2k-1.
"""
import itertools

import numpy as np

from .formula import And, Not, Or, Var, hypercube


def multiplexer():
    """
    4-to-1 multiplexer over s0, s1, x0..x3 (variables 0 to 5): the output is
    x_k with k = 2 * s0 + s1.
    """
    s0, s1 = Var(0), Var(1)
    sel = [And(Not(s0), Not(s1)), And(Not(s0), s1), And(s0, Not(s1)), And(s0, s1)]
    return Or(*(And(*g.children, Var(2 + k)) for k, g in enumerate(sel)))


def comparator(k):
    """a > b for two k-bit numbers."""
    a = [Var(i) for i in range(k)]
    b = [Var(k + i) for i in range(k)]
    terms = []
    for i in range(k):
        eq = [Or(And(a[j], b[j]), And(Not(a[j]), Not(b[j]))) for j in range(i)]
        parts = [*eq, a[i], Not(b[i])]
        terms.append(And(*parts) if len(parts) > 1 else parts[0])
    return Or(*terms) if len(terms) > 1 else terms[0]


def majority(n):
    """1 when more than half of the n inputs are 1."""
    need = n // 2 + 1
    if need == n:
        return And(*(Var(i) for i in range(n))) if n > 1 else Var(0)
    return Or(*(And(*(Var(i) for i in c)) for c in itertools.combinations(range(n), need)))


def and_first(S):
    return And(*(Var(i) for i in range(S))) if S > 1 else Var(0)


def or_first(S):
    return Or(*(Var(i) for i in range(S))) if S > 1 else Var(0)


def _numbers(k):
    cube = hypercube(2 * k).astype(np.int64)
    weights = 1 << np.arange(k - 1, -1, -1, dtype=np.int64)
    return cube[:, :k] @ weights, cube[:, k:] @ weights


def parity_table(n):
    return (hypercube(n).sum(axis=1) & 1).astype(np.uint8)


def adder_table(k, bit):
    """Bit ``bit`` (0 = least significant) of a + b."""
    a, b = _numbers(k)
    return (((a + b) >> bit) & 1).astype(np.uint8)


def multiplier_table(k, bit):
    """Bit ``bit`` (0 = least significant) of a * b."""
    a, b = _numbers(k)
    return (((a * b) >> bit) & 1).astype(np.uint8)


def standard_circuits():
    """``{name: (D, Formula or truth table)}`` of the circuits probed by ``eval circuits``."""
    c = {"multiplexer": (6, multiplexer())}
    for k in (1, 2, 3):
        c[f"comparator-{k}"] = (2 * k, comparator(k))
    for n in (3, 5, 7):
        c[f"majority-{n}"] = (n, majority(n))
    for n in (2, 3, 4, 5):
        c[f"parity-{n}"] = (n, parity_table(n))
    for k in (2, 3):
        for bit in range(k + 1):
            c[f"adder-{k}-bit{bit}"] = (2 * k, adder_table(k, bit))
        for bit in range(2 * k):
            c[f"multiplier-{k}-bit{bit}"] = (2 * k, multiplier_table(k, bit))
    return c
