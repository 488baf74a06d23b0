# SPDX-License-Identifier: LGPL-2.1+
"""
Algebraic simplification of formulas.

``simplify()`` runs three steps:

    1. ``normalize()``: double negation elimination and De Morgan's laws,
       giving negation normal form (NOT only above variables or constants).

    2. ``simplify_pass()`` repeated until the formula stops changing. One
       pass rewrites bottom-up with constant folding, flattening, duplicate
       removal, complementation and absorption, and sorts the children of
       every AND/OR by ``Formula.sort_key``.

    3. ``normalize()`` once more.

Every rule removes operands or keeps them, so the binary gate count never
grows. This is a rewriting procedure, not a minimizer: see ``synthesis`` for
two-level minimization.
"""
import logging

from .formula import (
    FALSE,
    TRUE,
    And,
    Const,
    Formula,
    Kind,
    Not,
    Or,
    fold_tree,
    transform,
)

MAX_PASSES = 64

_logger = logging.getLogger(__name__)


class SimplifyError(Exception):
    pass


def _nnf_expand(state):
    node, neg = state
    if node.kind is Kind.NOT:
        return [(node.children[0], not neg)]
    return [(c, neg) for c in node.children]


def _nnf_build(state, rs):
    node, neg = state
    kind = node.kind
    if kind is Kind.NOT:
        return rs[0]
    if kind in (Kind.VAR, Kind.CONST):
        return Not(node) if neg else node
    if kind is Kind.AND:
        return Or(*rs) if neg else And(*rs)
    return And(*rs) if neg else Or(*rs)


def normalize(f):
    """Negation normal form of ``f``."""
    return fold_tree((f, False), _nnf_expand, _nnf_build)


_IDENTITY = {Kind.AND: 1, Kind.OR: 0}


def _operands(node, kind):
    """Operands of ``node`` seen as a ``kind`` gate: its children, or itself."""
    return node.children if node.kind is kind else (node,)


def _simplify_gate(kind, children):
    identity = _IDENTITY[kind]
    dual = Kind.OR if kind is Kind.AND else Kind.AND

    # flattening, constants, duplicates
    ops = {}
    for c in children:
        for op in _operands(c, kind):
            if op.kind is Kind.CONST:
                if op.value != identity:
                    return Const(1 - identity)
                continue
            ops[op] = None

    # complementation
    for op in ops:
        if op.kind is Kind.NOT and op.children[0] in ops:
            return Const(1 - identity)

    # absorption: x & (x | y) -> x, and (a | b) & (a | b | c) -> a | b
    absorbed = set()
    for y in ops:
        if y.kind is not dual:
            continue
        ys = set(y.children)
        for x in ops:
            if x is y or x in absorbed:
                continue
            if ys.issuperset(_operands(x, dual)):
                absorbed.add(y)
                break

    kept = sorted((op for op in ops if op not in absorbed), key=lambda op: op.sort_key)
    if not kept:
        return Const(identity)
    if len(kept) == 1:
        return kept[0]
    return Formula(kind, None, kept)


def _pass_build(node, children):
    kind = node.kind
    if kind in (Kind.VAR, Kind.CONST):
        return node
    if kind is Kind.NOT:
        c = children[0]
        if c.kind is Kind.CONST:
            return FALSE if c.value else TRUE
        if c.kind is Kind.NOT:
            return c.children[0]
        return Not(c)
    return _simplify_gate(kind, children)


def simplify_pass(f):
    """One bottom-up application of the rewrite rules."""
    return transform(f, _pass_build)


def simplify(f, max_passes=MAX_PASSES):
    """
    Simplify ``f`` to a fixed point of ``simplify_pass()``.

    Raises ``SimplifyError`` if no fixed point is reached within
    ``max_passes`` passes, which would mean the rules cycle.
    """
    g = normalize(f)
    for i in range(max_passes):
        nxt = simplify_pass(g)
        if nxt is g:
            _logger.debug(f"fixed point after {i + 1} passes")
            return normalize(g)
        g = nxt
    raise SimplifyError(f"no fixed point after {max_passes} simplification passes")
