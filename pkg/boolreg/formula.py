# SPDX-License-Identifier: LGPL-2.1+
"""
This module provides the ``Formula`` class, an immutable Boolean expression
tree over AND, OR, NOT, variables and constants, together with evaluation,
size metrics and the prefix-notation text format.

Formulas are hash-consed: building the same structure twice returns the same
object, so structural equality is object identity and hashing is constant
time. AND/OR nodes are n-ary (at least 2 children) internally and are emitted
as right-nested binary applications in prefix notation::

  >>> f = Or(Var(0), Var(1), Var(2))
  >>> to_text(f)
  'or x_0 or x_1 x_2'
  >>> parse_text("or x_0 or x_1 x_2") is f
  True

Traversals never recurse on the Python stack (generated trees can be several
hundred levels deep); they go through ``fold_tree()``.

The truth-table enumeration order has variable 0 as the most significant bit:
entry ``i`` of ``truth_table(f, D)`` is ``f`` evaluated at the binary
representation of ``i`` on ``D`` bits.
"""
import enum
import threading
import weakref

import numpy as np

MAX_TABLE_DIM = 24

TOKEN_AND = "and"
TOKEN_OR = "or"
TOKEN_NOT = "not"
TOKEN_TRUE = "true"
TOKEN_FALSE = "false"
VAR_PREFIX = "x_"


class FormulaError(Exception):
    pass


class DimensionError(FormulaError):
    pass


class CapacityError(FormulaError):
    pass


class ParseError(FormulaError):
    """
    Malformed prefix sequence. ``position`` is the index of the offending
    token, or the sequence length when the sequence ended too early.
    """

    def __init__(self, msg, position):
        super().__init__(f"{msg} (at token {position})")
        self.position = position


class Kind(enum.IntEnum):
    CONST = 0
    VAR = 1
    NOT = 2
    AND = 3
    OR = 4


_interned = weakref.WeakValueDictionary()
_intern_lock = threading.Lock()


class Formula:
    """
    Immutable Boolean formula node.

    ``kind`` is a ``Kind``; ``value`` is the variable index for VAR nodes and
    the bit for CONST nodes (``None`` otherwise); ``children`` is a tuple of
    ``Formula``. ``gates`` and ``ntokens`` are the binary gate count and the
    prefix token length of the subtree, computed once at construction.

    Use the ``Var``, ``Const``, ``Not``, ``And`` and ``Or`` helpers rather than
    calling the constructor directly.
    """

    __slots__ = ("kind", "value", "children", "gates", "ntokens", "_key", "__weakref__")

    def __new__(cls, kind, value=None, children=()):
        kind = Kind(kind)
        children = tuple(children)
        _check_node(kind, value, children)

        ident = (kind, value, children)
        with _intern_lock:
            node = _interned.get(ident)
            if node is None:
                node = object.__new__(cls)
                object.__setattr__(node, "kind", kind)
                object.__setattr__(node, "value", value)
                object.__setattr__(node, "children", children)
                object.__setattr__(node, "gates", _gates_of(kind, children))
                object.__setattr__(node, "ntokens", _ntokens_of(kind, children))
                object.__setattr__(node, "_key", None)
                _interned[ident] = node
        return node

    def __setattr__(self, name, value):
        raise AttributeError("Formula objects are immutable")

    def __reduce__(self):
        return (Formula, (self.kind, self.value, self.children))

    def __repr__(self):
        return f"Formula({to_text(self)!r})"

    def __str__(self):
        return to_text(self)

    @property
    def is_leaf(self):
        return self.kind in (Kind.CONST, Kind.VAR)

    @property
    def is_literal(self):
        return self.kind is Kind.VAR or (self.kind is Kind.NOT and self.children[0].kind is Kind.VAR)

    @property
    def sort_key(self):
        """
        Deterministic total order used to canonicalize children: constants,
        then literals by variable index (``x_i`` right before ``not x_i``),
        then compound nodes by size and text.
        """
        if self._key is None:
            if self.kind is Kind.CONST:
                key = (0, self.value, 0, "")
            elif self.kind is Kind.VAR:
                key = (1, self.value, 0, "")
            elif self.is_literal:
                key = (1, self.children[0].value, 1, "")
            else:
                key = (2, self.ntokens, 0, to_text(self))
            object.__setattr__(self, "_key", key)
        return self._key


def _check_node(kind, value, children):
    if kind is Kind.CONST:
        if value not in (0, 1) or children:
            raise FormulaError(f"invalid constant node: {value!r}")
    elif kind is Kind.VAR:
        if not isinstance(value, (int, np.integer)) or value < 0 or children:
            raise FormulaError(f"invalid variable index: {value!r}")
    elif kind is Kind.NOT:
        if len(children) != 1 or value is not None:
            raise FormulaError("NOT takes exactly one operand")
    elif len(children) < 2 or value is not None:
        raise FormulaError(f"{kind.name} takes at least two operands")

    for c in children:
        if not isinstance(c, Formula):
            raise FormulaError(f"operand is not a Formula: {c!r}")


def _gates_of(kind, children):
    g = sum(c.gates for c in children)
    if kind in (Kind.AND, Kind.OR):
        g += len(children) - 1
    return g


def _ntokens_of(kind, children):
    if kind in (Kind.CONST, Kind.VAR):
        return 1
    if kind is Kind.NOT:
        return 1 + children[0].ntokens
    return len(children) - 1 + sum(c.ntokens for c in children)


def Var(index):
    return Formula(Kind.VAR, int(index))


def Const(bit):
    return Formula(Kind.CONST, 1 if bit else 0)


def Not(child):
    return Formula(Kind.NOT, None, (child,))


def And(*children):
    return Formula(Kind.AND, None, children)


def Or(*children):
    return Formula(Kind.OR, None, children)


def Gate(kind, children):
    """Build an AND/OR node, collapsing the degenerate 1-child case."""
    children = tuple(children)
    if len(children) == 1:
        return children[0]
    return Formula(kind, None, children)


TRUE = Const(1)
FALSE = Const(0)


def fold_tree(root, expand, build):
    """
    Generic bottom-up evaluation without recursion.

    ``expand(state)`` returns the list of child states of ``state`` and
    ``build(state, results)`` computes the result of ``state`` from the
    results of its children. States must be hashable; each distinct state is
    built once.
    """
    memo = {}
    stack = [root]
    while stack:
        state = stack[-1]
        if state in memo:
            stack.pop()
            continue
        deps = expand(state)
        pending = [d for d in deps if d not in memo]
        if pending:
            stack.extend(pending)
            continue
        stack.pop()
        memo[state] = build(state, [memo[d] for d in deps])
    return memo[root]


def _children(f):
    return f.children


def transform(f, build):
    """Rebuild ``f`` bottom-up: ``build(node, new_children)`` returns the new node."""
    return fold_tree(f, _children, build)


def flatten(f):
    """Merge nested AND-in-AND / OR-in-OR nodes into n-ary nodes."""

    def build(node, children):
        if node.kind is Kind.NOT:
            return Not(children[0])
        if node.is_leaf:
            return node
        merged = []
        for c in children:
            if c.kind is node.kind:
                merged.extend(c.children)
            else:
                merged.append(c)
        return Formula(node.kind, None, merged)

    return transform(f, build)


def remap_variables(f, mapping):
    """Rename variables: ``mapping`` is a dict or a callable from old to new index."""
    lookup = mapping if callable(mapping) else mapping.__getitem__

    def build(node, children):
        if node.kind is Kind.VAR:
            return Var(lookup(node.value))
        if node.is_leaf:
            return node
        return Formula(node.kind, None, children)

    return transform(f, build)


def active_variables(f):
    """Set of the variable indices appearing in ``f``."""
    return fold_tree(
        f,
        _children,
        lambda node, rs: frozenset((node.value,)) if node.kind is Kind.VAR else frozenset().union(*rs),
    )


def max_variable(f):
    """Largest variable index in ``f``, or -1 for a variable-free formula."""
    return max(active_variables(f), default=-1)


def binary_gate_count(f):
    return f.gates


def token_length(f):
    return f.ntokens


def hypercube(D):
    """All 2^D points of {0,1}^D as a uint8 matrix in lexicographic order."""
    if D > MAX_TABLE_DIM:
        raise CapacityError(f"cannot enumerate 2^{D} assignments (max dimension is {MAX_TABLE_DIM})")
    idx = np.arange(1 << D, dtype=np.int64)[:, None]
    shifts = np.arange(D - 1, -1, -1, dtype=np.int64)[None, :]
    return ((idx >> shifts) & 1).astype(np.uint8)


def evaluate_many(f, points):
    """
    Evaluate ``f`` on every row of ``points`` (an N x D 0/1 matrix). Returns a
    boolean vector of length N.
    """
    points = np.asarray(points)
    if points.ndim != 2:
        raise DimensionError(f"expected an N x D point matrix, got shape {points.shape}")
    n, d = points.shape
    top = max_variable(f)
    if top >= d:
        raise DimensionError(f"formula uses x_{top} but points have dimension {d}")
    points = points.astype(bool, copy=False)

    def build(node, rs):
        kind = node.kind
        if kind is Kind.VAR:
            return points[:, node.value]
        if kind is Kind.CONST:
            return np.full(n, bool(node.value))
        if kind is Kind.NOT:
            return ~rs[0]
        if kind is Kind.AND:
            return np.logical_and.reduce(rs)
        return np.logical_or.reduce(rs)

    return np.asarray(fold_tree(f, _children, build), dtype=bool)


def evaluate(f, assignment):
    """Value (0 or 1) of ``f`` at a single assignment."""
    row = np.asarray(assignment, dtype=np.uint8).reshape(1, -1)
    return int(evaluate_many(f, row)[0])


def truth_table(f, D):
    """
    Truth table of ``f`` over ``D`` variables as a uint8 vector of length 2^D,
    variable 0 being the most significant bit of the entry index.
    """
    if D > MAX_TABLE_DIM:
        raise CapacityError(f"truth table of dimension {D} is too large (max {MAX_TABLE_DIM})")
    top = max_variable(f)
    if D < top + 1:
        raise DimensionError(f"formula uses x_{top}, dimension {D} is too small")
    return evaluate_many(f, hypercube(D)).astype(np.uint8)


def var_token(i):
    return f"{VAR_PREFIX}{i}"


_OP_TOKENS = {Kind.AND: TOKEN_AND, Kind.OR: TOKEN_OR}


def to_prefix(f):
    """
    Prefix (Polish) token list of ``f``. An n-ary node ``op(c1, ..., ck)`` is
    emitted as ``op c1 op c2 ... op c(k-1) ck``.
    """
    out = []
    stack = [f]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            out.append(item)
        elif item.kind is Kind.VAR:
            out.append(var_token(item.value))
        elif item.kind is Kind.CONST:
            out.append(TOKEN_TRUE if item.value else TOKEN_FALSE)
        elif item.kind is Kind.NOT:
            out.append(TOKEN_NOT)
            stack.append(item.children[0])
        else:
            op = _OP_TOKENS[item.kind]
            seq = []
            for c in item.children[:-1]:
                seq.append(op)
                seq.append(c)
            seq.append(item.children[-1])
            stack.extend(reversed(seq))
    return out


def to_text(f):
    return " ".join(to_prefix(f))


_BINARY_TOKENS = {TOKEN_AND: Kind.AND, TOKEN_OR: Kind.OR}


def _leaf(tok, pos):
    if tok == TOKEN_TRUE:
        return TRUE
    if tok == TOKEN_FALSE:
        return FALSE
    if tok.startswith(VAR_PREFIX):
        idx = tok[len(VAR_PREFIX) :]
        if idx.isdigit() and (idx == "0" or not idx.startswith("0")):
            return Var(int(idx))
    raise ParseError(f"unknown token {tok!r}", pos)


def _join(kind, left, right):
    children = []
    for c in (left, right):
        if c.kind is kind:
            children.extend(c.children)
        else:
            children.append(c)
    return Formula(kind, None, children)


def parse_prefix(tokens):
    """
    Parse a prefix token sequence (list of tokens or space-separated string).

    Binary AND/OR applications are re-flattened into n-ary nodes, so
    ``parse_prefix(to_prefix(f)) is flatten(f)``. Raises ``ParseError`` with
    the failing position on unknown, missing or trailing tokens.
    """
    if isinstance(tokens, str):
        tokens = tokens.split()
    else:
        tokens = list(tokens)
    if not tokens:
        raise ParseError("empty formula", 0)

    # frames: [operator token, operands collected so far]
    stack = []
    result = None
    for pos, tok in enumerate(tokens):
        if result is not None:
            raise ParseError(f"trailing token {tok!r}", pos)

        if tok in _BINARY_TOKENS or tok == TOKEN_NOT:
            stack.append([tok, []])
            continue

        node = _leaf(tok, pos)
        while True:
            if not stack:
                result = node
                break
            frame = stack[-1]
            frame[1].append(node)
            if frame[0] == TOKEN_NOT:
                stack.pop()
                node = Not(frame[1][0])
            elif len(frame[1]) == 2:
                stack.pop()
                node = _join(_BINARY_TOKENS[frame[0]], *frame[1])
            else:
                break

    if result is None:
        raise ParseError("truncated formula: missing operand", len(tokens))
    return result


def parse_text(s):
    return parse_prefix(s.split())
