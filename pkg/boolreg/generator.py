# SPDX-License-Identifier: LGPL-2.1+
"""
Random formula generation.

``sample_formula()`` draws a training target in seven steps:

    1. input dimension D uniform in [1, d_max];
    2. number of active variables S uniform in [1, min(D, s_max)] (S = D in
       the noiseless regime) and a uniformly chosen active set;
    3. number of binary operators B uniform in [S - 1, b_max], each one AND
       or OR with probability 1/2;
    4. an unlabeled binary tree shape with B internal nodes from
       ``sample_tree_shape()``;
    5. every node negated independently with probability p_not;
    6. leaves filled so that every active variable appears at least once;
    7. ``simplify()``.

Results whose prefix form is longer than ``max_tokens`` are discarded and
drawn again.

All randomness comes from an explicit ``numpy.random.Generator``. Use
``make_rng(seed, index)`` (or ``make_rng(seed, index, worker)``) so that a
sample is fully determined by its seed and position.
"""
import dataclasses
import functools
import logging

import numpy as np

from .formula import Formula, Kind, Not, Var, binary_gate_count, token_length
from .helpers import ConfigError
from .simplify import simplify

MAX_TOKENS = 200
NOISELESS_MAX_DIM = 10
NOISY_MAX_DIM = 120
NOISY_MAX_ACTIVE = 6
REGIMES = ("noiseless", "noisy")

_logger = logging.getLogger(__name__)


def make_rng(seed, *stream):
    """Independent generator for ``(seed, *stream)``, e.g. ``(seed, worker, index)``."""
    return np.random.default_rng([int(seed), *(int(s) for s in stream)])


@dataclasses.dataclass(frozen=True)
class GeneratorConfig:
    """
    Sampling hyperparameters.

    The ``fixed_*`` fields pin a step of the procedure to a value, which the
    evaluation sweeps use: ``fixed_dim`` (D), ``fixed_active`` (S),
    ``fixed_ops`` (B before simplification) and ``fixed_inactive`` (D - S,
    D is then derived from S). ``max_gates`` rejects samples with more binary
    gates after simplification.
    """

    d_max: int = 10
    s_max: int = 10
    b_max: int = 500
    p_not: float = 0.5
    regime: str = "noiseless"
    max_tokens: int = MAX_TOKENS
    max_gates: int = None
    fixed_dim: int = None
    fixed_active: int = None
    fixed_ops: int = None
    fixed_inactive: int = None

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ConfigError(f"unknown regime {self.regime!r}, expected one of {', '.join(REGIMES)}")
        if self.d_max < 1 or not 1 <= self.s_max <= self.d_max:
            raise ConfigError(f"need 1 <= s_max <= d_max, got s_max={self.s_max} d_max={self.d_max}")
        if self.b_max < 1:
            raise ConfigError(f"b_max must be >= 1, got {self.b_max}")
        if not 0.0 <= self.p_not <= 1.0:
            raise ConfigError(f"p_not must be in [0, 1], got {self.p_not}")
        if self.regime == "noiseless":
            if self.d_max > NOISELESS_MAX_DIM:
                raise ConfigError(f"noiseless regime supports at most {NOISELESS_MAX_DIM} variables, got d_max={self.d_max}")
            if self.d_max > self.b_max + 1:
                raise ConfigError(f"noiseless regime needs d_max <= b_max + 1 so all variables fit, got d_max={self.d_max}")
        if self.fixed_dim is not None and not 1 <= self.fixed_dim <= self.d_max:
            raise ConfigError(f"fixed_dim must be in [1, {self.d_max}], got {self.fixed_dim}")
        if self.fixed_inactive is not None:
            if self.regime == "noiseless":
                raise ConfigError("inactive variables only exist in the noisy regime")
            if not 0 <= self.fixed_inactive < self.d_max:
                raise ConfigError(f"fixed_inactive must be in [0, {self.d_max - 1}], got {self.fixed_inactive}")

    @classmethod
    def noiseless(cls, d_max=NOISELESS_MAX_DIM, b_max=500, **kw):
        return cls(d_max=d_max, s_max=d_max, b_max=b_max, regime="noiseless", **kw)

    @classmethod
    def noisy(cls, d_max=NOISY_MAX_DIM, s_max=NOISY_MAX_ACTIVE, b_max=500, **kw):
        return cls(d_max=d_max, s_max=s_max, b_max=b_max, regime="noisy", **kw)

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)


@dataclasses.dataclass(frozen=True)
class SampleMetadata:
    D: int
    S: int
    active_set: tuple
    B_initial: int
    B_final: int
    raw: Formula = None
    and_count: int = 0
    or_count: int = 0
    not_count: int = 0
    node_count: int = 0
    attempts: int = 1


@functools.lru_cache(maxsize=None)
def _tree_counts(n_max):
    """
    ``D[e][n]``: number of binary trees with ``n`` internal nodes that can be
    grown from ``e`` empty slots. D[e][0] = 1, D[0][n>0] = 0,
    D[e][n] = D[e-1][n] + D[e+1][n-1].
    """
    e_max = n_max + 2
    D = [[0] * (n_max + 1) for _ in range(e_max + 1)]
    for e in range(e_max + 1):
        D[e][0] = 1
    for n in range(1, n_max + 1):
        for e in range(1, e_max + 1 - n):
            D[e][n] = D[e - 1][n] + D[e + 1][n - 1]
    return D


def sample_tree_shape(B, rng):
    """
    Unlabeled binary tree with ``B`` internal nodes, as a prefix-order list
    of 1 (internal node) and 0 (leaf).

    With ``e`` open slots and ``n`` operators left, the next operator lands
    after skipping ``k`` slots (which become leaves) with probability
    D(e - k + 1, n - 1) / D(e, n).
    """
    if B < 0:
        raise ValueError(f"number of internal nodes must be >= 0, got {B}")
    if B == 0:
        return [0]

    counts = _tree_counts(B)
    # slots: None = open, 0 = leaf, 1 = internal
    seq = [None]
    pos = 0
    e = 1
    for n in range(B, 0, -1):
        total = counts[e][n]
        probs = np.array([counts[e - k + 1][n - 1] / total for k in range(e)])
        k = int(rng.choice(e, p=probs / probs.sum()))
        skipped = 0
        while True:
            if seq[pos] is None:
                if skipped == k:
                    break
                seq[pos] = 0
                skipped += 1
            pos += 1
        seq[pos : pos + 1] = [1, None, None]
        pos += 1
        e = e - k + 1

    return [0 if s is None else s for s in seq]


def _build_tree(shape, labels, negate, leaves):
    """Formula from a prefix shape, operator kinds, NOT flags (prefix order) and leaf variables."""
    stack = []
    li = len(leaves)
    oi = len(labels)
    for pos in range(len(shape) - 1, -1, -1):
        if shape[pos]:
            oi -= 1
            left = stack.pop()
            right = stack.pop()
            node = Formula(labels[oi], None, (left, right))
        else:
            li -= 1
            node = Var(leaves[li])
        if negate[pos]:
            node = Not(node)
        stack.append(node)
    return stack[0]


def _sample_dims(cfg, rng):
    if cfg.fixed_inactive is not None:
        s_cap = cfg.s_max if cfg.fixed_active is None else cfg.fixed_active
        S = cfg.fixed_active or int(rng.integers(1, min(s_cap, cfg.d_max - cfg.fixed_inactive) + 1))
        D = S + cfg.fixed_inactive
        if D > cfg.d_max:
            raise ConfigError(f"{S} active + {cfg.fixed_inactive} inactive variables exceed d_max={cfg.d_max}")
        return D, S

    if cfg.regime == "noiseless":
        D = cfg.fixed_dim or int(rng.integers(1, cfg.d_max + 1))
        return D, D
    if cfg.fixed_active is not None:
        if cfg.fixed_active > cfg.d_max:
            raise ConfigError(f"fixed_active={cfg.fixed_active} exceeds d_max={cfg.d_max}")
        D = cfg.fixed_dim or int(rng.integers(cfg.fixed_active, cfg.d_max + 1))
        if cfg.fixed_active > D:
            raise ConfigError(f"fixed_active={cfg.fixed_active} exceeds dimension {D}")
        return D, cfg.fixed_active
    D = cfg.fixed_dim or int(rng.integers(1, cfg.d_max + 1))
    s_hi = min(D, cfg.s_max, cfg.b_max + 1)
    return D, int(rng.integers(1, s_hi + 1))


def sample_raw_formula(cfg, rng):
    """
    Steps 1 to 6: the formula before simplification and its metadata
    (``B_final`` is left at the raw gate count).
    """
    D, S = _sample_dims(cfg, rng)
    active = np.sort(rng.choice(D, size=S, replace=False))

    if cfg.fixed_ops is not None:
        B = max(cfg.fixed_ops, S - 1)
    else:
        B = int(rng.integers(S - 1, max(cfg.b_max, S - 1) + 1))
    labels = [Kind.AND if r < 0.5 else Kind.OR for r in rng.random(B)]
    shape = sample_tree_shape(B, rng)
    negate = rng.random(len(shape)) < cfg.p_not

    # the first S leaves of a random leaf order get the S distinct variables
    n_leaves = B + 1
    leaves = np.empty(n_leaves, dtype=np.int64)
    order = rng.permutation(n_leaves)
    leaves[order[:S]] = rng.permutation(active)
    leaves[order[S:]] = rng.choice(active, size=n_leaves - S, replace=True)

    raw = _build_tree(shape, labels, negate, [int(v) for v in leaves])
    n_and = sum(1 for k in labels if k is Kind.AND)
    meta = SampleMetadata(
        D=D,
        S=S,
        active_set=tuple(int(v) for v in active),
        B_initial=B,
        B_final=binary_gate_count(raw),
        raw=raw,
        and_count=n_and,
        or_count=B - n_and,
        not_count=int(negate.sum()),
        node_count=len(shape),
    )
    return raw, meta


def reject_oversized(f, max_tokens=MAX_TOKENS):
    """True when the prefix form of ``f`` has more than ``max_tokens`` tokens."""
    return token_length(f) > max_tokens


def sample_formula(cfg, rng, max_attempts=10000):
    """
    Draw a simplified formula and its ``SampleMetadata``. Oversized results
    (and results above ``cfg.max_gates``) are regenerated, never truncated.
    """
    for attempt in range(1, max_attempts + 1):
        raw, meta = sample_raw_formula(cfg, rng)
        f = simplify(raw)
        if reject_oversized(f, cfg.max_tokens):
            continue
        gates = binary_gate_count(f)
        if cfg.max_gates is not None and gates > cfg.max_gates:
            continue
        if attempt > 1:
            _logger.debug(f"accepted sample after {attempt} attempts")
        return f, dataclasses.replace(meta, B_final=gates, attempts=attempt)

    raise ConfigError(f"no acceptable formula after {max_attempts} attempts, check max_tokens/max_gates")
