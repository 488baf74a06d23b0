# SPDX-License-Identifier: LGPL-2.1+
"""
Observation sets and training examples.

An ``Example`` pairs an ``ObservationSet`` (N points of {0,1}^D with one
output bit each) with the target formula it was generated from. Two regimes
exist:

    noiseless: the target uses all its D <= 10 variables and the observations
        are its full truth table.

    noisy: at most 6 active variables among up to 120, N points drawn by a
        random walk on the hypercube, and every input and output bit flipped
        with probability sigma.

Examples are stored as JSON lines, one example per line, with points and
outputs written as 0/1 strings and the target in prefix text format. Lines
starting with "#" carry the effective configuration and are skipped on read.
"""
import concurrent.futures
import dataclasses
import json
import logging

import numpy as np

from .formula import (
    CapacityError,
    FormulaError,
    evaluate_many,
    hypercube,
    max_variable,
    parse_text,
    to_text,
    truth_table,
)
from .generator import REGIMES, make_rng, sample_formula
from .helpers import ConfigError, bits_to_str, open_or_stdin, open_output

NOISELESS_MAX_DIM = 10

_logger = logging.getLogger(__name__)


class DataError(Exception):
    def __init__(self, msg, line=None):
        if line is not None:
            msg = f"line {line}: {msg}"
        super().__init__(msg)
        self.line = line


class ObservationSet:
    """
    ``N`` points of dimension ``D`` (an N x D uint8 matrix) and their outputs
    (a uint8 vector of length N).
    """

    __slots__ = ("D", "points", "outputs")

    def __init__(self, points, outputs, D=None):
        points = np.asarray(points, dtype=np.uint8)
        outputs = np.asarray(outputs, dtype=np.uint8).reshape(-1)
        if points.ndim != 2:
            raise DataError(f"points must be an N x D matrix, got shape {points.shape}")
        if D is None:
            D = points.shape[1]
        if points.shape[1] != D:
            raise DataError(f"points have dimension {points.shape[1]}, expected {D}")
        if len(outputs) != len(points):
            raise DataError(f"{len(points)} points but {len(outputs)} outputs")
        if len(points) < 1:
            raise DataError("an observation set needs at least one point")
        if (points.size and points.max() > 1) or outputs.max() > 1:
            raise DataError("points and outputs must be 0/1 values")
        self.D = int(D)
        self.points = points
        self.outputs = outputs

    @property
    def N(self):
        return len(self.outputs)

    def is_full_table(self):
        """True when the points are exactly the 2^D hypercube in lexicographic order."""
        return self.D <= NOISELESS_MAX_DIM and self.N == 1 << self.D and np.array_equal(self.points, hypercube(self.D))

    def accuracy_of(self, f):
        """Fraction of the observations on which ``f`` gives the observed output."""
        return float(np.mean(evaluate_many(f, self.points) == self.outputs.astype(bool)))

    def permuted(self, order):
        return ObservationSet(self.points[order], self.outputs[order], self.D)

    def __eq__(self, other):
        if not isinstance(other, ObservationSet):
            return NotImplemented
        return self.D == other.D and np.array_equal(self.points, other.points) and np.array_equal(self.outputs, other.outputs)

    def __repr__(self):
        return f"ObservationSet(D={self.D}, N={self.N})"


@dataclasses.dataclass(frozen=True)
class NoiseConfig:
    """
    Noisy-regime sampling ranges. ``fixed_*`` pin N, the walk flip rate or
    sigma to a single value.
    """

    n_min: int = 30
    n_max: int = 300
    gamma_min: float = 0.05
    gamma_max: float = 0.25
    sigma_max: float = 0.1
    fixed_n: int = None
    fixed_gamma: float = None
    fixed_sigma: float = None

    def __post_init__(self):
        if not 1 <= self.n_min <= self.n_max:
            raise ConfigError(f"need 1 <= n_min <= n_max, got {self.n_min}, {self.n_max}")
        if not 0.0 < self.gamma_min <= self.gamma_max < 1.0:
            raise ConfigError(f"need 0 < gamma_min <= gamma_max < 1, got {self.gamma_min}, {self.gamma_max}")
        if not 0.0 <= self.sigma_max <= 1.0:
            raise ConfigError(f"sigma_max must be in [0, 1], got {self.sigma_max}")
        if self.fixed_n is not None and self.fixed_n < 1:
            raise ConfigError(f"fixed_n must be >= 1, got {self.fixed_n}")
        if self.fixed_gamma is not None and not 0.0 < self.fixed_gamma < 1.0:
            raise ConfigError(f"fixed_gamma must be in (0, 1), got {self.fixed_gamma}")
        if self.fixed_sigma is not None and not 0.0 <= self.fixed_sigma <= 1.0:
            raise ConfigError(f"fixed_sigma must be in [0, 1], got {self.fixed_sigma}")

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)

    def sample_n(self, rng):
        return self.fixed_n if self.fixed_n is not None else int(rng.integers(self.n_min, self.n_max + 1))

    def sample_gamma(self, rng):
        return self.fixed_gamma if self.fixed_gamma is not None else float(rng.uniform(self.gamma_min, self.gamma_max))

    def sample_sigma(self, rng):
        return self.fixed_sigma if self.fixed_sigma is not None else float(rng.uniform(0.0, self.sigma_max))


@dataclasses.dataclass(eq=False)
class Example:
    observations: ObservationSet
    target: object = None
    regime: str = "noiseless"
    gamma: float = None
    sigma: float = None
    meta: object = None

    def __eq__(self, other):
        if not isinstance(other, Example):
            return NotImplemented
        return self.regime == other.regime and self.target == other.target and self.observations == other.observations


def full_hypercube(D):
    if D > NOISELESS_MAX_DIM:
        raise CapacityError(f"full hypercube limited to {NOISELESS_MAX_DIM} variables, got {D}")
    return hypercube(D)


def random_walk_sample(D, N, gamma, rng):
    """
    ``N`` points of a random walk on {0,1}^D: a uniform start, then every
    coordinate flipped independently with probability ``gamma`` per step.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"walk flip rate must be in (0, 1), got {gamma}")
    if N < 1:
        raise ValueError(f"need at least one point, got N={N}")
    start = rng.integers(0, 2, size=(1, D), dtype=np.uint8)
    flips = (rng.random((N - 1, D)) < gamma).astype(np.uint8)
    return np.bitwise_xor.accumulate(np.concatenate([start, flips]), axis=0)


def apply_flip_noise(obs, sigma, rng):
    if not 0.0 <= sigma <= 1.0:
        raise ValueError(f"flip probability must be in [0, 1], got {sigma}")
    pmask = (rng.random(obs.points.shape) < sigma).astype(np.uint8)
    omask = (rng.random(obs.N) < sigma).astype(np.uint8)
    return ObservationSet(obs.points ^ pmask, obs.outputs ^ omask, obs.D)


def observe(f, points, D=None):
    """Noiseless observations of ``f`` at ``points``."""
    points = np.asarray(points, dtype=np.uint8)
    return ObservationSet(points, evaluate_many(f, points).astype(np.uint8), D)


def observe_formula(f, meta, regime, noise, rng):
    """Example for an already sampled target ``f`` (see ``make_example()``)."""
    if regime == "noiseless":
        if meta.D > NOISELESS_MAX_DIM:
            raise CapacityError(f"noiseless examples are limited to {NOISELESS_MAX_DIM} variables")
        obs = ObservationSet(full_hypercube(meta.D), truth_table(f, meta.D), meta.D)
        return Example(obs, f, "noiseless", meta=meta)

    n = noise.sample_n(rng)
    gamma = noise.sample_gamma(rng)
    points = random_walk_sample(meta.D, n, gamma, rng)
    obs = observe(f, points, meta.D)
    sigma = noise.sample_sigma(rng)
    obs = apply_flip_noise(obs, sigma, rng)
    return Example(obs, f, "noisy", gamma=gamma, sigma=sigma, meta=meta)


def make_example(cfg, noise, rng):
    f, meta = sample_formula(cfg, rng)
    return observe_formula(f, meta, cfg.regime, noise, rng)


def _generate_chunk(cfg, noise, seed, indices):
    return [make_example(cfg, noise, make_rng(seed, i)) for i in indices]


def generate_examples(cfg, noise, seed, count, start=0, workers=1, chunk=256):
    """
    ``count`` examples for indices ``start .. start + count - 1``. Example
    ``i`` depends only on ``(seed, i)``, so the output does not depend on
    ``workers``.
    """
    indices = range(start, start + count)
    if workers <= 1 or count <= chunk:
        yield from _generate_chunk(cfg, noise, seed, indices)
        return

    chunks = [indices[i : i + chunk] for i in range(0, count, chunk)]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_generate_chunk, cfg, noise, seed, c) for c in chunks]
        for n, fut in enumerate(futures):
            yield from fut.result()
            _logger.debug(f"generated chunk {n + 1}/{len(chunks)}")


def parse_truth_table(s):
    """
    Observation set of a truth table written as 2^D 0/1 characters, variable
    0 being the most significant bit.
    """
    s = s.strip()
    n = len(s)
    if n == 0 or n & (n - 1) or s.strip("01"):
        raise DataError(f"a truth table is a 0/1 string of length 2^D, got {s[:40]!r}")
    D = n.bit_length() - 1
    if D > NOISELESS_MAX_DIM:
        raise CapacityError(f"truth table of {D} variables exceeds the limit of {NOISELESS_MAX_DIM}")
    return ObservationSet(full_hypercube(D), [int(c) for c in s], D)


def example_to_dict(ex):
    obs = ex.observations
    d = {
        "regime": ex.regime,
        "D": obs.D,
        "points": [bits_to_str(p) for p in obs.points],
        "outputs": bits_to_str(obs.outputs),
    }
    if ex.target is not None:
        d["target"] = to_text(ex.target)
    if ex.gamma is not None:
        d["gamma"] = ex.gamma
    if ex.sigma is not None:
        d["sigma"] = ex.sigma
    return d


def _bits(s, what, length, lineno):
    if not isinstance(s, str) or s.strip("01"):
        raise DataError(f"{what} must be a 0/1 string", lineno)
    if len(s) != length:
        raise DataError(f"{what} has length {len(s)}, expected {length}", lineno)
    return [1 if c == "1" else 0 for c in s]


def example_from_dict(d, lineno=None):
    try:
        regime = d["regime"]
        D = d["D"]
        points = d["points"]
        outputs = d["outputs"]
    except (KeyError, TypeError) as e:
        raise DataError(f"missing field {e}", lineno) from None
    if regime not in REGIMES:
        raise DataError(f"unknown regime {regime!r}", lineno)
    if not isinstance(D, int) or D < 0:
        raise DataError(f"D must be a non-negative integer, got {D!r}", lineno)
    if not isinstance(points, list) or not points:
        raise DataError("points must be a non-empty list", lineno)

    rows = np.array([_bits(p, f"point {i}", D, lineno) for i, p in enumerate(points)], dtype=np.uint8).reshape(len(points), D)
    outs = _bits(outputs, "outputs", len(points), lineno)
    obs = ObservationSet(rows, outs, D)

    target = None
    if d.get("target") is not None:
        try:
            target = parse_text(d["target"])
        except FormulaError as e:
            raise DataError(f"invalid target: {e}", lineno) from None
        if max_variable(target) >= D:
            raise DataError(f"target uses x_{max_variable(target)} but D={D}", lineno)

    return Example(obs, target, regime, gamma=d.get("gamma"), sigma=d.get("sigma"))


def write_jsonl(path, examples, header=None):
    """Write ``examples`` to ``path`` ("-" for stdout); ``header`` lines are written as comments first."""
    n = 0
    with open_output(path, "w") as f:
        for line in header or ():
            f.write(f"# {line}\n")
        for ex in examples:
            f.write(json.dumps(example_to_dict(ex), separators=(",", ":")))
            f.write("\n")
            n += 1
    return n


def iter_jsonl(path):
    with open_or_stdin(path, "r") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"invalid JSON: {e.msg}", lineno) from None
            if not isinstance(d, dict):
                raise DataError("expected a JSON object", lineno)
            yield example_from_dict(d, lineno)


def read_jsonl(path):
    return list(iter_jsonl(path))
