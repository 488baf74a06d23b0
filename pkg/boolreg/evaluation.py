# SPDX-License-Identifier: LGPL-2.1+
"""
Metrics and experiment runners.

Per prediction the metrics are the fitting accuracy (agreement on the
observations given to the predictor) and, in the noisy regime, the test
accuracy on a fresh random walk through the uncorrupted target. A perfect
recovery is an accuracy of exactly 1.

``sweep()`` varies one difficulty factor over a grid and averages the
metrics over the same seeded samples for every grid point.
``memorization_probe()`` counts how often generated functions repeat within
one epoch of training data. ``length_generalization_eval()`` feeds more
observations, or more active variables, than seen in training.

Binary-classification metrics (``ConfusionCounts``) are shared with the GRN
and tabular harnesses.
"""
import collections
import concurrent.futures
import dataclasses
import logging
import math

import numpy as np
import pandas as pd

from .circuits import and_first, or_first, standard_circuits
from .data import NOISELESS_MAX_DIM, ObservationSet, full_hypercube, observe, observe_formula, random_walk_sample
from .formula import Formula, active_variables, binary_gate_count, to_text, truth_table
from .generator import make_rng, sample_formula
from .helpers import ConfigError
from .inference import NoCandidateError

SWEEP_AXES = ("gates", "active_vars", "N", "flip_rate", "inactive_vars")
SWEEP_COLUMNS = [
    "axis",
    "value",
    "samples",
    "skipped",
    "no_candidate",
    "fitting_acc",
    "test_acc",
    "fitting_perfect_recovery",
    "test_perfect_recovery",
]
EPOCH_SIZE = 300000
PROBE_FUNCTIONS = 100

_logger = logging.getLogger(__name__)


def accuracy(f, obs):
    """Fraction of the points of ``obs`` where ``f`` matches the observed output."""
    return obs.accuracy_of(f)


def perfect_recovery(acc):
    return 1 if acc == 1.0 else 0


@dataclasses.dataclass(frozen=True)
class ConfusionCounts:
    TP: int = 0
    TN: int = 0
    FP: int = 0
    FN: int = 0

    def __post_init__(self):
        if min(self.TP, self.TN, self.FP, self.FN) < 0:
            raise ValueError(f"confusion counts must be non-negative: {self}")

    @classmethod
    def of(cls, predicted, truth):
        p = np.asarray(predicted, dtype=bool)
        t = np.asarray(truth, dtype=bool)
        if p.shape != t.shape:
            raise ValueError(f"shape mismatch {p.shape} vs {t.shape}")
        return cls(
            TP=int(np.sum(p & t)),
            TN=int(np.sum(~p & ~t)),
            FP=int(np.sum(p & ~t)),
            FN=int(np.sum(~p & t)),
        )

    def __add__(self, other):
        return ConfusionCounts(self.TP + other.TP, self.TN + other.TN, self.FP + other.FP, self.FN + other.FN)

    @property
    def total(self):
        return self.TP + self.TN + self.FP + self.FN

    def accuracy(self):
        return _ratio(self.TP + self.TN, self.total)

    def precision(self):
        return _ratio(self.TP, self.TP + self.FP)

    def recall(self):
        return _ratio(self.TP, self.TP + self.FN)

    def f1(self):
        p, r = self.precision(), self.recall()
        return _ratio(2 * p * r, p + r)

    def mcc(self):
        den = (self.TP + self.FP) * (self.TP + self.FN) * (self.TN + self.FP) * (self.TN + self.FN)
        if den == 0:
            return 0.0
        return (self.TP * self.TN - self.FP * self.FN) / math.sqrt(den)

    def bm(self):
        """Bookmaker informedness (Youden's J)."""
        return self.recall() + _ratio(self.TN, self.TN + self.FP) - 1

    def metrics(self):
        return {
            "Acc": self.accuracy(),
            "Pre": self.precision(),
            "Rec": self.recall(),
            "F1": self.f1(),
            "MCC": self.mcc(),
            "BM": self.bm(),
        }


def _ratio(num, den):
    return num / den if den else 0.0


def f1_score(predicted, truth):
    """F1 with positives = 1; 0 when there are no predicted or no true positives."""
    return ConfusionCounts.of(predicted, truth).f1()


def test_points(example, rng, n=None):
    """Fresh walk points for ``example``: same D, same walk flip rate, ``n`` points (default: same N)."""
    obs = example.observations
    return random_walk_sample(obs.D, n or obs.N, example.gamma, rng)


def fitting_vs_test_split(example, predictor, rng=None, n_test=None):
    """
    ``(fitting accuracy, test accuracy, candidate)``. The test accuracy is None
    in the noiseless regime, where the observations are the whole table.
    """
    rng = rng if rng is not None else np.random.default_rng()
    cand = predictor(example.observations, rng=rng)
    fit = accuracy(cand.formula, example.observations)
    if example.regime == "noiseless":
        return fit, None, cand
    if example.target is None or example.gamma is None:
        raise ConfigError("test accuracy needs the example's target and walk flip rate")
    pts = test_points(example, rng, n_test)
    test = accuracy(cand.formula, observe(example.target, pts, example.observations.D))
    return fit, test, cand


def _axis_configs(axis, value, gen_cfg, noise_cfg):
    if axis in ("N", "flip_rate") and gen_cfg.regime == "noiseless":
        raise ConfigError(f"sweep axis {axis!r} needs the noisy regime, noiseless observations are the whole table")
    if axis == "gates":
        return gen_cfg.replace(max_gates=int(value)), noise_cfg
    if axis == "active_vars":
        if gen_cfg.regime == "noiseless":
            return gen_cfg.replace(fixed_dim=int(value)), noise_cfg
        return gen_cfg.replace(fixed_active=int(value)), noise_cfg
    if axis == "N":
        return gen_cfg, noise_cfg.replace(fixed_n=int(value))
    if axis == "flip_rate":
        return gen_cfg, noise_cfg.replace(fixed_sigma=float(value))
    if axis == "inactive_vars":
        return gen_cfg.replace(fixed_inactive=int(value)), noise_cfg
    raise ConfigError(f"unknown sweep axis {axis!r}, expected one of {', '.join(SWEEP_AXES)}")


def _sweep_example(axis, value, gen_cfg, noise_cfg, rng, max_attempts):
    """Example for one sweep sample, or None when the gate count could not be hit."""
    if axis == "gates":
        for _ in range(max_attempts):
            f, meta = sample_formula(gen_cfg, rng)
            if binary_gate_count(f) == value:
                break
        else:
            return None
    else:
        f, meta = sample_formula(gen_cfg, rng)
    return observe_formula(f, meta, gen_cfg.regime, noise_cfg, rng)


def _aggregate(axis, value, results):
    done = [r for r in results if r is not None and r != "no-candidate"]
    fits = [fit for fit, _ in done]
    tests = [test for _, test in done if test is not None]
    return {
        "axis": axis,
        "value": value,
        "samples": len(done),
        "skipped": sum(1 for r in results if r is None),
        "no_candidate": sum(1 for r in results if r == "no-candidate"),
        "fitting_acc": float(np.mean(fits)) if fits else math.nan,
        "test_acc": float(np.mean(tests)) if tests else math.nan,
        "fitting_perfect_recovery": float(np.mean([perfect_recovery(a) for a in fits])) if fits else math.nan,
        "test_perfect_recovery": float(np.mean([perfect_recovery(a) for a in tests])) if tests else math.nan,
    }


def _map(fn, items, workers):
    if workers <= 1:
        return [fn(i) for i in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def sweep(predictor, axis, grid, gen_cfg, noise_cfg, samples=10000, seed=0, workers=1, max_attempts=1000):
    """
    Metrics for every value of ``grid`` along ``axis`` as a DataFrame with
    ``SWEEP_COLUMNS``. Sample ``i`` of every grid point starts from
    ``make_rng(seed, i)``, so grid points are compared on paired draws.

    On the "gates" axis targets are drawn until their binary gate count
    equals the grid value; samples that miss after ``max_attempts`` draws are
    counted in ``skipped``.
    """
    rows = []
    for value in grid:
        cfg, noise = _axis_configs(axis, value, gen_cfg, noise_cfg)

        def one(i):
            ex = _sweep_example(axis, value, cfg, noise, make_rng(seed, i), max_attempts)
            if ex is None:
                return None
            try:
                fit, test, _ = fitting_vs_test_split(ex, predictor, make_rng(seed, i, 1))
            except NoCandidateError:
                return "no-candidate"
            return fit, test

        results = _map(one, range(samples), workers)
        rows.append(_aggregate(axis, value, results))
        _logger.info(f"sweep {axis}={value}: {rows[-1]}")
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def _epoch_keys(cfg, seed, indices):
    keys = []
    for i in indices:
        f, meta = sample_formula(cfg, make_rng(seed, 0, i))
        keys.append((meta.D, truth_table(f, meta.D).tobytes()))
    return keys


def _epoch_counts(cfg, seed, epoch_size, workers, chunk=2000):
    counts = collections.Counter()
    chunks = [range(s, min(s + chunk, epoch_size)) for s in range(0, epoch_size, chunk)]
    if workers <= 1:
        for c in chunks:
            counts.update(_epoch_keys(cfg, seed, c))
        return counts
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        for n, keys in enumerate(pool.map(_epoch_keys, [cfg] * len(chunks), [seed] * len(chunks), chunks)):
            counts.update(keys)
            _logger.debug(f"probe epoch chunk {n + 1}/{len(chunks)}")
    return counts


def memorization_probe(gen_cfg, dims=None, epoch_size=EPOCH_SIZE, probe_size=PROBE_FUNCTIONS, seed=0, workers=1):
    """
    For every D in ``dims``: draw min(2^(2^D), ``probe_size``) distinct
    functions of D variables from the generator, and count how many times
    each truth table occurs in one epoch of ``epoch_size`` generated targets.
    Returns a DataFrame (D, functions, mean_count, max_count).
    """
    if gen_cfg.regime != "noiseless":
        raise ConfigError("the memorization probe works on noiseless targets")
    dims = dims or range(1, gen_cfg.d_max + 1)
    counts = _epoch_counts(gen_cfg, seed, epoch_size, workers)

    rows = []
    for D in dims:
        want = min(2 ** (2**D), probe_size) if D < 6 else probe_size
        rng = make_rng(seed, 1, D)
        cfg = gen_cfg.replace(fixed_dim=D)
        tables = set()
        for _ in range(50 * want):
            if len(tables) == want:
                break
            f, _ = sample_formula(cfg, rng)
            tables.add(truth_table(f, D).tobytes())
        if len(tables) < want:
            _logger.warning(f"only {len(tables)} distinct functions of {D} variables found, wanted {want}")
        seen = [counts[(D, t)] for t in tables]
        rows.append({"D": D, "functions": len(tables), "mean_count": float(np.mean(seen)), "max_count": int(max(seen))})
    return pd.DataFrame(rows, columns=["D", "functions", "mean_count", "max_count"])


def length_generalization_eval(predictor, gen_cfg, noise_cfg, values, axis="N", samples=100, seed=0, workers=1):
    """
    Metrics past the training range. On the "N" axis this is a sweep over N
    without truncation. On the "active" axis the targets are the AND and the
    OR of the first S variables, given as full truth tables; the extra
    column ``predicted_active`` counts the variables of the prediction.
    """
    if axis == "N":
        return sweep(predictor, "N", values, gen_cfg, noise_cfg, samples, seed, workers)
    if axis != "active":
        raise ConfigError(f"unknown length-generalization axis {axis!r}, expected N or active")

    rows = []
    for S in values:
        if S > NOISELESS_MAX_DIM:
            raise ConfigError(f"active-variable probe is limited to {NOISELESS_MAX_DIM} variables")
        for op, f in (("and", and_first(S)), ("or", or_first(S))):
            obs = ObservationSet(full_hypercube(S), truth_table(f, S), S)
            row = _aggregate("active", S, [])
            row["op"] = op
            try:
                cand = predictor(obs, rng=make_rng(seed, S))
            except NoCandidateError:
                row.update(no_candidate=1, predicted_active=0)
            else:
                row.update(
                    samples=1,
                    fitting_acc=cand.fitting_accuracy,
                    fitting_perfect_recovery=float(perfect_recovery(cand.fitting_accuracy)),
                    predicted_active=len(active_variables(cand.formula)),
                )
            rows.append(row)
    return pd.DataFrame(rows, columns=[*SWEEP_COLUMNS, "op", "predicted_active"])


def evaluate_circuits(predictor, names=None, seed=0):
    """
    Predict every circuit of ``standard_circuits()`` (or the ``names`` subset)
    from its full truth table. Returns a DataFrame (circuit, D,
    fitting_acc, perfect_recovery, gates, tokens, formula).
    """
    circuits = standard_circuits()
    names = names or list(circuits)
    rows = []
    for n, name in enumerate(names):
        try:
            D, target = circuits[name]
        except KeyError:
            raise ConfigError(f"unknown circuit {name!r}") from None
        table = truth_table(target, D) if isinstance(target, Formula) else target
        obs = ObservationSet(full_hypercube(D), table, D)
        row = {"circuit": name, "D": D}
        try:
            cand = predictor(obs, rng=make_rng(seed, n))
        except NoCandidateError:
            row.update(fitting_acc=math.nan, perfect_recovery=0, gates=-1, tokens=-1, formula="")
        else:
            row.update(
                fitting_acc=cand.fitting_accuracy,
                perfect_recovery=perfect_recovery(cand.fitting_accuracy),
                gates=cand.gate_count,
                tokens=cand.token_length,
                formula=to_text(cand.formula),
            )
        rows.append(row)
    return pd.DataFrame(rows, columns=["circuit", "D", "fitting_acc", "perfect_recovery", "gates", "tokens", "formula"])
