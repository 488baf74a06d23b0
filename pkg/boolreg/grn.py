# SPDX-License-Identifier: LGPL-2.1+
"""
Boolean networks: dynamics, inference of the update rules from time series,
influence graphs and the structural metrics used to score them.

A network of D genes holds one update formula per gene; gene i at time t+1
is ``updates[i]`` evaluated on the whole state at time t (synchronous
update).

Inference treats each gene as an independent regression problem: the states
at time t, with the gene's own column deleted, are the inputs and the gene's
bit at t+1 is the output. Deleting the column (instead of masking it) keeps a
gene out of its own update.

File formats::

    # network: one line per gene
    gene_0 = and x_1 not x_2
    gene_1 = x_0

    # trajectories: CSV, one row per time step, optional "trajectory" column
    trajectory,gene_0,gene_1
    0,1,0
    0,0,0
"""
import concurrent.futures
import dataclasses
import logging
import re
import time

import numpy as np
import pandas as pd

from .data import ObservationSet
from .encoding import EncodingError
from .evaluation import ConfusionCounts, perfect_recovery
from .formula import Const, FormulaError, active_variables, evaluate_many, max_variable, parse_text, remap_variables, to_text
from .generator import GeneratorConfig, make_rng, sample_formula
from .helpers import open_or_stdin, open_output
from .inference import NoCandidateError

GENE_PREFIX = "gene_"
TRAJECTORY_COLUMN = "trajectory"
METRICS = ("Acc", "Pre", "Rec", "F1", "MCC", "BM")
BENCHMARK_COLUMNS = [
    "network",
    "D",
    "edges",
    *METRICS,
    "dynamic_accuracy",
    "gene_perfect_recovery",
    "fallback_genes",
    "self_edges",
    "baseline_F1",
    "inference_time",
]

_logger = logging.getLogger(__name__)


class GrnError(Exception):
    pass


@dataclasses.dataclass(frozen=True)
class BooleanNetwork:
    """
    ``updates[i]`` computes gene i at t+1 from the state at t. ``fallback``
    lists the genes whose update was set to the majority constant because
    inference produced no candidate.
    """

    D: int
    updates: tuple
    fallback: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "updates", tuple(self.updates))
        object.__setattr__(self, "fallback", frozenset(self.fallback))
        if len(self.updates) != self.D:
            raise GrnError(f"network of {self.D} genes has {len(self.updates)} update rules")
        for i, u in enumerate(self.updates):
            if max_variable(u) >= self.D:
                raise GrnError(f"update of gene {i} reads x_{max_variable(u)}, network has {self.D} genes")


@dataclasses.dataclass(frozen=True)
class InfluenceGraph:
    """Edge ``(i, j)``: gene j appears in the update of gene i."""

    D: int
    edges: frozenset

    def adjacency(self):
        a = np.zeros((self.D, self.D), dtype=bool)
        for i, j in self.edges:
            a[i, j] = True
        return a

    def in_degrees(self):
        return [sum(1 for i, _ in self.edges if i == g) for g in range(self.D)]

    def self_edges(self):
        return sum(1 for i, j in self.edges if i == j)


def _states(net, state):
    s = np.asarray(state, dtype=np.uint8)
    if s.shape[-1] != net.D:
        raise GrnError(f"state has {s.shape[-1]} genes, network has {net.D}")
    return s


def step_many(net, states):
    """Next state of every row of ``states`` (an M x D matrix)."""
    states = _states(net, states).reshape(-1, net.D)
    nxt = np.empty_like(states)
    for i, u in enumerate(net.updates):
        nxt[:, i] = evaluate_many(u, states)
    return nxt


def step(net, state):
    return step_many(net, state)[0]


def trajectory(net, init, T):
    """``T + 1`` states starting at ``init``, as a (T + 1) x D uint8 matrix."""
    if T < 0:
        raise GrnError(f"trajectory length must be >= 0, got {T}")
    out = np.empty((T + 1, net.D), dtype=np.uint8)
    out[0] = _states(net, init)
    for t in range(T):
        out[t + 1] = step(net, out[t])
    return out


def simulate(net, count, T, rng):
    """``count`` trajectories of ``T`` steps from uniformly random initial states."""
    return [trajectory(net, rng.integers(0, 2, size=net.D), T) for _ in range(count)]


def transitions(trajectories):
    """Pooled ``(states at t, states at t+1)`` of a list of trajectories."""
    if not trajectories:
        raise GrnError("no trajectories")
    trajectories = [np.asarray(t, dtype=np.uint8) for t in trajectories]
    D = trajectories[0].shape[-1]
    before, after = [], []
    for k, traj in enumerate(trajectories):
        if traj.ndim != 2 or traj.shape[1] != D:
            raise GrnError(f"trajectory {k} does not have {D} genes")
        if len(traj) < 2:
            raise GrnError(f"trajectory {k} has {len(traj)} state(s), inference needs at least 2")
        before.append(traj[:-1])
        after.append(traj[1:])
    return np.concatenate(before), np.concatenate(after)


def _majority(bits):
    return Const(1 if 2 * int(np.sum(bits)) >= len(bits) else 0)


def _infer_gene(i, X, Y, predictor, rng):
    """``(update formula, fell back)`` for gene ``i``."""
    out = Y[:, i]
    if out.min() == out.max():
        return Const(int(out[0])), False

    others = [j for j in range(X.shape[1]) if j != i]
    if not others:
        return _majority(out), True
    obs = ObservationSet(X[:, others], out, len(others))
    try:
        cand = predictor(obs, rng=rng)
    except NoCandidateError:
        _logger.info(f"no candidate for gene {i}, using the majority constant")
        return _majority(out), True
    except EncodingError as e:
        _logger.warning(f"gene {i}: {e}, using the majority constant")
        return _majority(out), True
    return remap_variables(cand.formula, others.__getitem__), False


def infer_network(trajectories, predictor, seed=0, workers=1):
    """
    Fit one update rule per gene from pooled trajectories. Genes run
    independently; ``workers`` > 1 spreads them over threads.
    """
    X, Y = transitions(trajectories)
    D = X.shape[1]

    def run(i):
        return _infer_gene(i, X, Y, predictor, make_rng(seed, i))

    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(D)))
    else:
        results = [run(i) for i in range(D)]

    fallback = {i for i, (_, flagged) in enumerate(results) if flagged}
    return BooleanNetwork(D, [f for f, _ in results], fallback)


def influence_graph(net):
    return InfluenceGraph(net.D, frozenset((i, j) for i, u in enumerate(net.updates) for j in active_variables(u)))


def structural_confusion(predicted, truth):
    if predicted.D != truth.D:
        raise GrnError(f"cannot compare graphs of {predicted.D} and {truth.D} genes")
    return ConfusionCounts.of(predicted.adjacency().ravel(), truth.adjacency().ravel())


def structural_metrics(predicted, truth):
    """Acc, Pre, Rec, F1, MCC and BM of the edges of ``predicted`` over all D^2 ordered gene pairs."""
    return structural_confusion(predicted, truth).metrics()


def dynamic_accuracy(net, trajectories):
    """Fraction of next-state bits, over all transitions and genes, that ``net`` predicts correctly."""
    X, Y = transitions(trajectories)
    if X.shape[1] != net.D:
        raise GrnError(f"trajectories have {X.shape[1]} genes, network has {net.D}")
    return float(np.mean(step_many(net, X) == Y))


def gene_accuracies(net, trajectories):
    X, Y = transitions(trajectories)
    return np.mean(step_many(net, X) == Y, axis=0)


def random_network(D, max_regulators, rng, b_max=None, max_attempts=100):
    """
    Random network with 1 to ``max_regulators`` regulators per gene, never
    itself. Each update is a generated formula over exactly its regulators.
    """
    if D < 2:
        raise GrnError(f"a random network needs at least 2 genes, got {D}")
    if max_regulators < 1:
        raise GrnError(f"max_regulators must be >= 1, got {max_regulators}")

    updates = []
    for i in range(D):
        others = [j for j in range(D) if j != i]
        k = int(rng.integers(1, min(max_regulators, D - 1) + 1))
        regulators = sorted(int(j) for j in rng.choice(others, size=k, replace=False))
        cfg = GeneratorConfig.noisy(d_max=k, s_max=k, b_max=b_max or 2 * k, fixed_dim=k, fixed_active=k)
        for _ in range(max_attempts):
            f, _ = sample_formula(cfg, rng)
            if len(active_variables(f)) == k:
                break
        else:
            raise GrnError(f"could not draw an update of gene {i} that reads all {k} regulators")
        updates.append(remap_variables(f, regulators.__getitem__))
    return BooleanNetwork(D, updates)


def random_graph_baseline(truth, rng):
    """Random graph with the in-degrees of ``truth`` and no self-edges."""
    edges = set()
    for i, deg in enumerate(truth.in_degrees()):
        others = [j for j in range(truth.D) if j != i]
        deg = min(deg, len(others))
        edges.update((i, int(j)) for j in rng.choice(others, size=deg, replace=False))
    return InfluenceGraph(truth.D, frozenset(edges))


def split_trajectories(trajectories, test_fraction, rng):
    """``(train, test)``: a random ``test_fraction`` of the trajectories is held out."""
    if not 0.0 <= test_fraction < 1.0:
        raise GrnError(f"test fraction must be in [0, 1), got {test_fraction}")
    n = len(trajectories)
    n_test = int(round(n * test_fraction))
    if test_fraction > 0 and n_test == 0 and n > 1:
        n_test = 1
    order = rng.permutation(n)
    test = [trajectories[k] for k in sorted(order[:n_test])]
    train = [trajectories[k] for k in sorted(order[n_test:])]
    return train, test


_GENE_RE = re.compile(rf"^\s*{GENE_PREFIX}(\d+)\s*=\s*(.*?)\s*$")


def read_network(path):
    rules = {}
    with open_or_stdin(path, "r") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            m = _GENE_RE.match(line)
            if not m:
                raise GrnError(f"line {lineno}: expected '{GENE_PREFIX}<i> = <formula>'")
            i = int(m.group(1))
            if i in rules:
                raise GrnError(f"line {lineno}: duplicate rule for {GENE_PREFIX}{i}")
            try:
                rules[i] = parse_text(m.group(2))
            except FormulaError as e:
                raise GrnError(f"line {lineno}: {e}") from None

    D = len(rules)
    if sorted(rules) != list(range(D)):
        raise GrnError(f"genes must be numbered 0..{D - 1}, got {sorted(rules)}")
    return BooleanNetwork(D, [rules[i] for i in range(D)])


def write_network(path, net, header=None):
    with open_output(path, "w") as f:
        for line in header or ():
            f.write(f"# {line}\n")
        for i in sorted(net.fallback):
            f.write(f"# {GENE_PREFIX}{i}: no candidate, majority constant\n")
        for i, u in enumerate(net.updates):
            f.write(f"{GENE_PREFIX}{i} = {to_text(u)}\n")


def read_trajectories(path):
    """List of T x D uint8 matrices from a trajectories CSV."""
    try:
        df = pd.read_csv(path, comment="#")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise GrnError(f"{path}: {e}") from None

    genes = [c for c in df.columns if c != TRAJECTORY_COLUMN]
    expected = [f"{GENE_PREFIX}{i}" for i in range(len(genes))]
    if genes != expected:
        raise GrnError(f"{path}: gene columns must be {', '.join(expected[:3])}..., got {', '.join(map(str, genes[:3]))}...")
    if df[genes].isna().any().any() or not df[genes].isin([0, 1]).all().all():
        raise GrnError(f"{path}: gene values must be 0 or 1")

    if TRAJECTORY_COLUMN not in df.columns:
        return [df[genes].to_numpy(dtype=np.uint8)]
    return [g[genes].to_numpy(dtype=np.uint8) for _, g in df.groupby(TRAJECTORY_COLUMN, sort=True)]


def write_trajectories(path, trajectories, header=None):
    frames = []
    for k, traj in enumerate(trajectories):
        df = pd.DataFrame(np.asarray(traj, dtype=np.uint8), columns=[f"{GENE_PREFIX}{i}" for i in range(traj.shape[1])])
        df.insert(0, TRAJECTORY_COLUMN, k)
        frames.append(df)
    with open_output(path, "w") as f:
        for line in header or ():
            f.write(f"# {line}\n")
        pd.concat(frames, ignore_index=True).to_csv(f, index=False)


def score(predicted, truth, trajectories=None):
    """Structural metrics of ``predicted`` against ``truth``, plus the dynamic accuracy on ``trajectories``."""
    report = structural_metrics(influence_graph(predicted), influence_graph(truth))
    if trajectories:
        report["dynamic_accuracy"] = dynamic_accuracy(predicted, trajectories)
    return report


def benchmark(
    predictor,
    networks=20,
    dims=(8, 16),
    max_regulators=3,
    count=10,
    T=20,
    test_fraction=0.25,
    seed=0,
    workers=1,
):
    """
    Infer ``networks`` random networks (D uniform in ``dims``) from noiseless
    trajectories and score each one. Returns a DataFrame with
    ``BENCHMARK_COLUMNS``; ``baseline_F1`` is the structural F1 of a
    degree-matched random graph.
    """
    rows = []
    for n in range(networks):
        rng = make_rng(seed, n)
        D = int(rng.integers(dims[0], dims[1] + 1))
        truth = random_network(D, max_regulators, rng)
        train, test = split_trajectories(simulate(truth, count, T, rng), test_fraction, rng)

        t0 = time.perf_counter()
        inferred = infer_network(train, predictor, seed=seed, workers=workers)
        elapsed = time.perf_counter() - t0

        true_graph = influence_graph(truth)
        pred_graph = influence_graph(inferred)
        metrics = structural_metrics(pred_graph, true_graph)
        baseline = structural_metrics(random_graph_baseline(true_graph, rng), true_graph)
        rows.append(
            {
                "network": n,
                "D": D,
                "edges": len(true_graph.edges),
                **metrics,
                "dynamic_accuracy": dynamic_accuracy(inferred, test or train),
                "gene_perfect_recovery": float(np.mean([perfect_recovery(a) for a in gene_accuracies(inferred, train)])),
                "fallback_genes": len(inferred.fallback),
                "self_edges": pred_graph.self_edges(),
                "baseline_F1": baseline["F1"],
                "inference_time": elapsed,
            }
        )
        _logger.info(f"network {n + 1}/{networks}: D={D} F1={metrics['F1']:.3f} baseline={baseline['F1']:.3f}")
    return pd.DataFrame(rows, columns=BENCHMARK_COLUMNS)
