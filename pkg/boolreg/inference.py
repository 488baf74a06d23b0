# SPDX-License-Identifier: LGPL-2.1+
"""
Candidate generation and ranking.

``sample_candidates()`` draws k sequences from the decoder (temperature 0 is
greedy decoding), ``beam_candidates()`` runs a length-normalized beam search.
Sequences that do not decode to a formula over the observed variables are
dropped. ``rank()`` orders candidates by fitting accuracy, then binary gate
count, then token length, then ``Formula.sort_key``.
"""
import dataclasses
import logging

import numpy as np
import torch

from .encoding import EncodingError, decode_target, encode_observations
from .formula import Formula, max_variable

_logger = logging.getLogger(__name__)


class NoCandidateError(Exception):
    pass


@dataclasses.dataclass(frozen=True)
class Candidate:
    formula: Formula
    fitting_accuracy: float
    gate_count: int
    token_length: int
    valid: bool = True
    log_prob: float = None

    @classmethod
    def of(cls, f, obs, log_prob=None):
        return cls(f, obs.accuracy_of(f), f.gates, f.ntokens, True, log_prob)

    def rank_key(self):
        return (-self.fitting_accuracy, self.gate_count, self.token_length, self.formula.sort_key)


class CandidateList(list):
    """Valid candidates; ``dropped`` counts the sequences that did not decode."""

    def __init__(self, items=(), dropped=0):
        super().__init__(items)
        self.dropped = dropped


def _context(model, obs, regime):
    rows = encode_observations(obs, model.vocab, regime or model.config.regime)
    rows = torch.as_tensor(rows, dtype=torch.long, device=model.device).unsqueeze(0)
    return model.context_of(rows)


def _to_candidates(model, obs, seqs, log_probs=None):
    out = CandidateList()
    for n, ids in enumerate(seqs):
        try:
            f = decode_target(ids, model.vocab)
        except EncodingError as e:
            _logger.debug(f"dropped candidate: {e}")
            out.dropped += 1
            continue
        if max_variable(f) >= obs.D:
            _logger.debug(f"dropped candidate using x_{max_variable(f)} with D={obs.D}")
            out.dropped += 1
            continue
        out.append(Candidate.of(f, obs, None if log_probs is None else log_probs[n]))
    return out


def _torch_generator(rng, device):
    rng = rng if rng is not None else np.random.default_rng()
    g = torch.Generator(device=device)
    g.manual_seed(int(rng.integers(0, 2**62)))
    return g


@torch.no_grad()
def sample_candidates(model, obs, k=10, temperature=1.0, rng=None, regime=None):
    """
    ``k`` autoregressive samples of at most ``max_target_len`` formula
    tokens each, decoded and scored on ``obs``. Raises ``NoCandidateError``
    when none of them is valid.
    """
    if k < 1:
        raise ValueError(f"need at least one candidate, got k={k}")
    if temperature < 0:
        raise ValueError(f"temperature must be >= 0, got {temperature}")

    model.eval()
    vocab = model.vocab
    context = _context(model, obs, regime).expand(k, -1, -1)
    g = _torch_generator(rng, model.device)

    seqs = torch.full((k, 1), vocab.bos_id, dtype=torch.long, device=model.device)
    done = torch.zeros(k, dtype=torch.bool, device=model.device)
    # formula tokens plus the end token
    for _ in range(model.config.max_target_len + 1):
        logits = model.decode_step(context, seqs)
        if temperature == 0:
            nxt = logits.argmax(-1)
        else:
            probs = torch.softmax(logits.double() / temperature, dim=-1)
            nxt = torch.multinomial(probs, 1, generator=g).squeeze(1)
        nxt = torch.where(done, torch.full_like(nxt, vocab.pad_id), nxt)
        seqs = torch.cat([seqs, nxt.unsqueeze(1)], dim=1)
        done |= nxt == vocab.eos_id
        if bool(done.all()):
            break

    cands = _to_candidates(model, obs, seqs.tolist())
    if not cands:
        raise NoCandidateError(f"none of the {k} sampled sequences is a valid formula")
    return cands


@torch.no_grad()
def beam_candidates(model, obs, beam_size=8, regime=None):
    """
    Length-normalized beam search: hypotheses are scored by their total
    log-probability divided by their length (formula tokens plus the end
    token). Returns up to ``beam_size`` candidates, best score first.
    """
    if beam_size < 1:
        raise ValueError(f"beam_size must be >= 1, got {beam_size}")

    model.eval()
    vocab = model.vocab
    context = _context(model, obs, regime)
    alive = torch.full((1, 1), vocab.bos_id, dtype=torch.long, device=model.device)
    alive_lp = torch.zeros(1, dtype=torch.float64, device=model.device)
    finished = []
    max_len = model.config.max_target_len + 1

    for length in range(1, max_len + 1):
        logits = model.decode_step(context.expand(len(alive), -1, -1), alive)
        lp = torch.log_softmax(logits.double(), dim=-1)
        lp[:, vocab.pad_id] = -torch.inf
        lp[:, vocab.bos_id] = -torch.inf
        if length == max_len:
            # only the end token still fits
            keep = lp[:, vocab.eos_id].clone()
            lp[:] = -torch.inf
            lp[:, vocab.eos_id] = keep

        total = (alive_lp.unsqueeze(1) + lp).reshape(-1)
        # up to beam_size of these may end here, the rest refill the beam
        top_lp, top_idx = total.topk(min(2 * beam_size, total.numel()))
        nv = lp.shape[1]
        next_alive, next_lp = [], []
        for score, idx in zip(top_lp.tolist(), top_idx.tolist()):
            if score == -float("inf"):
                continue
            beam, tok = divmod(idx, nv)
            seq = alive[beam].tolist() + [tok]
            if tok == vocab.eos_id:
                finished.append((score / length, seq))
            elif len(next_alive) < beam_size:
                next_alive.append(seq)
                next_lp.append(score)

        finished.sort(key=lambda t: -t[0])
        del finished[beam_size:]
        if not next_alive:
            break
        # log-probabilities only go down: an alive hypothesis scores at most
        # its current total spread over the longest possible sequence
        if len(finished) == beam_size and max(next_lp) / max_len <= finished[-1][0]:
            _logger.debug(f"beam search stopped after {length} steps")
            break
        alive = torch.tensor(next_alive, dtype=torch.long, device=model.device)
        alive_lp = torch.tensor(next_lp, dtype=torch.float64, device=model.device)

    cands = _to_candidates(model, obs, [s for _, s in finished], [lp for lp, _ in finished])
    if not cands:
        raise NoCandidateError(f"beam search with beam_size={beam_size} found no valid formula")
    return cands


def rank(candidates, obs=None):
    """
    Candidates best first. With ``obs`` the fitting accuracies are computed
    again on those observations.
    """
    if obs is not None:
        candidates = [dataclasses.replace(c, fitting_accuracy=obs.accuracy_of(c.formula)) for c in candidates]
    return sorted(candidates, key=Candidate.rank_key)


class Predictor:
    """
    Callable ``obs -> Candidate`` wrapping a model and its decoding options.

    ``mode`` is "sample" (``k`` samples at ``temperature``) or "beam".
    """

    def __init__(self, model, k=10, temperature=1.0, mode="sample", beam_size=8, seed=0, regime=None):
        if mode not in ("sample", "beam"):
            raise ValueError(f"unknown decoding mode {mode!r}")
        self.model = model
        self.k = k
        self.temperature = temperature
        self.mode = mode
        self.beam_size = beam_size
        self.regime = regime
        self.rng = np.random.default_rng(seed)

    def candidates(self, obs, rng=None):
        if self.mode == "beam":
            return beam_candidates(self.model, obs, self.beam_size, self.regime)
        return sample_candidates(self.model, obs, self.k, self.temperature, rng if rng is not None else self.rng, self.regime)

    def ranked(self, obs, rng=None):
        return rank(self.candidates(obs, rng))

    def __call__(self, obs, rng=None):
        return self.ranked(obs, rng)[0]


def predict(model, obs, k=10, temperature=1.0, rng=None, mode="sample", beam_size=8, regime=None):
    """Best candidate for ``obs``; raises ``NoCandidateError`` when nothing valid was decoded."""
    p = Predictor(model, k, temperature, mode, beam_size, regime=regime)
    return p(obs, rng)
