# SPDX-License-Identifier: LGPL-2.1+
"""Predictors and models with known behavior for the test suite."""
import numpy as np
import torch

from boolreg.encoding import Vocabulary
from boolreg.formula import Const
from boolreg.inference import Candidate, NoCandidateError
from boolreg.model import FormulaModel, ModelConfig
from boolreg.synthesis import minimize


class FormulaPredictor:
    """Always answers ``formula``."""

    def __init__(self, formula):
        self.formula = formula

    def __call__(self, obs, rng=None):
        return Candidate.of(self.formula, obs)


class TablePredictor:
    """
    Minimized sum of products of the observations, unobserved points being
    0. Exact on full truth tables and on noiseless samples.
    """

    def __init__(self):
        self.calls = 0

    def __call__(self, obs, rng=None):
        self.calls += 1
        weights = 1 << np.arange(obs.D - 1, -1, -1)
        table = np.zeros(1 << obs.D, dtype=np.uint8)
        table[obs.points.astype(np.int64) @ weights] = obs.outputs
        return Candidate.of(minimize(table, obs.D).formula, obs)


class MajorityPredictor:
    def __call__(self, obs, rng=None):
        return Candidate.of(Const(2 * int(obs.outputs.sum()) >= obs.N), obs)


class FailingPredictor:
    def __call__(self, obs, rng=None):
        raise NoCandidateError("no valid formula")


class ScriptedModel:
    """
    Decoder stand-in: whatever the input, the next token is ``script[t]``
    with overwhelming probability (``<eos>`` past the end of the script).
    """

    def __init__(self, script, d_max=4, regime="noiseless"):
        self.vocab = Vocabulary(d_max)
        self.config = ModelConfig(d_max=d_max, regime=regime)
        self.script = [self.vocab.dec_index[t] for t in script]
        self.device = torch.device("cpu")

    def eval(self):
        return self

    def context_of(self, rows, row_pad=None):
        return torch.zeros(1, rows.shape[1], 1)

    def decode_step(self, context, prefix, context_pad=None):
        t = prefix.shape[1] - 1
        tok = self.script[t] if t < len(self.script) else self.vocab.eos_id
        logits = torch.zeros(prefix.shape[0], len(self.vocab))
        logits[:, tok] = 50.0
        return logits


def tiny_model(d_max=4, regime="noiseless", seed=0):
    torch.manual_seed(seed)
    config = ModelConfig(enc_layers=1, dec_layers=1, heads=2, emb_dim=16, d_max=d_max, regime=regime)
    return FormulaModel(config, Vocabulary(d_max))


class TreeModel:
    """
    Decoder stand-in following a probability tree: ``tree`` maps a prefix
    (tuple of formula tokens) to ``{token: probability}``. Tokens missing
    from an entry get a negligible probability, prefixes missing from the
    tree end with ``<eos>``.
    """

    def __init__(self, tree, d_max=4, regime="noiseless"):
        self.vocab = Vocabulary(d_max)
        self.config = ModelConfig(d_max=d_max, regime=regime)
        self.tree = tree
        self.device = torch.device("cpu")
        self.prefixes = []

    def eval(self):
        return self

    def context_of(self, rows, row_pad=None):
        return torch.zeros(1, rows.shape[1], 1)

    def decode_step(self, context, prefix, context_pad=None):
        logits = torch.full((prefix.shape[0], len(self.vocab)), -50.0, dtype=torch.float64)
        for b, ids in enumerate(prefix.tolist()):
            key = tuple(self.vocab.decoder_tokens[i] for i in ids[1:])
            self.prefixes.append(key)
            for tok, p in self.tree.get(key, {"<eos>": 1.0}).items():
                logits[b, self.vocab.dec_index[tok]] = float(np.log(p))
        return logits
