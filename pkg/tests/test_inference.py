# SPDX-License-Identifier: LGPL-2.1+
import math
import unittest

import numpy as np

from boolreg.data import ObservationSet, parse_truth_table
from boolreg.formula import TRUE, And, Not, Var, parse_text
from boolreg.inference import (
    Candidate,
    NoCandidateError,
    Predictor,
    beam_candidates,
    predict,
    rank,
    sample_candidates,
)

from fakes import ScriptedModel, TreeModel, tiny_model


class TestSampling(unittest.TestCase):
    def setUp(self):
        self.obs = parse_truth_table("0001")

    def test_greedy_candidates_identical(self):
        model = ScriptedModel(["and", "x_0", "x_1", "<eos>"])
        cands = sample_candidates(model, self.obs, k=5, temperature=0)
        self.assertEqual(len(cands), 5)
        self.assertEqual({c.formula for c in cands}, {And(Var(0), Var(1))})
        self.assertEqual(cands[0].fitting_accuracy, 1.0)
        self.assertEqual(cands.dropped, 0)

    def test_at_most_k(self):
        model = ScriptedModel(["or", "x_0", "x_1", "<eos>"])
        cands = sample_candidates(model, self.obs, k=10, temperature=1.0, rng=np.random.default_rng(0))
        self.assertLessEqual(len(cands), 10)
        self.assertAlmostEqual(cands[0].fitting_accuracy, 0.5)

    def test_all_invalid(self):
        model = ScriptedModel(["and", "x_0", "<eos>"])
        with self.assertRaises(NoCandidateError):
            sample_candidates(model, self.obs, k=3, temperature=0)

    def test_variable_outside_observations(self):
        model = ScriptedModel(["x_3", "<eos>"])
        with self.assertRaises(NoCandidateError):
            sample_candidates(model, self.obs, k=2, temperature=0)

    def test_bad_arguments(self):
        model = ScriptedModel(["x_0", "<eos>"])
        with self.assertRaises(ValueError):
            sample_candidates(model, self.obs, k=0)
        with self.assertRaises(ValueError):
            sample_candidates(model, self.obs, temperature=-1)

    def test_untrained_model_runs(self):
        model = tiny_model(d_max=2)
        try:
            cands = sample_candidates(model, self.obs, k=4, rng=np.random.default_rng(1))
        except NoCandidateError:
            return
        self.assertLessEqual(len(cands) + cands.dropped, 4)


class TestBeam(unittest.TestCase):
    def test_beam(self):
        obs = parse_truth_table("0111")
        model = ScriptedModel(["or", "x_0", "x_1", "<eos>"])
        cands = beam_candidates(model, obs, beam_size=3)
        self.assertLessEqual(len(cands), 3)
        self.assertIs(cands[0].formula, parse_text("or x_0 x_1"))
        lps = [c.log_prob for c in cands]
        self.assertEqual(lps, sorted(lps, reverse=True))

    def test_beam_size(self):
        with self.assertRaises(ValueError):
            beam_candidates(ScriptedModel(["x_0"]), parse_truth_table("01"), beam_size=0)

    def test_end_token_keeps_beam_open(self):
        # the likeliest first token ends an empty, invalid formula
        model = TreeModel({(): {"<eos>": 0.55, "x_0": 0.45}, ("x_0",): {"<eos>": 1.0}})
        cands = beam_candidates(model, parse_truth_table("01"), beam_size=1)
        self.assertEqual(len(cands), 1)
        self.assertIs(cands[0].formula, Var(0))
        self.assertAlmostEqual(cands[0].log_prob, math.log(0.45) / 2, places=6)

    def test_longer_formula_with_better_mean(self):
        tree = {
            (): {"<eos>": 0.4, "x_0": 0.35, "not": 0.25},
            ("x_0",): {"<eos>": 1.0},
            ("not",): {"x_0": 1.0},
            ("not", "x_0"): {"<eos>": 1.0},
        }
        model = TreeModel(tree)
        cands = beam_candidates(model, parse_truth_table("01"), beam_size=2)
        self.assertEqual([c.formula for c in cands], [Not(Var(0)), Var(0)])
        self.assertAlmostEqual(cands[0].log_prob, math.log(0.25) / 3, places=6)
        self.assertAlmostEqual(cands[1].log_prob, math.log(0.35) / 2, places=6)
        self.assertEqual({p for p in model.prefixes if len(p) == 1}, {("x_0",), ("not",)})


class TestRank(unittest.TestCase):
    def cand(self, text, acc):
        f = parse_text(text)
        return Candidate(f, acc, f.gates, f.ntokens)

    def test_accuracy_first(self):
        cands = [self.cand("x_0", 0.9), self.cand("x_1", 1.0), self.cand("x_2", 0.95)]
        self.assertEqual([c.fitting_accuracy for c in rank(cands)], [1.0, 0.95, 0.9])

    def test_gates_break_ties(self):
        big = self.cand("and x_0 and x_1 and x_2 and x_3 and x_4 x_5", 1.0)
        small = self.cand("and x_0 and x_1 and x_2 x_3", 1.0)
        self.assertEqual((big.gate_count, small.gate_count), (5, 3))
        self.assertEqual(rank([big, small])[0], small)

    def test_single(self):
        c = self.cand("x_0", 0.5)
        self.assertEqual(rank([c]), [c])

    def test_rescore(self):
        obs = parse_truth_table("0011")
        ranked = rank([self.cand("x_1", 1.0), self.cand("x_0", 0.0)], obs)
        self.assertIs(ranked[0].formula, Var(0))


class TestPredict(unittest.TestCase):
    def test_single_observation(self):
        obs = ObservationSet([[1, 0, 1]], [1])
        best = predict(ScriptedModel(["true", "<eos>"]), obs, k=2, temperature=0)
        self.assertIs(best.formula, TRUE)
        self.assertEqual(best.fitting_accuracy, 1.0)

    def test_predictor_modes(self):
        obs = parse_truth_table("0001")
        model = ScriptedModel(["and", "x_0", "x_1", "<eos>"])
        for mode in ("sample", "beam"):
            p = Predictor(model, k=3, temperature=0, mode=mode, beam_size=2)
            self.assertIs(p(obs).formula, And(Var(0), Var(1)))
        with self.assertRaises(ValueError):
            Predictor(model, mode="nucleus")


if __name__ == "__main__":
    unittest.main()
