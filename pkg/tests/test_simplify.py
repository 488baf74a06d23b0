# SPDX-License-Identifier: LGPL-2.1+
import itertools
import unittest

import numpy as np

from boolreg.formula import FALSE, TRUE, And, Not, Or, Var, binary_gate_count, parse_text, truth_table
from boolreg.generator import GeneratorConfig, make_rng, sample_raw_formula
from boolreg.simplify import SimplifyError, normalize, simplify, simplify_pass

x0, x1, x2 = Var(0), Var(1), Var(2)


class TestSimplify(unittest.TestCase):
    def test_double_negation(self):
        self.assertIs(simplify(Not(Not(x1))), x1)

    def test_de_morgan(self):
        self.assertIs(normalize(Not(And(x0, x1))), Or(Not(x0), Not(x1)))
        self.assertIs(simplify(Not(Or(x0, x1))), And(Not(x0), Not(x1)))

    def test_idempotence(self):
        self.assertIs(simplify(And(x1, x1)), x1)

    def test_absorption(self):
        self.assertIs(simplify(Or(x1, And(x1, x2))), x1)
        self.assertIs(simplify(And(Or(x0, x1), Or(x0, x1, x2))), Or(x0, x1))

    def test_complement(self):
        self.assertIs(simplify(Or(x0, Not(x0), x2)), TRUE)
        self.assertIs(simplify(And(x0, x1, Not(x1))), FALSE)

    def test_constants(self):
        self.assertIs(simplify(And(x0, TRUE)), x0)
        self.assertIs(simplify(Or(x0, TRUE)), TRUE)
        self.assertIs(simplify(Not(FALSE)), TRUE)

    def test_combined(self):
        self.assertIs(simplify(And(Not(Not(x0)), Or(x1, x1))), And(x0, x1))

    def test_canonical_order(self):
        self.assertIs(simplify(And(x2, x0)), simplify(And(x0, x2)))

    def test_fixed_point(self):
        f = parse_text("or and x_0 not x_1 and not x_1 x_0")
        g = simplify(f)
        self.assertIs(simplify_pass(g), g)
        self.assertIs(simplify(g), g)

    def test_pass_limit(self):
        with self.assertRaises(SimplifyError):
            simplify(Not(Not(And(x0, x0))), max_passes=0)

    def test_preserves_semantics(self):
        cfg = GeneratorConfig.noiseless(d_max=4, b_max=30)
        for i in range(200):
            raw, meta = sample_raw_formula(cfg, make_rng(7, i))
            f = simplify(raw)
            self.assertTrue(np.array_equal(truth_table(raw, meta.D), truth_table(f, meta.D)), msg=str(raw))
            self.assertLessEqual(binary_gate_count(f), binary_gate_count(raw))

    def test_all_two_variable_gates(self):
        leaves = [x0, x1, Not(x0), Not(x1), TRUE, FALSE]
        for a, b in itertools.product(leaves, repeat=2):
            for f in (And(a, b), Or(a, b)):
                self.assertTrue(np.array_equal(truth_table(f, 2), truth_table(simplify(f), 2)))

    def test_idempotent_on_generated(self):
        cfg = GeneratorConfig.noisy(d_max=8, s_max=6, b_max=40)
        for i in range(200):
            raw, _ = sample_raw_formula(cfg, make_rng(11, i))
            f = simplify(raw)
            self.assertIs(simplify(f), f, msg=str(raw))

    def test_gate_count_skew(self):
        cfg = GeneratorConfig.noiseless(d_max=10, b_max=500)
        before, after = [], []
        for i in range(300):
            raw, _ = sample_raw_formula(cfg, make_rng(13, i))
            before.append(binary_gate_count(raw))
            after.append(binary_gate_count(simplify(raw)))
        self.assertTrue(all(a <= b for a, b in zip(after, before)))
        after = np.array(after)
        mode = int(np.bincount(after).argmax())
        self.assertLess(mode, np.median(after))
        self.assertLess(np.median(after), after.mean())


if __name__ == "__main__":
    unittest.main()
