# SPDX-License-Identifier: LGPL-2.1+
import unittest

import numpy as np

from boolreg.formula import Not, Or, Var, active_variables, binary_gate_count, token_length
from boolreg.generator import (
    GeneratorConfig,
    make_rng,
    reject_oversized,
    sample_formula,
    sample_raw_formula,
    sample_tree_shape,
)
from boolreg.helpers import ConfigError


def is_prefix_tree(shape):
    need = 1
    for s in shape:
        if need == 0:
            return False
        need += 1 if s else -1
    return need == 0


class TestTreeShape(unittest.TestCase):
    def test_small(self):
        rng = make_rng(0)
        self.assertEqual(sample_tree_shape(0, rng), [0])
        self.assertEqual(sample_tree_shape(1, rng), [1, 0, 0])

    def test_valid_prefix(self):
        rng = make_rng(1)
        for B in (2, 5, 17, 100):
            shape = sample_tree_shape(B, rng)
            self.assertEqual(len(shape), 2 * B + 1)
            self.assertEqual(sum(shape), B)
            self.assertTrue(is_prefix_tree(shape))

    def test_all_shapes_reachable(self):
        # 5 binary trees with 3 internal nodes
        rng = make_rng(2)
        seen = {tuple(sample_tree_shape(3, rng)) for _ in range(500)}
        self.assertEqual(len(seen), 5)

    def test_negative(self):
        with self.assertRaises(ValueError):
            sample_tree_shape(-1, make_rng(0))


class TestSampling(unittest.TestCase):
    def test_reject_oversized(self):
        wide = Or(*(Var(i) for i in range(101)))
        self.assertEqual(token_length(wide), 201)
        self.assertTrue(reject_oversized(wide))
        exact = Or(Not(Var(0)), *(Var(i) for i in range(1, 100)))
        self.assertEqual(token_length(exact), 200)
        self.assertFalse(reject_oversized(exact))

    def test_noiseless_uses_every_variable(self):
        cfg = GeneratorConfig.noiseless(d_max=6, b_max=20)
        for i in range(50):
            raw, meta = sample_raw_formula(cfg, make_rng(3, i))
            self.assertEqual(meta.S, meta.D)
            self.assertEqual(active_variables(raw), set(range(meta.D)))
            self.assertGreaterEqual(meta.B_initial, meta.D - 1)

    def test_noisy_active_bound(self):
        cfg = GeneratorConfig.noisy(d_max=30, b_max=20)
        for i in range(50):
            f, meta = sample_formula(cfg, make_rng(4, i))
            self.assertLessEqual(meta.S, 6)
            self.assertLessEqual(meta.D, 30)
            self.assertLessEqual(active_variables(f), set(meta.active_set))

    def test_max_gates(self):
        cfg = GeneratorConfig.noiseless(d_max=4, b_max=30, max_gates=3)
        for i in range(30):
            f, meta = sample_formula(cfg, make_rng(5, i))
            self.assertLessEqual(binary_gate_count(f), 3)
            self.assertEqual(meta.B_final, binary_gate_count(f))

    def test_fixed_inactive(self):
        cfg = GeneratorConfig.noisy(d_max=20, fixed_active=3, fixed_inactive=4)
        _, meta = sample_raw_formula(cfg, make_rng(6))
        self.assertEqual((meta.S, meta.D), (3, 7))

    def test_deterministic(self):
        cfg = GeneratorConfig.noiseless(d_max=5, b_max=40)
        a = [sample_formula(cfg, make_rng(9, i))[0] for i in range(20)]
        b = [sample_formula(cfg, make_rng(9, i))[0] for i in range(20)]
        self.assertEqual(a, b)

    def test_invalid_config(self):
        with self.assertRaises(ConfigError):
            GeneratorConfig.noiseless(d_max=11)
        with self.assertRaises(ConfigError):
            GeneratorConfig(regime="chaotic")
        with self.assertRaises(ConfigError):
            GeneratorConfig.noiseless(d_max=4, fixed_inactive=1)


def chi_square(counts):
    counts = np.asarray(counts, dtype=np.float64)
    expected = counts.sum() / len(counts)
    return float(((counts - expected) ** 2 / expected).sum())


# chi-square quantiles at 0.999 for 5 and 9 degrees of freedom
CHI2_999 = {5: 20.515, 9: 27.877}


class TestDistributions(unittest.TestCase):
    """Sampling frequencies on seeded draws, with reduced sample counts."""

    def draws(self, cfg, n, seed=7):
        rng = make_rng(seed)
        return [sample_raw_formula(cfg, rng)[1] for _ in range(n)]

    def test_dimension_uniform(self):
        metas = self.draws(GeneratorConfig.noiseless(d_max=10, b_max=12), 4000)
        counts = np.bincount([m.D for m in metas], minlength=11)[1:]
        self.assertTrue(all(counts > 0))
        self.assertLess(chi_square(counts), CHI2_999[9])
        self.assertTrue(all(m.S == m.D for m in metas))

    def test_active_uniform(self):
        metas = self.draws(GeneratorConfig.noisy(d_max=12, s_max=6, b_max=12), 4000)
        self.assertTrue(all(1 <= m.S <= min(6, m.D) for m in metas))
        # S is uniform in [1, s_max] whenever D does not cap it
        counts = np.bincount([m.S for m in metas if m.D >= 6], minlength=7)[1:]
        self.assertLess(chi_square(counts), CHI2_999[5])

    def test_and_or_balance(self):
        metas = self.draws(GeneratorConfig.noiseless(d_max=6, b_max=30), 3000)
        ands = sum(m.and_count for m in metas)
        ops = sum(m.and_count + m.or_count for m in metas)
        self.assertGreater(ops, 20000)
        self.assertAlmostEqual(ands / ops, 0.5, delta=0.01)

    def test_negation_rate(self):
        for p_not in (0.5, 0.2):
            metas = self.draws(GeneratorConfig.noiseless(d_max=6, b_max=30, p_not=p_not), 3000)
            nots = sum(m.not_count for m in metas)
            nodes = sum(m.node_count for m in metas)
            self.assertGreater(nodes, 40000)
            self.assertAlmostEqual(nots / nodes, p_not, delta=0.01)


if __name__ == "__main__":
    unittest.main()
