# SPDX-License-Identifier: LGPL-2.1+
import argparse
import os
import tempfile
import unittest

from boolreg.config import Config, ConfigError


class TestConfig(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, "boolreg.conf")

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, text):
        with open(self.path, "w") as f:
            f.write(text)

    def test_keys(self):
        keys = Config.keys()
        for k in ("regime", "d_max", "total_steps", "temperature", "beam_size"):
            self.assertIn(k, keys)
        grouped = [k for g in Config.groups.values() for k in g]
        self.assertEqual(sorted(grouped), sorted(keys))

    def test_set_converts(self):
        c = Config()
        c.set("d-max", "4")
        c.set("lr.max", "1e-3")
        c.set("regime", "noisy")
        self.assertEqual((c.d_max, c.lr_max, c.regime), (4, 1e-3, "noisy"))

    def test_set_errors(self):
        c = Config()
        with self.assertRaises(ConfigError):
            c.set("warp", "9")
        with self.assertRaises(ConfigError):
            c.set("seed", "many")

    def test_load(self):
        self.write("# desk run\nregime = noiseless\nd-max = 4   # small\n\nmax-gates = 15\n")
        c = Config(self.path)
        self.assertEqual((c.regime, c.d_max, c.max_gates), ("noiseless", 4, 15))

    def test_load_error_location(self):
        self.write("regime = noisy\nthis is not a setting\n")
        with self.assertRaisesRegex(ConfigError, r"boolreg.conf:2:"):
            Config(self.path)
        self.write("seed = 1\nbatch-size = lots\n")
        with self.assertRaisesRegex(ConfigError, r"boolreg.conf:2: batch_size"):
            Config(self.path)

    def test_dump_reloads(self):
        c = Config()
        c.set("seed", "7")
        c.set("temperature", "0.5")
        self.write("\n".join(c.dump()))
        self.assertEqual(Config(self.path).dump(), c.dump())

    def test_overrides(self):
        c = Config()
        c.overrides(argparse.Namespace(seed=3, d_max=None, out="x"))
        self.assertEqual((c.seed, c.d_max), (3, 0))
        c.overrides({"beam_size": 2})
        self.assertEqual(c.beam_size, 2)

    def test_generator_defaults(self):
        c = Config()
        self.assertEqual(c.generator_config().d_max, 10)
        c.set("regime", "noisy")
        g = c.generator_config()
        self.assertEqual((g.d_max, g.s_max, g.max_gates), (120, 6, None))
        c.set("max-gates", "5")
        self.assertEqual(c.generator_config().max_gates, 5)

    def test_model_overrides(self):
        c = Config()
        c.set("d-max", "4")
        c.set("emb-dim", "32")
        m = c.model_config()
        self.assertEqual((m.emb_dim, m.enc_layers, m.d_max), (32, 2, 4))

    def test_schedules(self):
        c = Config()
        s = c.make_schedule()
        self.assertEqual((s.total_steps, s.warmup_steps, s.constant_steps), (4000, 250, 3000))
        c.set("schedule", "paper")
        with self.assertRaises(ConfigError):
            c.make_schedule()
        c.set("total-steps", "100000")
        self.assertEqual(c.train_config().schedule.warmup_steps, 5000)
        c.set("schedule", "cosine")
        with self.assertRaises(ConfigError):
            c.train_config()

    def test_help(self):
        text = Config.help("inference")
        self.assertIn("beam-size", text)
        self.assertEqual(Config.help(), "")


if __name__ == "__main__":
    unittest.main()
