# SPDX-License-Identifier: LGPL-2.1+
import os
import shutil
import tempfile
import unittest

import pandas as pd
import torch

from boolreg.data import NoiseConfig, generate_examples
from boolreg.generator import GeneratorConfig
from boolreg.helpers import ConfigError
from boolreg.trainer import (
    GeneratedDataset,
    ReplayDataset,
    Schedule,
    StepBatchSampler,
    TrainConfig,
    Trainer,
    TrainingError,
    lr_schedule,
    train,
)

from fakes import tiny_model


class TestSchedule(unittest.TestCase):
    def test_paper_schedule(self):
        total = 100000
        self.assertAlmostEqual(lr_schedule(0, total), 1e-7)
        self.assertAlmostEqual(lr_schedule(5000, total), 2e-4)
        self.assertAlmostEqual(lr_schedule(65000, total), 2e-4)
        self.assertAlmostEqual(lr_schedule(82500, total), 1e-4)
        self.assertEqual(lr_schedule(total, total), 0.0)

    def test_paper_needs_cooldown(self):
        with self.assertRaises(ConfigError):
            Schedule.paper(65000)
        with self.assertRaises(ConfigError):
            lr_schedule(0, 60000)

    def test_desk_proportions(self):
        s = Schedule.desk(800)
        self.assertEqual((s.warmup_steps, s.constant_steps), (50, 600))
        self.assertAlmostEqual(s(0), 1e-7)
        self.assertAlmostEqual(s(50), 2e-4)
        self.assertAlmostEqual(s(725), 1e-4)

    def test_monotonic_segments(self):
        s = Schedule.desk(160)
        lrs = [s(i) for i in range(161)]
        self.assertTrue(all(a <= b for a, b in zip(lrs[:10], lrs[1:11])))
        self.assertTrue(all(a >= b for a, b in zip(lrs[130:], lrs[131:])))


class TestSampler(unittest.TestCase):
    def test_streaming(self):
        self.assertEqual(list(StepBatchSampler(100, 4, 2, 4)), [[8, 9, 10, 11], [12, 13, 14, 15]])

    def test_cycle_is_permutation(self):
        flat = [i for b in StepBatchSampler(5, 2, 0, 5, seed=1, cycle=True) for i in b]
        self.assertEqual(sorted(flat[:5]), list(range(5)))
        self.assertEqual(sorted(flat[5:10]), list(range(5)))

    def test_resume_matches(self):
        full = list(StepBatchSampler(7, 3, 0, 10, seed=2, cycle=True))
        tail = list(StepBatchSampler(7, 3, 4, 10, seed=2, cycle=True))
        self.assertEqual(full[4:], tail)


class TestTrainer(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        cfg = GeneratorConfig.noiseless(d_max=3, b_max=6)
        self.examples = list(generate_examples(cfg, NoiseConfig(), seed=0, count=8))

    def tearDown(self):
        self.tmp.cleanup()

    def config(self, total, **kw):
        return TrainConfig(Schedule.desk(total, lr_max=1e-3), batch_size=8, device="cpu", **kw)

    def test_datasets(self):
        model = tiny_model(d_max=3)
        replay = ReplayDataset(self.examples, model.vocab)
        rows, target = replay[0]
        self.assertEqual(rows.shape[1], 4)
        self.assertEqual(target[0], model.vocab.bos_id)
        generated = GeneratedDataset(GeneratorConfig.noiseless(d_max=3, b_max=6), NoiseConfig(), model.vocab, 0, 8)
        self.assertEqual(len(generated), 8)
        self.assertEqual(generated[3][1], replay[3][1])

    def test_loss_decreases(self):
        model = tiny_model(d_max=3)
        out = os.path.join(self.tmp.name, "run")
        saved = train(model, ReplayDataset(self.examples, model.vocab), self.config(60, checkpoint_every=20, log_every=10), out, cycle=True)
        self.assertEqual([p.name for p in saved], ["ckpt-20.pt", "ckpt-40.pt", "ckpt-60.pt"])
        df = pd.read_csv(os.path.join(out, "loss.csv"))
        self.assertEqual(list(df.step), list(range(60)))
        self.assertLess(df.loss.iloc[-5:].mean(), df.loss.iloc[:5].mean())

    def test_resume_is_exact(self):
        a_dir = os.path.join(self.tmp.name, "a")
        b_dir = os.path.join(self.tmp.name, "b")
        cfg = self.config(40, checkpoint_every=20)

        a = tiny_model(d_max=3, seed=1)
        train(a, ReplayDataset(self.examples, a.vocab), cfg, a_dir, cycle=True)

        os.makedirs(b_dir)
        shutil.copy(os.path.join(a_dir, "ckpt-20.pt"), b_dir)
        b = tiny_model(d_max=3, seed=2)
        trainer = Trainer(b, cfg, b_dir)
        self.assertTrue(trainer.resume())
        self.assertEqual(trainer.step, 20)
        trainer.fit(ReplayDataset(self.examples, b.vocab), cycle=True)

        for (k, pa), (_, pb) in zip(a.state_dict().items(), b.state_dict().items()):
            self.assertTrue(torch.allclose(pa, pb, atol=1e-6), msg=k)

    def test_nonfinite_loss(self):
        model = tiny_model(d_max=3)
        with torch.no_grad():
            model.out.bias.fill_(float("nan"))
        trainer = Trainer(model, self.config(20), self.tmp.name)
        with self.assertRaises(TrainingError) as cm:
            trainer.fit(ReplayDataset(self.examples, model.vocab), cycle=True)
        self.assertTrue(os.path.exists(cm.exception.snapshot))

    def test_replay_needs_targets(self):
        ex = self.examples[0]
        ex.target = None
        with self.assertRaises(ConfigError):
            ReplayDataset([ex], tiny_model(d_max=3).vocab)

    @unittest.skipUnless(os.environ.get("BOOLREG_SLOW_TESTS"), "set BOOLREG_SLOW_TESTS=1 to run")
    def test_overfit(self):
        cfg = GeneratorConfig.noiseless(d_max=4, b_max=10)
        examples = list(generate_examples(cfg, NoiseConfig(), seed=5, count=32))
        model = tiny_model(d_max=4)
        config = TrainConfig(Schedule.desk(2000, lr_max=1e-3), batch_size=32, device="cpu", checkpoint_every=2000)
        train(model, ReplayDataset(examples, model.vocab), config, self.tmp.name, cycle=True)
        df = pd.read_csv(os.path.join(self.tmp.name, "loss.csv"))
        self.assertLess(df.loss.iloc[-20:].mean(), 0.05)


if __name__ == "__main__":
    unittest.main()
