# SPDX-License-Identifier: LGPL-2.1+
"""
Training loop.

Batches come from a map-style dataset where example ``i`` is a pure function
of ``(seed, i)``: ``GeneratedDataset`` draws fresh examples on the fly,
``ReplayDataset`` serves examples read from a JSONL file. Step ``s`` always
consumes the same indices, so a run resumed from a checkpoint sees exactly
the batches it would have seen without the interruption.

The learning rate warms up linearly from ``lr_init`` to ``lr_max``, stays
constant, then decays linearly to 0 at ``total_steps``.
"""
import dataclasses
import logging
import math
import pathlib
import time

import numpy as np
import pandas as pd
import torch
import torch.utils.data

from .data import make_example
from .encoding import encode_observations, encode_target
from .generator import make_rng
from .helpers import ConfigError, atomic_write
from .model import collate, latest_checkpoint, load_checkpoint, save_checkpoint

PAPER_WARMUP = 5000
PAPER_CONSTANT = 60000
LR_INIT = 1e-7
LR_MAX = 2e-4
# desk-scale runs split total_steps as warmup:constant:cooldown = 5:60:15
DESK_RATIO = (5, 60, 15)

_logger = logging.getLogger(__name__)


class TrainingError(Exception):
    def __init__(self, msg, snapshot=None):
        if snapshot is not None:
            msg = f"{msg} (snapshot saved to {snapshot})"
        super().__init__(msg)
        self.snapshot = snapshot


@dataclasses.dataclass(frozen=True)
class Schedule:
    total_steps: int
    warmup_steps: int = PAPER_WARMUP
    constant_steps: int = PAPER_CONSTANT
    lr_init: float = LR_INIT
    lr_max: float = LR_MAX

    def __post_init__(self):
        if self.warmup_steps < 1 or self.constant_steps < 0:
            raise ConfigError(f"invalid warmup/constant steps {self.warmup_steps}/{self.constant_steps}")
        if self.total_steps <= self.warmup_steps + self.constant_steps:
            raise ConfigError(
                f"total_steps={self.total_steps} must exceed warmup + constant steps ({self.warmup_steps + self.constant_steps})"
            )
        if not 0.0 <= self.lr_init <= self.lr_max:
            raise ConfigError(f"need 0 <= lr_init <= lr_max, got {self.lr_init}, {self.lr_max}")

    @classmethod
    def paper(cls, total_steps, **kw):
        return cls(total_steps, PAPER_WARMUP, PAPER_CONSTANT, **kw)

    @classmethod
    def desk(cls, total_steps, warmup_steps=None, constant_steps=None, **kw):
        """Segments scaled to ``total_steps``; either length can be overridden."""
        parts = sum(DESK_RATIO)
        if warmup_steps is None:
            warmup_steps = max(1, total_steps * DESK_RATIO[0] // parts)
        if constant_steps is None:
            constant_steps = total_steps * DESK_RATIO[1] // parts
        return cls(total_steps, warmup_steps, constant_steps, **kw)

    def __call__(self, step):
        return lr_schedule(step, self.total_steps, self.warmup_steps, self.constant_steps, self.lr_init, self.lr_max)


def lr_schedule(step, total_steps, warmup_steps=PAPER_WARMUP, constant_steps=PAPER_CONSTANT, lr_init=LR_INIT, lr_max=LR_MAX):
    if step < 0:
        raise ValueError(f"step must be >= 0, got {step}")
    end_constant = warmup_steps + constant_steps
    if total_steps <= end_constant:
        raise ConfigError(f"total_steps={total_steps} must exceed {end_constant}")
    if step < warmup_steps:
        return lr_init + (lr_max - lr_init) * (step / warmup_steps)
    if step <= end_constant:
        return lr_max
    if step >= total_steps:
        return 0.0
    return lr_max * ((total_steps - step) / (total_steps - end_constant))


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    schedule: Schedule
    batch_size: int = 128
    weight_decay: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.98
    clip_norm: float = 1.0
    checkpoint_every: int = 1000
    log_every: int = 100
    num_workers: int = 0
    seed: int = 0
    device: str = "cpu"

    @property
    def total_steps(self):
        return self.schedule.total_steps


class GeneratedDataset(torch.utils.data.Dataset):
    """Fresh examples: item ``i`` is drawn from ``make_rng(seed, i)``."""

    def __init__(self, gen_config, noise_config, vocab, seed, size):
        self.gen_config = gen_config
        self.noise_config = noise_config
        self.vocab = vocab
        self.seed = seed
        self.size = size

    def __len__(self):
        return self.size

    def __getitem__(self, i):
        ex = make_example(self.gen_config, self.noise_config, make_rng(self.seed, i))
        return encode_observations(ex.observations, self.vocab, ex.regime), encode_target(ex.target, self.vocab)


class ReplayDataset(torch.utils.data.Dataset):
    def __init__(self, examples, vocab):
        if any(ex.target is None for ex in examples):
            raise ConfigError("training examples need targets")
        self.examples = examples
        self.vocab = vocab

    def __len__(self):
        return len(self.examples)

    def __getitem__(self, i):
        ex = self.examples[i]
        return encode_observations(ex.observations, self.vocab, ex.regime), encode_target(ex.target, self.vocab)


class StepBatchSampler(torch.utils.data.Sampler):
    """
    Index batches for steps ``start_step .. total_steps - 1``. Step ``s``
    takes positions ``s * batch_size`` onwards; for a finite dataset the
    positions wrap around through one seeded permutation per pass.
    """

    def __init__(self, dataset_size, batch_size, start_step, total_steps, seed=0, cycle=False):
        self.dataset_size = dataset_size
        self.batch_size = batch_size
        self.start_step = start_step
        self.total_steps = total_steps
        self.seed = seed
        self.cycle = cycle

    def __len__(self):
        return max(0, self.total_steps - self.start_step)

    def _order(self, epoch):
        return make_rng(self.seed, epoch).permutation(self.dataset_size)

    def __iter__(self):
        cached = (None, None)
        for step in range(self.start_step, self.total_steps):
            pos = np.arange(step * self.batch_size, (step + 1) * self.batch_size)
            if not self.cycle:
                yield [int(p) for p in pos]
                continue
            batch = []
            for p in pos:
                epoch, off = divmod(int(p), self.dataset_size)
                if cached[0] != epoch:
                    cached = (epoch, self._order(epoch))
                batch.append(int(cached[1][off]))
            yield batch


class Collator:
    def __init__(self, vocab):
        self.vocab = vocab

    def __call__(self, items):
        encoded, targets = zip(*items)
        return collate(list(encoded), list(targets), self.vocab)


def resolve_device(name):
    if name == "auto":
        return "cuda" if torch.cuda.is_available() else "cpu"
    return name


class Trainer:
    """
    Owns the model parameters, the AdamW optimizer and the output directory
    (``ckpt-<step>.pt`` files and ``loss.csv``).
    """

    def __init__(self, model, config, out_dir):
        self.config = config
        self.device = resolve_device(config.device)
        self.model = model.to(self.device)
        self.out_dir = pathlib.Path(out_dir)
        self.step = 0
        self.records = []
        self.optimizer = torch.optim.AdamW(
            self.model.parameters(),
            lr=config.schedule(0),
            betas=(config.beta1, config.beta2),
            weight_decay=config.weight_decay,
        )

    @property
    def loss_path(self):
        return self.out_dir / "loss.csv"

    def checkpoint_path(self, step):
        return self.out_dir / f"ckpt-{step}.pt"

    def _state(self):
        return {
            "step": self.step,
            "optimizer": self.optimizer.state_dict(),
            "torch_rng": torch.get_rng_state(),
            "train": {k: v for k, v in dataclasses.asdict(self.config).items() if k != "schedule"},
            "schedule": dataclasses.asdict(self.config.schedule),
        }

    def save(self):
        path = self.checkpoint_path(self.step)
        save_checkpoint(path, self.model, self._state())
        with atomic_write(self.loss_path, "w") as f:
            pd.DataFrame(self.records, columns=["step", "lr", "loss"]).to_csv(f, index=False)
        return path

    def resume(self, path=None):
        """Restore parameters, optimizer and step from ``path`` (default: newest checkpoint). False if none."""
        path = path or latest_checkpoint(self.out_dir)
        if path is None:
            return False
        model, extra = load_checkpoint(path, self.device)
        self.model.load_state_dict(model.state_dict())
        self.optimizer.load_state_dict(extra["optimizer"])
        torch.set_rng_state(extra["torch_rng"])
        self.step = extra["step"]
        if self.loss_path.exists():
            df = pd.read_csv(self.loss_path)
            self.records = df[df.step < self.step].to_dict("records")
        _logger.info(f"resumed from {path} at step {self.step}")
        return True

    def loader(self, dataset, cycle):
        sampler = StepBatchSampler(
            len(dataset), self.config.batch_size, self.step, self.config.total_steps, self.config.seed, cycle=cycle
        )
        return torch.utils.data.DataLoader(
            dataset,
            batch_sampler=sampler,
            collate_fn=Collator(self.model.vocab),
            num_workers=self.config.num_workers,
            prefetch_factor=4 if self.config.num_workers else None,
        )

    def train_step(self, batch):
        """One optimizer step; returns the loss."""
        lr = self.config.schedule(self.step)
        for group in self.optimizer.param_groups:
            group["lr"] = lr

        self.model.train()
        batch = batch.to(self.device)
        loss = self.model.loss(batch)
        value = loss.item()
        if not math.isfinite(value):
            snapshot = self.out_dir / f"nonfinite-{self.step}.pt"
            save_checkpoint(snapshot, self.model, {**self._state(), "batch": batch.to("cpu").__dict__})
            raise TrainingError(f"non-finite loss {value} at step {self.step}", snapshot)

        self.optimizer.zero_grad(set_to_none=True)
        loss.backward()
        torch.nn.utils.clip_grad_norm_(self.model.parameters(), self.config.clip_norm)
        self.optimizer.step()

        self.records.append({"step": self.step, "lr": lr, "loss": value})
        self.step += 1
        return value

    def fit(self, dataset, cycle=False):
        """Train until ``total_steps``; returns the list of checkpoints written."""
        self.out_dir.mkdir(parents=True, exist_ok=True)
        saved = []
        first = self.step
        start = time.monotonic()
        for batch in self.loader(dataset, cycle):
            loss = self.train_step(batch)
            if self.step % self.config.log_every == 0:
                rate = (self.step - first) / max(time.monotonic() - start, 1e-9)
                _logger.info(f"step {self.step}/{self.config.total_steps} loss {loss:.4f} lr {self.records[-1]['lr']:.3g} ({rate:.1f} steps/s)")
            if self.step % self.config.checkpoint_every == 0 or self.step == self.config.total_steps:
                saved.append(self.save())
        return saved


def train(model, dataset, config, out_dir, resume=True, cycle=False):
    """
    Train ``model`` on ``dataset`` writing checkpoints and ``loss.csv`` into
    ``out_dir``. With ``resume`` an existing checkpoint in ``out_dir`` is
    continued.
    """
    trainer = Trainer(model, config, out_dir)
    if resume:
        trainer.resume()
    return trainer.fit(dataset, cycle)
