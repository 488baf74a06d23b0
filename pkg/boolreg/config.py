# SPDX-License-Identifier: LGPL-2.1+
"""
Module providing the ``Config`` class, which holds the run configuration of
every boolreg command.

A configuration file has one ``key = value`` per line; ``#`` starts a
comment. Keys may be written with dashes or dots (``d-max``, ``lr.max``),
they are normalized to the attribute name (``d_max``, ``lr_max``). Values are
converted to the type of the default.

Command-line flags are applied on top of the file with ``overrides()``.
``dump()`` gives back the effective values, which every command prints (or
writes as the header of its output) so that a run can be repeated.
"""

from .data import NoiseConfig
from .generator import GeneratorConfig, NOISELESS_MAX_DIM, NOISY_MAX_ACTIVE, NOISY_MAX_DIM
from .helpers import ConfigError
from .model import ModelConfig
from .trainer import Schedule, TrainConfig

__all__ = ["Config", "ConfigError"]


class Config:
    __attr_doc_regime = '(string): "noiseless" (full truth tables) or "noisy" (random walk samples with flipped outputs)'
    __attr_doc_seed = "(int): Seed for every random choice of the command"
    __attr_doc_d_max = "(int): Maximum input dimension; 0 means 10 (noiseless) or 120 (noisy)"
    __attr_doc_s_max = "(int): Maximum number of active variables; 0 means d-max (noiseless) or 6 (noisy)"
    __attr_doc_b_max = "(int): Maximum number of binary operators before simplification"
    __attr_doc_p_not = "(float): Probability of negating each node of a generated tree"
    __attr_doc_max_gates = "(int): Reject generated formulas with more binary gates after simplification; 0 disables"
    __attr_doc_n_min = "(int): Minimum number of observations in the noisy regime"
    __attr_doc_n_max = "(int): Maximum number of observations in the noisy regime"
    __attr_doc_gamma_min = "(float): Minimum per-coordinate flip rate of the random walk"
    __attr_doc_gamma_max = "(float): Maximum per-coordinate flip rate of the random walk"
    __attr_doc_sigma_max = "(float): Maximum output flip probability"
    __attr_doc_preset = '(string): Model size preset, "desk" or "paper"'
    __attr_doc_enc_layers = "(int): Encoder layers; 0 keeps the preset value"
    __attr_doc_dec_layers = "(int): Decoder layers; 0 keeps the preset value"
    __attr_doc_heads = "(int): Attention heads; 0 keeps the preset value"
    __attr_doc_emb_dim = "(int): Embedding dimension; 0 keeps the preset value"
    __attr_doc_dropout = "(float): Dropout probability"
    __attr_doc_schedule = '(string): Learning-rate schedule, "desk" (segments scaled to total-steps) or "paper"'
    __attr_doc_batch_size = "(int): Examples per optimizer step"
    __attr_doc_total_steps = "(int): Number of optimizer steps"
    __attr_doc_warmup_steps = "(int): Linear warm-up steps; 0 derives it from the schedule"
    __attr_doc_constant_steps = "(int): Steps at the maximum learning rate; 0 derives it from the schedule"
    __attr_doc_lr_init = "(float): Learning rate at step 0"
    __attr_doc_lr_max = "(float): Learning rate after warm-up"
    __attr_doc_weight_decay = "(float): AdamW weight decay"
    __attr_doc_beta1 = "(float): AdamW beta1"
    __attr_doc_beta2 = "(float): AdamW beta2"
    __attr_doc_clip_norm = "(float): Gradient norm clipping threshold"
    __attr_doc_checkpoint_every = "(int): Steps between checkpoints"
    __attr_doc_log_every = "(int): Steps between progress messages"
    __attr_doc_num_workers = "(int): DataLoader worker processes"
    __attr_doc_device = '(string): Torch device, e.g. "cpu", "cuda" or "auto"'
    __attr_doc_candidates = "(int): Sampled candidates per prediction"
    __attr_doc_temperature = "(float): Sampling temperature; 0 decodes greedily"
    __attr_doc_beam_size = "(int): Beam width in beam mode"

    groups = {
        "generator": ("regime", "seed", "d_max", "s_max", "b_max", "p_not", "max_gates"),
        "noise": ("n_min", "n_max", "gamma_min", "gamma_max", "sigma_max"),
        "model": ("preset", "enc_layers", "dec_layers", "heads", "emb_dim", "dropout"),
        "train": (
            "schedule",
            "batch_size",
            "total_steps",
            "warmup_steps",
            "constant_steps",
            "lr_init",
            "lr_max",
            "weight_decay",
            "beta1",
            "beta2",
            "clip_norm",
            "checkpoint_every",
            "log_every",
            "num_workers",
            "device",
        ),
        "inference": ("candidates", "temperature", "beam_size"),
    }

    def __init__(self, path=None):
        self._set_defaults()
        if path:
            self.load(path)

    def _set_defaults(self):
        self.regime = "noiseless"
        self.seed = 0
        self.d_max = 0
        self.s_max = 0
        self.b_max = 500
        self.p_not = 0.5
        self.max_gates = 0
        self.n_min = 30
        self.n_max = 300
        self.gamma_min = 0.05
        self.gamma_max = 0.25
        self.sigma_max = 0.1
        self.preset = "desk"
        self.enc_layers = 0
        self.dec_layers = 0
        self.heads = 0
        self.emb_dim = 0
        self.dropout = 0.0
        self.schedule = "desk"
        self.batch_size = 128
        self.total_steps = 4000
        self.warmup_steps = 0
        self.constant_steps = 0
        self.lr_init = 1e-7
        self.lr_max = 2e-4
        self.weight_decay = 0.01
        self.beta1 = 0.9
        self.beta2 = 0.98
        self.clip_norm = 1.0
        self.checkpoint_every = 1000
        self.log_every = 100
        self.num_workers = 0
        self.device = "auto"
        self.candidates = 10
        self.temperature = 1.0
        self.beam_size = 8

    @classmethod
    def keys(cls):
        attr_prefix = "_Config__attr_doc_"
        return [k[len(attr_prefix) :] for k in cls.__dict__.keys() if k.startswith(attr_prefix)]

    @staticmethod
    def _normalize_key(key):
        return key.strip().translate(str.maketrans("-.", "__"))

    def _value_to_bool(self, value):
        return value is None or value.lower() in ["yes", "on", "true", "1"]

    def set(self, key, value):
        key = self._normalize_key(key)
        if key not in self.keys():
            raise ConfigError(f"unknown configuration key {key!r}")

        default = getattr(self, key)
        if isinstance(value, str):
            try:
                if isinstance(default, bool):
                    value = self._value_to_bool(value)
                elif isinstance(default, int):
                    value = int(value)
                elif isinstance(default, float):
                    value = float(value)
            except ValueError:
                raise ConfigError(f"{key}: expected {type(default).__name__}, got {value!r}") from None
        setattr(self, key, value)

    def load(self, path):
        with open(path) as f:
            for lineno, line in enumerate(f, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                key, sep, value = line.partition("=")
                if not sep or not key.strip():
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
                try:
                    self.set(key, value.strip())
                except ConfigError as e:
                    raise ConfigError(f"{path}:{lineno}: {e}") from None

    def overrides(self, args):
        """Apply every attribute of ``args`` (a Namespace or dict) that names a key and is not None."""
        values = args if isinstance(args, dict) else vars(args)
        for key in self.keys():
            if values.get(key) is not None:
                self.set(key, values[key])
        return self

    def dump(self):
        return [f"{k.replace('_', '-')} = {getattr(self, k)}" for k in self.keys()]

    def _d_max(self):
        if self.d_max:
            return self.d_max
        return NOISELESS_MAX_DIM if self.regime == "noiseless" else NOISY_MAX_DIM

    def generator_config(self, **kw):
        common = dict(b_max=self.b_max, p_not=self.p_not, max_gates=self.max_gates or None, **kw)
        d_max = self._d_max()
        if self.regime == "noiseless":
            return GeneratorConfig.noiseless(d_max=d_max, **common)
        if self.regime == "noisy":
            return GeneratorConfig.noisy(d_max=d_max, s_max=self.s_max or min(NOISY_MAX_ACTIVE, d_max), **common)
        raise ConfigError(f"unknown regime {self.regime!r}")

    def noise_config(self):
        return NoiseConfig(self.n_min, self.n_max, self.gamma_min, self.gamma_max, self.sigma_max)

    def model_config(self):
        cfg = ModelConfig.preset(self.preset, d_max=self._d_max(), regime=self.regime, dropout=self.dropout)
        sizes = {k: getattr(self, k) for k in ("enc_layers", "dec_layers", "heads", "emb_dim") if getattr(self, k)}
        return ModelConfig(**{**cfg.to_dict(), **sizes}) if sizes else cfg

    def make_schedule(self):
        kw = dict(lr_init=self.lr_init, lr_max=self.lr_max)
        if self.schedule == "paper":
            return Schedule.paper(self.total_steps, **kw)
        if self.schedule == "desk":
            return Schedule.desk(self.total_steps, self.warmup_steps or None, self.constant_steps or None, **kw)
        raise ConfigError(f"unknown schedule {self.schedule!r}, expected desk or paper")

    def train_config(self):
        return TrainConfig(
            self.make_schedule(),
            batch_size=self.batch_size,
            weight_decay=self.weight_decay,
            beta1=self.beta1,
            beta2=self.beta2,
            clip_norm=self.clip_norm,
            checkpoint_every=self.checkpoint_every,
            log_every=self.log_every,
            num_workers=self.num_workers,
            seed=self.seed,
            device=self.device,
        )

    @classmethod
    def help(cls, *groups):
        attr_prefix = "_Config__attr_doc_"
        names = [k for g in groups for k in cls.groups[g]]
        if not names:
            return ""

        ret = ["", "", "configuration:"]
        for name in names:
            ret.append(f"  {name.replace('_', '-')} {getattr(cls, attr_prefix + name)}")

        return "\n".join(ret)
