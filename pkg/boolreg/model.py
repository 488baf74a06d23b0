# SPDX-License-Identifier: LGPL-2.1+
"""
Sequence model from observation sets to formulas.

The encoder reads a *set* of rows: every row of ``d_max + 1`` tokens is
embedded token by token, the embeddings are concatenated and projected down
to ``emb_dim`` (``compressed_embed()``). The encoder stack has no positional
information, so permuting the rows permutes its output the same way and the
decoder, which only sees the rows through cross-attention, does not notice.

The decoder is a causal Transformer with learned absolute positions that
emits the prefix form of the formula.

This module also owns the checkpoint file: one ``torch.save()`` payload with
a version number, the ``ModelConfig``, the vocabulary and the parameters.
"""
import dataclasses
import logging
import pathlib

import torch
import torch.nn as nn
import torch.nn.functional as F

from .encoding import MAX_TARGET_LEN, Vocabulary
from .helpers import ConfigError, atomic_write

CHECKPOINT_VERSION = 1

PRESETS = {
    # enc_layers, dec_layers, heads, emb_dim
    "paper": (8, 8, 16, 512),
    "desk": (2, 2, 4, 128),
}

_logger = logging.getLogger(__name__)


class ModelError(Exception):
    pass


class CheckpointError(ModelError):
    pass


class LengthError(ModelError):
    pass


@dataclasses.dataclass(frozen=True)
class ModelConfig:
    enc_layers: int = 2
    dec_layers: int = 2
    heads: int = 4
    emb_dim: int = 128
    d_max: int = 10
    regime: str = "noiseless"
    max_target_len: int = MAX_TARGET_LEN
    dropout: float = 0.0

    def __post_init__(self):
        if self.emb_dim % self.heads:
            raise ConfigError(f"emb_dim={self.emb_dim} is not divisible by heads={self.heads}")
        if self.enc_layers < 1 or self.dec_layers < 1:
            raise ConfigError("the model needs at least one encoder and one decoder layer")
        if self.max_target_len != MAX_TARGET_LEN:
            raise ConfigError(f"max_target_len is fixed at {MAX_TARGET_LEN}")

    @classmethod
    def preset(cls, name, **kw):
        try:
            enc, dec, heads, emb = PRESETS[name]
        except KeyError:
            raise ConfigError(f"unknown model preset {name!r}, expected one of {', '.join(PRESETS)}") from None
        return cls(enc_layers=enc, dec_layers=dec, heads=heads, emb_dim=emb, **kw)

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclasses.dataclass
class Batch:
    """
    ``rows``: B x N x (d_max + 1) encoder ids; ``row_pad``: B x N, True on
    rows added to fill the batch; ``targets``: B x T decoder ids
    (``<bos>`` ... ``<eos>``, then ``<pad>``).
    """

    rows: torch.Tensor
    row_pad: torch.Tensor
    targets: torch.Tensor = None

    def to(self, device):
        return Batch(
            self.rows.to(device),
            self.row_pad.to(device),
            None if self.targets is None else self.targets.to(device),
        )


def collate(encoded, targets, vocab):
    """``Batch`` from a list of encoder id matrices and a list of target id lists (or None)."""
    n = max(len(e) for e in encoded)
    width = vocab.d_max + 1
    rows = torch.full((len(encoded), n, width), vocab.enc_pad_id, dtype=torch.long)
    row_pad = torch.ones((len(encoded), n), dtype=torch.bool)
    for b, e in enumerate(encoded):
        rows[b, : len(e)] = torch.as_tensor(e, dtype=torch.long)
        row_pad[b, : len(e)] = False

    tgt = None
    if targets is not None:
        t = max(len(s) for s in targets)
        tgt = torch.full((len(targets), t), vocab.pad_id, dtype=torch.long)
        for b, s in enumerate(targets):
            tgt[b, : len(s)] = torch.as_tensor(s, dtype=torch.long)
    return Batch(rows, row_pad, tgt)


class FeedForward(nn.Sequential):
    def __init__(self, dim, dropout):
        super().__init__(
            nn.Linear(dim, 4 * dim),
            nn.GELU(),
            nn.Dropout(dropout),
            nn.Linear(4 * dim, dim),
        )


class EncoderBlock(nn.Module):
    def __init__(self, dim, heads, dropout):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = nn.MultiheadAttention(dim, heads, dropout=dropout, batch_first=True)
        self.norm2 = nn.LayerNorm(dim)
        self.ffn = FeedForward(dim, dropout)
        self.drop = nn.Dropout(dropout)

    def forward(self, x, pad_mask=None, need_weights=False):
        h = self.norm1(x)
        a, w = self.attn(h, h, h, key_padding_mask=pad_mask, need_weights=need_weights, average_attn_weights=False)
        x = x + self.drop(a)
        x = x + self.drop(self.ffn(self.norm2(x)))
        return x, w


class DecoderBlock(nn.Module):
    def __init__(self, dim, heads, dropout):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.self_attn = nn.MultiheadAttention(dim, heads, dropout=dropout, batch_first=True)
        self.norm2 = nn.LayerNorm(dim)
        self.cross_attn = nn.MultiheadAttention(dim, heads, dropout=dropout, batch_first=True)
        self.norm3 = nn.LayerNorm(dim)
        self.ffn = FeedForward(dim, dropout)
        self.drop = nn.Dropout(dropout)

    def forward(self, y, context, causal_mask, context_pad=None):
        h = self.norm1(y)
        a, _ = self.self_attn(h, h, h, attn_mask=causal_mask, need_weights=False)
        y = y + self.drop(a)
        h = self.norm2(y)
        a, _ = self.cross_attn(h, context, context, key_padding_mask=context_pad, need_weights=False)
        y = y + self.drop(a)
        y = y + self.drop(self.ffn(self.norm3(y)))
        return y


class FormulaModel(nn.Module):
    def __init__(self, config, vocab):
        super().__init__()
        if vocab.d_max != config.d_max:
            raise ConfigError(f"vocabulary d_max={vocab.d_max} does not match model d_max={config.d_max}")
        self.config = config
        self.vocab = vocab
        dim = config.emb_dim
        width = config.d_max + 1

        self.row_embed = nn.Embedding(vocab.encoder_size, dim)
        self.row_proj = nn.Linear(width * dim, dim)
        self.encoder = nn.ModuleList(EncoderBlock(dim, config.heads, config.dropout) for _ in range(config.enc_layers))
        self.enc_norm = nn.LayerNorm(dim)

        self.tok_embed = nn.Embedding(len(vocab), dim)
        # <bos> plus up to max_target_len formula tokens plus <eos>
        self.pos_embed = nn.Embedding(config.max_target_len + 2, dim)
        self.decoder = nn.ModuleList(DecoderBlock(dim, config.heads, config.dropout) for _ in range(config.dec_layers))
        self.dec_norm = nn.LayerNorm(dim)
        self.out = nn.Linear(dim, len(vocab))

    @property
    def device(self):
        return self.out.weight.device

    def compressed_embed(self, rows):
        """``... x N x (d_max + 1)`` token ids to ``... x N x emb_dim``."""
        e = self.row_embed(rows)
        return self.row_proj(e.flatten(-2))

    def encode(self, x, pad_mask=None, need_weights=False):
        """
        Run the encoder stack on embedded rows ``x`` (B x N x emb_dim). With
        ``need_weights`` the per-layer attention weights (B x heads x N x N)
        are returned as well.
        """
        weights = []
        for block in self.encoder:
            x, w = block(x, pad_mask, need_weights)
            weights.append(w)
        x = self.enc_norm(x)
        return (x, weights) if need_weights else x

    def decode(self, context, prefix, context_pad=None):
        """Logits (B x T x vocab) for every position of ``prefix`` (B x T, starting with ``<bos>``)."""
        T = prefix.shape[1]
        if T - 1 > self.config.max_target_len:
            raise LengthError(f"prefix holds {T - 1} formula tokens, limit is {self.config.max_target_len}")
        pos = torch.arange(T, device=prefix.device)
        y = self.tok_embed(prefix) + self.pos_embed(pos)
        causal = torch.triu(torch.ones(T, T, dtype=torch.bool, device=prefix.device), diagonal=1)
        for block in self.decoder:
            y = block(y, context, causal, context_pad)
        return self.out(self.dec_norm(y))

    def decode_step(self, context, prefix, context_pad=None):
        """Next-token logits (B x vocab) after ``prefix``."""
        return self.decode(context, prefix, context_pad)[:, -1]

    def context_of(self, rows, row_pad=None):
        return self.encode(self.compressed_embed(rows), row_pad)

    def forward(self, batch):
        context = self.context_of(batch.rows, batch.row_pad)
        return self.decode(context, batch.targets[:, :-1], batch.row_pad)

    def loss(self, batch):
        """Mean token cross-entropy over the shifted target, ``<pad>`` positions excluded."""
        logits = self(batch)
        gold = batch.targets[:, 1:]
        return F.cross_entropy(logits.reshape(-1, logits.shape[-1]), gold.reshape(-1), ignore_index=self.vocab.pad_id)

    @torch.no_grad()
    def dump_attention(self, rows):
        """
        Encoder self-attention maps of one example (``rows``: N x (d_max + 1)
        ids) as a list over layers of ``heads x N x N`` tensors.
        """
        x = self.compressed_embed(torch.as_tensor(rows, dtype=torch.long, device=self.device).unsqueeze(0))
        _, weights = self.encode(x, need_weights=True)
        return [w[0].cpu() for w in weights]

    def parameter_count(self):
        return sum(p.numel() for p in self.parameters())


def save_checkpoint(path, model, extra=None):
    """
    Write ``model`` and ``extra`` (training state: step, optimizer, ...) to
    ``path`` in one file, replacing any previous file atomically.
    """
    payload = {
        "version": CHECKPOINT_VERSION,
        "config": model.config.to_dict(),
        "vocab": model.vocab.to_dict(),
        "state_dict": model.state_dict(),
        "extra": extra or {},
    }
    with atomic_write(path, "wb") as f:
        torch.save(payload, f)
    _logger.debug(f"saved checkpoint {path}")


def load_checkpoint(path, device="cpu"):
    """``(model, extra)`` from a checkpoint file. The model is in eval mode."""
    path = pathlib.Path(path)
    try:
        payload = torch.load(path, map_location=device, weights_only=False)
    except FileNotFoundError:
        raise CheckpointError(f"no checkpoint at {path}") from None
    except Exception as e:
        raise CheckpointError(f"could not read checkpoint {path}: {e}") from None

    if not isinstance(payload, dict) or "version" not in payload:
        raise CheckpointError(f"{path} is not a checkpoint file")
    if payload["version"] != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path} has checkpoint version {payload['version']}, expected {CHECKPOINT_VERSION}")

    try:
        config = ModelConfig(**payload["config"])
        vocab = Vocabulary.from_dict(payload["vocab"])
        model = FormulaModel(config, vocab)
        model.load_state_dict(payload["state_dict"])
    except (KeyError, TypeError, RuntimeError, ConfigError) as e:
        raise CheckpointError(f"incompatible checkpoint {path}: {e}") from None

    model.to(device)
    model.eval()
    return model, payload.get("extra", {})


def latest_checkpoint(directory):
    """Newest ``ckpt-<step>.pt`` in ``directory``, or None."""
    ckpts = sorted(pathlib.Path(directory).glob("ckpt-*.pt"), key=lambda p: int(p.stem.split("-")[1]))
    return ckpts[-1] if ckpts else None
