# SPDX-License-Identifier: LGPL-2.1+
"""
Token streams for the model.

Encoder input is a set of rows of ``d_max + 1`` tokens: the input bits padded
with ``<pad>`` up to ``d_max``, then the output bit. Noiseless examples are
compressed: only the rows whose output is the minority value are kept, and an
indicator row ``[<minority_m>, <pad>, ...]`` says which value that is.

Decoder targets are ``<bos>`` + prefix tokens + ``<eos>``.
"""
import numpy as np

from .formula import (
    TOKEN_AND,
    TOKEN_FALSE,
    TOKEN_NOT,
    TOKEN_OR,
    TOKEN_TRUE,
    FormulaError,
    max_variable,
    parse_prefix,
    to_prefix,
    var_token,
)

PAD = "<pad>"
BOS = "<bos>"
EOS = "<eos>"
MINORITY_0 = "<minority_0>"
MINORITY_1 = "<minority_1>"

ENCODER_TOKENS = ("0", "1", PAD, MINORITY_0, MINORITY_1)
SPECIAL_TOKENS = (PAD, BOS, EOS)
OPERATOR_TOKENS = (TOKEN_AND, TOKEN_OR, TOKEN_NOT, TOKEN_TRUE, TOKEN_FALSE)

MAX_TARGET_LEN = 200


class EncodingError(Exception):
    pass


class Vocabulary:
    """
    Encoder and decoder token tables for a fixed ``d_max``.

    Ids are positions in the ordered token lists, which are stored in model
    checkpoints as they are.
    """

    def __init__(self, d_max, decoder_tokens=None, encoder_tokens=None):
        self.d_max = d_max
        if decoder_tokens is None:
            decoder_tokens = [*SPECIAL_TOKENS, *OPERATOR_TOKENS, *(var_token(i) for i in range(d_max))]
        if encoder_tokens is None:
            encoder_tokens = list(ENCODER_TOKENS)
        self.decoder_tokens = list(decoder_tokens)
        self.encoder_tokens = list(encoder_tokens)
        self.dec_index = {t: i for i, t in enumerate(self.decoder_tokens)}
        self.enc_index = {t: i for i, t in enumerate(self.encoder_tokens)}
        if len(self.dec_index) != len(self.decoder_tokens) or len(self.enc_index) != len(self.encoder_tokens):
            raise EncodingError("duplicate tokens in vocabulary")
        for t in (*SPECIAL_TOKENS, *OPERATOR_TOKENS):
            if t not in self.dec_index:
                raise EncodingError(f"decoder vocabulary lacks {t!r}")
        for t in ENCODER_TOKENS:
            if t not in self.enc_index:
                raise EncodingError(f"encoder vocabulary lacks {t!r}")

        self.pad_id = self.dec_index[PAD]
        self.bos_id = self.dec_index[BOS]
        self.eos_id = self.dec_index[EOS]
        self.enc_pad_id = self.enc_index[PAD]

    def __len__(self):
        return len(self.decoder_tokens)

    @property
    def encoder_size(self):
        return len(self.encoder_tokens)

    def to_dict(self):
        return {"d_max": self.d_max, "decoder": list(self.decoder_tokens), "encoder": list(self.encoder_tokens)}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(d["d_max"], d["decoder"], d["encoder"])
        except (KeyError, TypeError) as e:
            raise EncodingError(f"malformed vocabulary: {e}") from None

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.to_dict() == other.to_dict()


def minority_value(outputs):
    """Less frequent output value, 1 on ties."""
    c1 = int(np.count_nonzero(outputs))
    return 1 if c1 <= len(outputs) - c1 else 0


def encode_noiseless(obs):
    """
    ``(indicator, rows)``: the ``<minority_m>`` token and the points whose
    output equals ``m``, each followed by ``m`` (a K x (D + 1) uint8 matrix).
    """
    m = minority_value(obs.outputs)
    sel = obs.outputs == m
    rows = np.concatenate([obs.points[sel], np.full((int(sel.sum()), 1), m, dtype=np.uint8)], axis=1)
    return (MINORITY_1 if m else MINORITY_0), rows


def _pad_rows(bits, outputs, d_max, vocab):
    n, d = bits.shape
    if d > d_max:
        raise EncodingError(f"dimension {d} exceeds d_max={d_max}")
    ids = np.full((n, d_max + 1), vocab.enc_pad_id, dtype=np.int64)
    zero, one = vocab.enc_index["0"], vocab.enc_index["1"]
    ids[:, :d] = np.where(bits, one, zero)
    ids[:, d_max] = np.where(outputs, one, zero)
    return ids


def encode_noisy(obs, vocab):
    """N x (d_max + 1) matrix of encoder token ids."""
    return _pad_rows(obs.points, obs.outputs, vocab.d_max, vocab)


def encode_observations(obs, vocab, regime):
    """
    Encoder input for one observation set. In the noiseless regime the
    indicator row comes first, followed by the compressed rows.
    """
    if regime == "noisy":
        return encode_noisy(obs, vocab)
    if obs.D > vocab.d_max:
        raise EncodingError(f"dimension {obs.D} exceeds d_max={vocab.d_max}")
    indicator, rows = encode_noiseless(obs)
    head = np.full((1, vocab.d_max + 1), vocab.enc_pad_id, dtype=np.int64)
    head[0, 0] = vocab.enc_index[indicator]
    body = _pad_rows(rows[:, :-1], rows[:, -1], vocab.d_max, vocab)
    return np.concatenate([head, body])


def encode_target(f, vocab, max_len=MAX_TARGET_LEN):
    tokens = to_prefix(f)
    if len(tokens) > max_len:
        raise EncodingError(f"target has {len(tokens)} tokens, limit is {max_len}")
    if max_variable(f) >= vocab.d_max:
        raise EncodingError(f"target uses x_{max_variable(f)}, vocabulary stops at d_max={vocab.d_max}")
    return [vocab.bos_id, *(vocab.dec_index[t] for t in tokens), vocab.eos_id]


def decode_target(ids, vocab):
    """
    Formula of a decoder id sequence: an optional leading ``<bos>``, prefix
    tokens, then ``<eos>``. Anything after ``<eos>`` is ignored. Raises
    ``EncodingError`` when the sequence is not a valid candidate.
    """
    ids = [int(i) for i in ids]
    if ids and ids[0] == vocab.bos_id:
        ids = ids[1:]
    try:
        end = ids.index(vocab.eos_id)
    except ValueError:
        raise EncodingError("sequence has no end token") from None
    try:
        tokens = [vocab.decoder_tokens[i] for i in ids[:end]]
    except IndexError:
        raise EncodingError("token id out of range") from None
    if any(t in SPECIAL_TOKENS for t in tokens):
        raise EncodingError("special token inside a formula")
    try:
        return parse_prefix(tokens)
    except FormulaError as e:
        raise EncodingError(f"invalid formula: {e}") from None
