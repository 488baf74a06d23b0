# SPDX-License-Identifier: LGPL-2.1+
import unittest

import numpy as np

from boolreg.data import ObservationSet, parse_truth_table
from boolreg.encoding import (
    MINORITY_1,
    EncodingError,
    Vocabulary,
    decode_target,
    encode_noiseless,
    encode_noisy,
    encode_observations,
    encode_target,
    minority_value,
)
from boolreg.formula import And, Not, Or, Var


class TestEncoder(unittest.TestCase):
    def setUp(self):
        self.vocab = Vocabulary(4)
        self.zero = self.vocab.enc_index["0"]
        self.one = self.vocab.enc_index["1"]
        self.pad = self.vocab.enc_pad_id

    def test_minority(self):
        self.assertEqual(minority_value(np.array([0, 0, 0, 1])), 1)
        self.assertEqual(minority_value(np.array([1, 1, 0])), 0)
        self.assertEqual(minority_value(np.array([0, 1])), 1)

    def test_noiseless_and(self):
        indicator, rows = encode_noiseless(parse_truth_table("0001"))
        self.assertEqual(indicator, MINORITY_1)
        self.assertEqual(rows.tolist(), [[1, 1, 1]])

    def test_noiseless_constant(self):
        indicator, rows = encode_noiseless(parse_truth_table("0000"))
        self.assertEqual(indicator, MINORITY_1)
        self.assertEqual(rows.shape, (0, 3))

    def test_noiseless_tie(self):
        indicator, rows = encode_noiseless(parse_truth_table("01"))
        self.assertEqual(indicator, MINORITY_1)
        self.assertEqual(rows.tolist(), [[1, 1]])

    def test_noisy_padding(self):
        ids = encode_noisy(ObservationSet([[1, 0]], [1]), self.vocab)
        self.assertEqual(ids.tolist(), [[self.one, self.zero, self.pad, self.pad, self.one]])

    def test_noisy_rows(self):
        obs = ObservationSet(np.zeros((30, 4), dtype=np.uint8), np.zeros(30))
        ids = encode_noisy(obs, self.vocab)
        self.assertEqual(ids.shape, (30, 5))
        self.assertNotIn(self.pad, ids)

    def test_noisy_dimension(self):
        with self.assertRaises(EncodingError):
            encode_noisy(ObservationSet(np.zeros((2, 5)), [0, 1]), self.vocab)

    def test_indicator_row(self):
        ids = encode_observations(parse_truth_table("0111"), self.vocab, "noiseless")
        self.assertEqual(ids.shape, (2, 5))
        self.assertEqual(ids[0, 0], self.vocab.enc_index["<minority_0>"])
        self.assertEqual(ids[1].tolist(), [self.zero, self.zero, self.pad, self.pad, self.zero])


class TestDecoder(unittest.TestCase):
    def setUp(self):
        self.vocab = Vocabulary(4)
        self.ids = self.vocab.dec_index

    def test_encode_target(self):
        ids = encode_target(And(Var(1), Not(Var(2))), self.vocab)
        tokens = [self.vocab.decoder_tokens[i] for i in ids]
        self.assertEqual(tokens, ["<bos>", "and", "x_1", "not", "x_2", "<eos>"])

    def test_target_out_of_vocabulary(self):
        with self.assertRaises(EncodingError):
            encode_target(Var(4), self.vocab)
        with self.assertRaises(EncodingError):
            encode_target(Or(*(Var(i % 4) for i in range(120))), self.vocab)

    def test_decode(self):
        v = self.ids
        self.assertIs(decode_target([v["<bos>"], v["x_0"], v["<eos>"]], self.vocab), Var(0))
        self.assertIs(decode_target([v["x_0"], v["<eos>"], v["and"]], self.vocab), Var(0))

    def test_decode_invalid(self):
        v = self.ids
        for seq in (
            [v["<bos>"], v["and"], v["x_0"], v["<eos>"]],
            [v["<bos>"], v["x_0"]],
            [v["<bos>"], v["<pad>"], v["<eos>"]],
            [v["<bos>"], 999, v["<eos>"]],
        ):
            with self.assertRaises(EncodingError):
                decode_target(seq, self.vocab)

    def test_vocabulary_round_trip(self):
        self.assertEqual(Vocabulary.from_dict(self.vocab.to_dict()), self.vocab)
        self.assertEqual(len(self.vocab), 3 + 5 + 4)


if __name__ == "__main__":
    unittest.main()
