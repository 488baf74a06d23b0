# SPDX-License-Identifier: LGPL-2.1+
import json
import os
import tempfile
import unittest

import numpy as np
import pandas as pd

from boolreg.formula import Var
from boolreg.tabular import (
    MAX_FEATURES,
    SCORE_COLUMNS,
    BinaryTable,
    Schema,
    TabularError,
    TabularRejected,
    binarize,
    classify_and_score,
    load_dataset,
    merge_baseline_scores,
    read_baseline_scores,
    run_dataset,
    schema_path_of,
    split,
)

from fakes import FormulaPredictor, MajorityPredictor

SCHEMA = {
    "label": "class",
    "positive": "e",
    "columns": {"color": "categorical", "bruises": "binary", "size": "categorical", "weight": "continuous"},
}


def mushrooms(n=100, seed=0):
    rng = np.random.default_rng(seed)
    bruises = rng.choice(["yes", "no"], size=n)
    return pd.DataFrame(
        {
            "color": rng.choice(["red", "green", "blue"], size=n),
            "bruises": bruises,
            "size": rng.choice(["small", "large"], size=n),
            "weight": rng.normal(size=n).round(3).astype(str),
            "class": np.where(bruises == "yes", "e", "p"),
        }
    )


class TestBinarize(unittest.TestCase):
    def setUp(self):
        self.schema = Schema.from_dict(SCHEMA)

    def test_features(self):
        table = binarize(mushrooms(), self.schema)
        self.assertEqual(table.names, ["color=blue", "color=green", "color=red", "bruises", "size=small"])
        self.assertEqual(table.sources[3], ("bruises", None))
        self.assertTrue((table.features[:, :3].sum(axis=1) == 1).all())
        self.assertEqual(table.features.dtype, np.uint8)
        self.assertTrue(np.array_equal(table.labels, table.features[:, 3]))

    def test_missing_rows_dropped(self):
        df = mushrooms(10)
        df.loc[2, "color"] = None
        df.loc[5, "class"] = None
        table = binarize(df, self.schema)
        self.assertEqual((table.N, table.dropped_rows), (8, 2))

    def test_missing_continuous_value_kept(self):
        df = mushrooms(10)
        df.loc[2, "weight"] = None
        self.assertEqual(binarize(df, self.schema).N, 10)

    def test_too_many_features(self):
        n = MAX_FEATURES + 1
        df = pd.DataFrame({"id": [f"v{i}" for i in range(n)], "y": ["0", "1"] * (n // 2) + ["0"]})
        with self.assertRaises(TabularRejected) as cm:
            binarize(df, Schema.from_dict({"label": "y", "columns": {"id": "categorical"}}))
        self.assertEqual(cm.exception.count, n)

    def test_multiclass_label(self):
        df = mushrooms(30)
        df["class"] = np.resize(["a", "b", "c"], 30)
        with self.assertRaises(TabularError):
            binarize(df, Schema("class", {"bruises": "binary"}))

    def test_binary_column_with_three_values(self):
        df = mushrooms(30)
        df["bruises"] = np.resize(["yes", "no", "maybe"], 30)
        with self.assertRaises(TabularError):
            binarize(df, self.schema)

    def test_schema_errors(self):
        with self.assertRaises(TabularError):
            Schema.from_dict({"label": "class", "columns": {"a": "ordinal"}})
        with self.assertRaises(TabularError):
            Schema.from_dict({"columns": {}})
        with self.assertRaises(TabularError):
            binarize(mushrooms(10), Schema("class", {}, positive="x"))


class TestSplit(unittest.TestCase):
    def setUp(self):
        self.table = binarize(mushrooms(), Schema.from_dict(SCHEMA))

    def test_sizes(self):
        train, test = split(self.table, 0.25, seed=1)
        self.assertEqual((train.N, test.N), (75, 25))

    def test_reproducible(self):
        a, _ = split(self.table, seed=4)
        b, _ = split(self.table, seed=4)
        self.assertTrue(np.array_equal(a.features, b.features))

    def test_empty(self):
        empty = BinaryTable(np.zeros((0, 2), dtype=np.uint8), np.zeros(0, dtype=np.uint8), ["a", "b"], [("a", None), ("b", None)])
        with self.assertRaises(TabularError):
            split(empty)

    def test_exact_formula_scores_one(self):
        train, test = split(self.table, seed=2)
        f1, formula = classify_and_score(FormulaPredictor(Var(3)), train, test)
        self.assertEqual(f1, 1.0)
        self.assertIs(formula, Var(3))


class TestDatasets(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.csv = os.path.join(self.tmp.name, "mushroom.csv")
        mushrooms().to_csv(self.csv, index=False)
        with open(schema_path_of(self.csv), "w") as f:
            json.dump(SCHEMA, f)

    def tearDown(self):
        self.tmp.cleanup()

    def test_schema_sidecar(self):
        self.assertEqual(os.path.basename(schema_path_of(self.csv)), "mushroom.schema.json")
        df, schema = load_dataset(self.csv)
        self.assertEqual(len(df), 100)
        self.assertEqual(schema.positive, "e")

    def test_run_dataset(self):
        row = run_dataset(FormulaPredictor(Var(3)), self.csv)
        self.assertEqual(list(row), SCORE_COLUMNS)
        self.assertEqual(row["dataset"], "mushroom")
        self.assertEqual((row["train"], row["test"], row["features"]), (75, 25, 5))
        self.assertEqual(row["F1"], 1.0)
        self.assertEqual(row["formula"], "bruises")

    def test_majority_runs(self):
        row = run_dataset(MajorityPredictor(), self.csv, test_fraction=0.5)
        self.assertTrue(0.0 <= row["F1"] <= 1.0)

    def test_missing_column(self):
        with open(schema_path_of(self.csv), "w") as f:
            json.dump({"label": "class", "columns": {"stem": "binary"}}, f)
        with self.assertRaises(TabularError):
            load_dataset(self.csv)

    def test_baselines(self):
        path = os.path.join(self.tmp.name, "baselines.csv")
        with open(path, "w") as f:
            f.write("# external scores\ndataset,random_forest\nmushroom,0.99\n")
        scores = pd.DataFrame([run_dataset(FormulaPredictor(Var(3)), self.csv)], columns=SCORE_COLUMNS)
        merged = merge_baseline_scores(scores, read_baseline_scores(path))
        self.assertEqual(merged.random_forest[0], 0.99)
        with open(path, "w") as f:
            f.write("name,random_forest\nmushroom,0.99\n")
        with self.assertRaises(TabularError):
            read_baseline_scores(path)


if __name__ == "__main__":
    unittest.main()
