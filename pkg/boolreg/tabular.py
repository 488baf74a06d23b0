# SPDX-License-Identifier: LGPL-2.1+
"""
Binary classification on tabular datasets.

A dataset is a CSV file and a JSON schema sidecar naming the type of every
column and the label::

    {
      "label": "class",
      "positive": "e",
      "columns": {"cap-color": "categorical", "bruises": "binary", "weight": "continuous"}
    }

``binarize()`` turns the table into 0/1 features: binary columns are kept,
categorical columns with more than two values become one indicator column
per value named ``column=value``, two-valued categoricals become the single
column ``column=<larger value>``, continuous columns are dropped. Rows with a
missing value in a used column are dropped and counted.
"""
import dataclasses
import json
import logging
import pathlib

import numpy as np
import pandas as pd
import sklearn.model_selection

from .data import ObservationSet
from .evaluation import f1_score
from .formula import evaluate_many, to_text

MAX_FEATURES = 120
COLUMN_TYPES = ("binary", "categorical", "continuous")
SCHEMA_SUFFIX = ".schema.json"
SCORE_COLUMNS = ["dataset", "rows", "dropped_rows", "features", "train", "test", "F1", "formula"]

_logger = logging.getLogger(__name__)


class TabularError(Exception):
    pass


class TabularRejected(TabularError):
    def __init__(self, count):
        super().__init__(f"{count} binary features after binarization, the limit is {MAX_FEATURES}")
        self.count = count


@dataclasses.dataclass(frozen=True)
class Schema:
    label: str
    columns: dict
    positive: object = None

    @classmethod
    def from_dict(cls, d):
        try:
            label = d["label"]
            columns = dict(d["columns"])
        except (KeyError, TypeError, ValueError) as e:
            raise TabularError(f"schema needs 'label' and 'columns': {e}") from None
        for name, kind in columns.items():
            if kind not in COLUMN_TYPES:
                raise TabularError(f"column {name!r} has unknown type {kind!r}, expected one of {', '.join(COLUMN_TYPES)}")
        columns.pop(label, None)
        return cls(label, columns, d.get("positive"))


@dataclasses.dataclass
class BinaryTable:
    """
    ``features`` is an N x F uint8 matrix whose column k is ``names[k]``;
    ``sources[k]`` is the ``(column, value)`` it came from (value None for a
    binary column).
    """

    features: np.ndarray
    labels: np.ndarray
    names: list
    sources: list
    dropped_rows: int = 0

    @property
    def N(self):
        return len(self.labels)

    def subset(self, rows):
        return BinaryTable(self.features[rows], self.labels[rows], self.names, self.sources)


def schema_path_of(csv_path):
    p = pathlib.Path(csv_path)
    return p.with_name(p.stem + SCHEMA_SUFFIX)


def load_dataset(csv_path, schema_path=None):
    """``(DataFrame, Schema)``; the schema defaults to ``<name>.schema.json`` next to the CSV."""
    schema_path = schema_path or schema_path_of(csv_path)
    try:
        with open(schema_path) as f:
            schema = Schema.from_dict(json.load(f))
    except json.JSONDecodeError as e:
        raise TabularError(f"{schema_path}: invalid JSON: {e.msg}") from None
    try:
        df = pd.read_csv(csv_path, dtype=str, keep_default_na=True, skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise TabularError(f"{csv_path}: {e}") from None

    missing = [c for c in [schema.label, *schema.columns] if c not in df.columns]
    if missing:
        raise TabularError(f"{csv_path}: columns {', '.join(missing)} named in the schema are missing")
    return df, schema


def _binary_values(series, name):
    values = sorted(series.unique())
    if len(values) > 2:
        raise TabularError(f"column {name!r} is typed binary but has {len(values)} values")
    if set(values) <= {"0", "1"}:
        return "1"
    return values[-1]


def _label_values(series, label, positive):
    values = sorted(series.unique())
    if len(values) > 2:
        raise TabularError(f"label {label!r} has {len(values)} classes, only binary labels are supported")
    if positive is not None:
        positive = str(positive)
        if positive not in values:
            raise TabularError(f"positive class {positive!r} does not occur in label {label!r}")
        return positive
    return "1" if set(values) <= {"0", "1"} else values[-1]


def binarize(df, schema):
    """``BinaryTable`` of ``df``; raises ``TabularRejected`` above ``MAX_FEATURES`` features."""
    used = [schema.label, *(c for c, t in schema.columns.items() if t != "continuous")]
    clean = df[used].dropna()
    dropped = len(df) - len(clean)
    if dropped:
        _logger.info(f"dropped {dropped} row(s) with missing values")

    names, sources, cols = [], [], []
    for col in used[1:]:
        s = clean[col].astype(str)
        if schema.columns[col] == "binary":
            one = _binary_values(s, col)
            names.append(col)
            sources.append((col, None))
            cols.append((s == one).to_numpy())
            continue
        values = sorted(s.unique())
        if len(values) <= 2:
            names.append(f"{col}={values[-1]}")
            sources.append((col, values[-1]))
            cols.append((s == values[-1]).to_numpy())
        else:
            dummies = pd.get_dummies(s, prefix=col, prefix_sep="=")
            for v in values:
                names.append(f"{col}={v}")
                sources.append((col, v))
                cols.append(dummies[f"{col}={v}"].to_numpy())

    if len(names) > MAX_FEATURES:
        raise TabularRejected(len(names))

    labels = clean[schema.label].astype(str)
    positive = _label_values(labels, schema.label, schema.positive)
    features = np.stack(cols, axis=1).astype(np.uint8) if cols else np.zeros((len(clean), 0), dtype=np.uint8)
    return BinaryTable(features, (labels == positive).to_numpy().astype(np.uint8), names, sources, dropped)


def split(table, test_fraction=0.25, seed=0):
    """Disjoint ``(train, test)`` tables; the same seed gives the same split."""
    if table.N == 0:
        raise TabularError("cannot split an empty table")
    try:
        train, test = sklearn.model_selection.train_test_split(np.arange(table.N), test_size=test_fraction, random_state=seed)
    except ValueError as e:
        raise TabularError(f"cannot split {table.N} row(s): {e}") from None
    return table.subset(np.sort(train)), table.subset(np.sort(test))


def classify_and_score(predictor, train, test, rng=None):
    """``(F1 on test, formula)`` of the formula predicted from the train rows."""
    obs = ObservationSet(train.features, train.labels, train.features.shape[1])
    cand = predictor(obs, rng=rng)
    predicted = evaluate_many(cand.formula, test.features)
    return f1_score(predicted, test.labels.astype(bool)), cand.formula


def describe_formula(f, table):
    """Text of ``f`` with variables renamed to feature names."""
    return " ".join(table.names[int(t[2:])] if t.startswith("x_") and t[2:].isdigit() else t for t in to_text(f).split())


def run_dataset(predictor, csv_path, schema_path=None, test_fraction=0.25, seed=0, rng=None):
    """Score row (``SCORE_COLUMNS``) of one dataset."""
    df, schema = load_dataset(csv_path, schema_path)
    table = binarize(df, schema)
    train, test = split(table, test_fraction, seed)
    f1, formula = classify_and_score(predictor, train, test, rng=rng)
    return {
        "dataset": pathlib.Path(csv_path).stem,
        "rows": table.N,
        "dropped_rows": table.dropped_rows,
        "features": len(table.names),
        "train": train.N,
        "test": test.N,
        "F1": f1,
        "formula": describe_formula(formula, table),
    }


def read_baseline_scores(path):
    """External scores: a CSV with a ``dataset`` column and one column per method."""
    try:
        df = pd.read_csv(path, comment="#")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise TabularError(f"{path}: {e}") from None
    if "dataset" not in df.columns:
        raise TabularError(f"{path}: baseline scores need a 'dataset' column")
    return df


def merge_baseline_scores(scores, baselines):
    return scores.merge(baselines, on="dataset", how="left")
