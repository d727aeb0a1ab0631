"""
Unit tests for dataset ingestion, validation and persistence.
"""

import json

import numpy as np
import pandas as pd
import pytest

from src.dataset import ColumnMeta, CsvSchema, Dataset, dataset_from_frame, load_csv, load_dataset, save_datasets
from src.exceptions import InvalidArgumentError, SchemaError
from src.survival.cox import SurvivalOutcome


@pytest.fixture
def raw_frame():
    return pd.DataFrame({
        "age": [50.0, 61.5, 40.0, 72.0],
        "grade": ["2", "1", "2", "3"],
        "duration": [10.0, 3.5, 8.0, 1.0],
        "event": [1, 0, 1, 1],
    })


def test_frame_encoding(raw_frame):
    ds = dataset_from_frame(raw_frame, CsvSchema(categorical=["grade"]))
    assert ds.feature_names == ["age", "grade"]
    assert ds.columns[1].labels == ["2", "1", "3"]
    np.testing.assert_array_equal(ds.X[:, 1], [0, 1, 0, 2])
    assert ds.outcome.n_events == 3
    assert list(ds.to_frame()["grade"]) == ["2", "1", "2", "3"]


def test_missing_columns(raw_frame):
    with pytest.raises(SchemaError):
        dataset_from_frame(raw_frame.drop(columns=["event"]))


@pytest.mark.parametrize("column, value, row", [("duration", -1.0, 3), ("event", 2, 2), ("age", "n/a", 4)])
def test_bad_values_report_one_based_rows(raw_frame, column, value, row):
    frame = raw_frame.astype({column: object})
    frame.loc[row - 1, column] = value
    with pytest.raises(SchemaError) as info:
        dataset_from_frame(frame, CsvSchema(categorical=["grade"]))
    assert info.value.rows == [row]


def test_pinned_categories_reject_unseen_labels(raw_frame):
    with pytest.raises(SchemaError):
        dataset_from_frame(raw_frame, CsvSchema(categorical=["grade"]), categories={"grade": ["1", "2"]})


def test_dataset_validation():
    outcome = SurvivalOutcome([1.0, 2.0], [1, 0])
    with pytest.raises(InvalidArgumentError):
        Dataset(X=np.zeros((3, 1)), columns=[ColumnMeta("a")], outcome=outcome)
    with pytest.raises(InvalidArgumentError):
        Dataset(X=np.array([[0.0], [5.0]]), columns=[ColumnMeta("g", kind="categorical", labels=["a", "b"])], outcome=outcome)


def test_save_and_load_with_metadata(tmp_path, raw_frame):
    ds = dataset_from_frame(raw_frame, CsvSchema(categorical=["grade"]))
    ds.provenance = {"formula": "custom", "theta": np.array([0.1, 0.2, 0.3, 0.4])}
    paths = save_datasets({"train": ds, "test": ds.subset([0, 1])}, str(tmp_path))
    with open(paths["meta"]) as handle:
        meta = json.load(handle)
    assert meta["theta"]["test.csv"] == [0.1, 0.2]

    again = load_dataset(paths["test"])
    np.testing.assert_array_equal(again.X, ds.X[:2])
    np.testing.assert_array_equal(again.true_theta, [0.1, 0.2])
    assert again.columns[1].labels == ["2", "1", "3"]
    assert again.provenance["formula"] == "custom"
    assert load_dataset(paths["train"]).fingerprint() == ds.fingerprint()


def test_datasets_saved_together_share_columns(tmp_path, raw_frame):
    ds = dataset_from_frame(raw_frame, CsvSchema(categorical=["grade"]))
    other = dataset_from_frame(raw_frame)
    with pytest.raises(InvalidArgumentError):
        save_datasets({"train": ds, "test": other}, str(tmp_path))


def test_load_raw_csv_without_metadata(tmp_path, raw_frame):
    path = tmp_path / "raw.csv"
    raw_frame.rename(columns={"duration": "time", "event": "status"}).to_csv(path, index=False)
    ds = load_dataset(str(path), schema=CsvSchema(duration="time", event="status", categorical=["grade"]))
    assert ds.provenance is None
    assert ds.columns[1].is_categorical
    with pytest.raises(FileNotFoundError):
        load_csv(str(tmp_path / "missing.csv"))


def test_fingerprint_tracks_content(raw_frame):
    ds = dataset_from_frame(raw_frame)
    changed = raw_frame.copy()
    changed.loc[0, "age"] = 51.0
    assert dataset_from_frame(changed).fingerprint() != ds.fingerprint()
    assert dataset_from_frame(raw_frame.copy()).fingerprint() == ds.fingerprint()


def test_input_meta_carries_categories(raw_frame):
    meta = dataset_from_frame(raw_frame, CsvSchema(categorical=["grade"])).input_meta()
    assert meta[1].is_categorical and meta[1].n_categories == 3
