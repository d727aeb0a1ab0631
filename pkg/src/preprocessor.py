"""
Dataset preprocessing: z-scoring of continuous covariates and stratified
train/test splitting.
"""

from __future__ import annotations

import warnings
from dataclasses import replace
from typing import Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.model_selection import train_test_split

from src.config import GENERATOR_CONFIG
from src.dataset import ColumnMeta, Dataset
from src.exceptions import InvalidArgumentError


def _with_matrix(ds: Dataset, X: np.ndarray, columns: Sequence[ColumnMeta]) -> Dataset:
    return Dataset(X=X, columns=list(columns), outcome=ds.outcome, provenance=ds.provenance)


def standardize(ds: Dataset) -> Dataset:
    """Z-score every continuous column with its own mean/std; categorical columns are untouched."""
    X = ds.X.copy()
    columns = []
    for i, col in enumerate(ds.columns):
        if col.is_categorical or col.standardized:
            columns.append(replace(col))
            continue
        mean, std = float(X[:, i].mean()), float(X[:, i].std())
        if std == 0:
            warnings.warn(f"Column '{col.name}' has zero variance; left unscaled", stacklevel=2)
            columns.append(replace(col))
            continue
        X[:, i] = (X[:, i] - mean) / std
        columns.append(replace(col, mean=mean, std=std))
    return _with_matrix(ds, X, columns)


def apply_standardization(ds: Dataset, stats: Sequence[ColumnMeta]) -> Dataset:
    """Scale ds with the statistics recorded on another dataset's columns (normally training)."""
    if [c.name for c in stats] != ds.feature_names:
        raise InvalidArgumentError("Standardization statistics do not match the dataset's columns")
    X = ds.X.copy()
    columns = []
    for i, (col, ref) in enumerate(zip(ds.columns, stats)):
        if col.standardized:
            if (col.mean, col.std) != (ref.mean, ref.std):
                raise InvalidArgumentError(f"Column '{col.name}' is already standardized with other statistics")
            columns.append(replace(col))
            continue
        if ref.standardized:
            X[:, i] = (X[:, i] - ref.mean) / ref.std
        columns.append(replace(col, mean=ref.mean, std=ref.std))
    return _with_matrix(ds, X, columns)


def destandardize(ds: Dataset) -> Dataset:
    X = ds.X.copy()
    columns = []
    for i, col in enumerate(ds.columns):
        if col.standardized:
            X[:, i] = X[:, i] * col.std + col.mean
        columns.append(replace(col, mean=None, std=None))
    return _with_matrix(ds, X, columns)


def _strata(ds: Dataset, bins: int) -> np.ndarray:
    """Event indicator x duration-quantile labels, merging buckets of fewer than two rows."""
    durations = pd.Series(ds.outcome.durations)
    quantile = pd.qcut(durations.rank(method="first"), q=min(bins, len(ds)), labels=False).to_numpy()
    events = ds.outcome.events
    labels = np.empty(len(ds), dtype=int)
    for event in (0, 1):
        rows = np.flatnonzero(events == event)
        if rows.size == 0:
            continue
        bucket = quantile[rows].copy()
        while True:
            values, counts = np.unique(bucket, return_counts=True)
            small = values[counts < 2]
            if small.size == 0 or values.size == 1:
                break
            target = small[0]
            others = values[values != target]
            neighbour = others[np.argmin(np.abs(others - target))]
            warnings.warn(
                f"Stratum (event={event}, bin={target}) has fewer than 2 rows; merged into bin {neighbour}",
                stacklevel=3,
            )
            bucket[bucket == target] = neighbour
        labels[rows] = event * (bins + 1) + bucket
    return labels


def stratified_split(
    ds: Dataset,
    test_fraction: float = 0.2,
    bins: int = GENERATOR_CONFIG["split_bins"],
    seed: int = 0,
) -> Tuple[Dataset, Dataset]:
    """Split rows so both sides keep the event rate and duration distribution."""
    if not 0 < test_fraction < 1:
        raise InvalidArgumentError("test_fraction must lie in (0, 1)")
    if bins < 1:
        raise InvalidArgumentError("bins must be >= 1")
    rows = np.arange(len(ds))
    labels = _strata(ds, bins)
    try:
        train_rows, test_rows = train_test_split(rows, test_size=test_fraction, random_state=seed, stratify=labels)
    except ValueError as exc:
        warnings.warn(f"Stratified split not possible ({exc}); falling back to a plain shuffle", stacklevel=2)
        train_rows, test_rows = train_test_split(rows, test_size=test_fraction, random_state=seed)
    return ds.subset(np.sort(train_rows)), ds.subset(np.sort(test_rows))


def prepare_datasets(train: Dataset, test: Dataset | None = None, scale: bool = True) -> Tuple[Dataset, Dataset | None]:
    """Standardize train, then scale test with the training statistics."""
    if not scale:
        return train, test
    train = standardize(train)
    if test is not None:
        test = apply_standardization(test, train.columns)
    return train, test
