"""
Survival datasets: covariate matrix, per-column metadata and outcome, with CSV
ingestion and a CSV + JSON sidecar persistence format.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.config import DATA_PATHS
from src.exceptions import InvalidArgumentError, SchemaError
from src.kan.network import InputMeta
from src.survival.cox import SurvivalOutcome

DURATION_COLUMN = "duration"
EVENT_COLUMN = "event"


@dataclass
class ColumnMeta:
    name: str
    kind: str = "continuous"
    labels: List[str] = field(default_factory=list)
    mean: Optional[float] = None
    std: Optional[float] = None

    @property
    def is_categorical(self) -> bool:
        return self.kind == "categorical"

    @property
    def standardized(self) -> bool:
        return self.mean is not None

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "kind": self.kind, "labels": list(self.labels), "mean": self.mean, "std": self.std}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ColumnMeta":
        return cls(
            name=payload["name"],
            kind=payload.get("kind", "continuous"),
            labels=[str(label) for label in payload.get("labels", [])],
            mean=payload.get("mean"),
            std=payload.get("std"),
        )


@dataclass
class Dataset:
    X: np.ndarray
    columns: List[ColumnMeta]
    outcome: SurvivalOutcome
    provenance: Optional[Dict[str, Any]] = None

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2 or self.X.shape[1] != len(self.columns):
            raise InvalidArgumentError(f"{len(self.columns)} column descriptions for X of shape {self.X.shape}")
        if self.X.shape[0] != len(self.outcome):
            raise InvalidArgumentError(f"X has {self.X.shape[0]} rows, outcome has {len(self.outcome)}")
        for i, col in enumerate(self.columns):
            if col.is_categorical and self.X.shape[0]:
                codes = self.X[:, i]
                if np.any(codes != np.rint(codes)) or codes.min() < 0 or codes.max() >= len(col.labels):
                    raise InvalidArgumentError(f"Column '{col.name}' holds codes outside 0..{len(col.labels) - 1}")

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def feature_names(self) -> List[str]:
        return [col.name for col in self.columns]

    @property
    def true_theta(self) -> Optional[np.ndarray]:
        if self.provenance and self.provenance.get("theta") is not None:
            return np.asarray(self.provenance["theta"], dtype=float)
        return None

    def subset(self, rows: Sequence[int]) -> "Dataset":
        rows = np.asarray(rows)
        provenance = None
        if self.provenance is not None:
            provenance = dict(self.provenance)
            if self.true_theta is not None:
                provenance["theta"] = self.true_theta[rows]
        return Dataset(
            X=self.X[rows],
            columns=[replace(col) for col in self.columns],
            outcome=self.outcome.subset(rows),
            provenance=provenance,
        )

    def input_meta(self) -> List[InputMeta]:
        return [
            InputMeta(
                name=col.name,
                kind=col.kind,
                n_categories=len(col.labels),
                labels=list(col.labels),
                mean=col.mean,
                std=col.std,
            )
            for col in self.columns
        ]

    def to_frame(self, decode: bool = True) -> pd.DataFrame:
        """Covariates plus duration/event; categorical codes decoded back to labels."""
        frame = pd.DataFrame(self.X, columns=self.feature_names)
        for col in self.columns:
            if col.is_categorical and decode:
                frame[col.name] = pd.Categorical.from_codes(frame[col.name].astype(int), categories=col.labels)
        frame[DURATION_COLUMN] = self.outcome.durations
        frame[EVENT_COLUMN] = self.outcome.events
        return frame

    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        digest.update(np.ascontiguousarray(self.X).tobytes())
        digest.update(self.outcome.durations.tobytes())
        digest.update(self.outcome.events.astype(np.int64).tobytes())
        digest.update(json.dumps([col.to_dict() for col in self.columns], sort_keys=True).encode("utf-8"))
        return digest.hexdigest()


@dataclass
class CsvSchema:
    """Which CSV columns hold the outcome and which covariates are categorical."""

    duration: str = DURATION_COLUMN
    event: str = EVENT_COLUMN
    categorical: List[str] = field(default_factory=list)
    features: Optional[List[str]] = None


def _parse_numeric(frame: pd.DataFrame, column: str) -> np.ndarray:
    values = pd.to_numeric(frame[column], errors="coerce")
    bad = values.isna()
    if bad.any():
        raise SchemaError(f"Column '{column}' has unparseable or missing values", rows=_row_numbers(bad))
    return values.to_numpy(dtype=float)


def _row_numbers(mask: pd.Series) -> List[int]:
    # 1-based data rows, header excluded
    return [int(i) + 1 for i in np.flatnonzero(mask.to_numpy())]


def dataset_from_frame(
    frame: pd.DataFrame,
    schema: Optional[CsvSchema] = None,
    categories: Optional[Dict[str, List[str]]] = None,
) -> Dataset:
    """Validate and encode a raw frame; categories pins label orders (e.g. from training data)."""
    schema = schema or CsvSchema()
    categories = categories or {}
    missing = [c for c in (schema.duration, schema.event) if c not in frame.columns]
    features = schema.features or [c for c in frame.columns if c not in (schema.duration, schema.event)]
    missing += [c for c in features + list(schema.categorical) if c not in frame.columns]
    if missing:
        raise SchemaError(f"Missing required columns: {sorted(set(missing))}")
    if not features:
        raise SchemaError("No covariate columns found")

    durations = _parse_numeric(frame, schema.duration)
    nonpositive = pd.Series(durations <= 0)
    if nonpositive.any():
        raise SchemaError("Durations must be strictly positive", rows=_row_numbers(nonpositive))
    events = _parse_numeric(frame, schema.event)
    bad_events = pd.Series(~np.isin(events, (0.0, 1.0)))
    if bad_events.any():
        raise SchemaError("Event values must be 0 or 1", rows=_row_numbers(bad_events))

    columns: List[ColumnMeta] = []
    matrix = np.empty((len(frame), len(features)))
    for i, name in enumerate(features):
        if name in schema.categorical:
            raw = frame[name]
            if raw.isna().any():
                raise SchemaError(f"Categorical column '{name}' has missing values", rows=_row_numbers(raw.isna()))
            raw = raw.astype(str)
            if name in categories:
                labels = list(categories[name])
                codes = pd.Categorical(raw, categories=labels).codes
                unseen = pd.Series(codes < 0)
                if unseen.any():
                    raise SchemaError(f"Column '{name}' has labels not seen in training", rows=_row_numbers(unseen))
            else:
                codes, uniques = pd.factorize(raw, sort=False)
                labels = [str(u) for u in uniques]
            matrix[:, i] = codes
            columns.append(ColumnMeta(name=name, kind="categorical", labels=labels))
        else:
            matrix[:, i] = _parse_numeric(frame, name)
            columns.append(ColumnMeta(name=name))
    return Dataset(X=matrix, columns=columns, outcome=SurvivalOutcome(durations, events.astype(int)))


def load_csv(path: str, schema: Optional[CsvSchema] = None, categories: Optional[Dict[str, List[str]]] = None) -> Dataset:
    if not os.path.exists(path):
        raise FileNotFoundError(f"Dataset file not found: {path}")
    frame = pd.read_csv(path)
    return dataset_from_frame(frame, schema, categories)


def _meta_path_for(csv_path: str) -> str:
    return os.path.join(os.path.dirname(csv_path) or ".", DATA_PATHS["meta_json"])


def save_datasets(datasets: Dict[str, Dataset], directory: str) -> Dict[str, str]:
    """Write {name}.csv per dataset plus one meta.json shared by all of them.

    Datasets saved together must share their column metadata (train/test pairs).
    """
    if not datasets:
        raise InvalidArgumentError("Nothing to save")
    os.makedirs(directory, exist_ok=True)
    first = next(iter(datasets.values()))
    meta: Dict[str, Any] = {
        "columns": [col.to_dict() for col in first.columns],
        "provenance": None,
        "theta": {},
    }
    paths = {}
    for name, ds in datasets.items():
        if [c.to_dict() for c in ds.columns] != meta["columns"]:
            raise InvalidArgumentError(f"Dataset '{name}' has different column metadata")
        file_name = f"{name}.csv"
        path = os.path.join(directory, file_name)
        ds.to_frame(decode=True).to_csv(path, index=False, float_format="%.17g")
        paths[name] = path
        if ds.provenance is not None:
            meta["provenance"] = {k: v for k, v in ds.provenance.items() if k != "theta"}
            if ds.true_theta is not None:
                meta["theta"][file_name] = [float(v) for v in ds.true_theta]
    meta_path = os.path.join(directory, DATA_PATHS["meta_json"])
    with open(meta_path, "w", encoding="utf-8") as handle:
        json.dump(meta, handle, indent=2)
    paths["meta"] = meta_path
    return paths


def load_dataset(csv_path: str, meta_path: Optional[str] = None, schema: Optional[CsvSchema] = None) -> Dataset:
    """Load a CSV, applying the sidecar metadata when present (column kinds, stats, provenance)."""
    meta_path = meta_path or _meta_path_for(csv_path)
    if not os.path.exists(meta_path):
        return load_csv(csv_path, schema)

    with open(meta_path, "r", encoding="utf-8") as handle:
        meta = json.load(handle)
    columns = [ColumnMeta.from_dict(c) for c in meta["columns"]]
    base = schema or CsvSchema()
    schema = CsvSchema(
        duration=base.duration,
        event=base.event,
        categorical=[c.name for c in columns if c.is_categorical],
        features=[c.name for c in columns],
    )
    ds = load_csv(csv_path, schema, categories={c.name: c.labels for c in columns if c.is_categorical})
    ds.columns = columns
    provenance = meta.get("provenance")
    theta = meta.get("theta", {}).get(os.path.basename(csv_path))
    if provenance is not None or theta is not None:
        ds.provenance = dict(provenance or {})
        ds.provenance["theta"] = None if theta is None else np.asarray(theta, dtype=float)
    return ds


def columns_from_inputs(inputs: Sequence[InputMeta]) -> List[ColumnMeta]:
    """Column metadata (kinds, labels, standardization stats) recorded on a network's inputs."""
    return [
        ColumnMeta(name=m.name, kind=m.kind, labels=list(m.labels), mean=m.mean, std=m.std)
        for m in inputs
    ]
