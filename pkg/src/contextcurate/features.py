"""Handcrafted feature ingestion and train-fitted z-score normalization.

The engine does not compute linguistic features itself; it ingests a
precomputed per-context feature table (CSV) and normalizes each column to
mean zero / unit standard deviation using statistics fitted on training rows
only, so holdout rows never influence the transform. Normalized vectors are
concatenated with an encoder vector for the late-fusion model.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .corpus import Corpus, DataQualityWarning


class FeatureFormatError(ValueError):
    """Raised for ragged rows, non-numeric cells, or a bad header."""


@dataclass(frozen=True)
class FeatureTable:
    """Per-context feature vectors, all of width ``n_features``."""

    feature_names: tuple[str, ...]
    rows: dict[str, np.ndarray]

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def ids(self) -> list[str]:
        return list(self.rows)

    def matrix(self, ids: Iterable[str]) -> np.ndarray:
        ids = list(ids)
        if not ids:
            return np.empty((0, self.n_features))
        return np.stack([self.rows[i] for i in ids])


@dataclass(frozen=True)
class NormStats:
    """Per-feature mean and sample (n-1) standard deviation from training rows."""

    mean: np.ndarray
    sd: np.ndarray
    fitted_on: int

    def zero_variance_mask(self) -> np.ndarray:
        return self.sd == 0.0


def load_features(path: str | Path) -> FeatureTable:
    """Load a feature CSV with header ``id,<name>,...`` and numeric cells.

    Empty cells are missing values; each is imputed to the mean of its
    column's present values (a DataQualityWarning is emitted per column).
    Ragged rows and non-numeric cells are errors.
    """
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FeatureFormatError(f"{path}: empty feature file") from None
        if not header or header[0] != "id" or len(header) < 2:
            raise FeatureFormatError(f"{path}: header must be 'id,<feature>,...'")
        names = tuple(header[1:])
        width = len(names)
        ids: list[str] = []
        values: list[list[float]] = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width + 1:
                raise FeatureFormatError(
                    f"{path}:{line_no}: ragged row with {len(row) - 1} cells, expected {width}"
                )
            vec = []
            for name, cell in zip(names, row[1:]):
                if cell == "":
                    vec.append(np.nan)
                    continue
                try:
                    vec.append(float(cell))
                except ValueError:
                    raise FeatureFormatError(
                        f"{path}:{line_no}: non-numeric cell {cell!r} in column {name!r}"
                    ) from None
            if not all(np.isfinite(v) or np.isnan(v) for v in vec):
                raise FeatureFormatError(f"{path}:{line_no}: non-finite cell")
            ids.append(row[0])
            values.append(vec)
    mat = np.asarray(values, dtype=np.float64).reshape(len(ids), width)
    _impute_missing(mat, names)
    rows = {i: mat[k].copy() for k, i in enumerate(ids)}
    if len(rows) != len(ids):
        raise FeatureFormatError(f"{path}: duplicate context ids in feature table")
    return FeatureTable(feature_names=names, rows=rows)


def _impute_missing(mat: np.ndarray, names: tuple[str, ...]) -> None:
    """Replace NaN cells with their column mean over present values, in place."""
    for j in range(mat.shape[1]):
        col = mat[:, j]
        missing = np.isnan(col)
        if not missing.any():
            continue
        present = col[~missing]
        fill = float(present.mean()) if present.size else 0.0
        col[missing] = fill
        warnings.warn(
            f"feature {names[j]!r}: imputed {int(missing.sum())} missing cell(s) "
            f"to column mean {fill:.6g}",
            DataQualityWarning,
            stacklevel=3,
        )


def fit_normalizer(table: FeatureTable, train_ids: Iterable[str]) -> NormStats:
    """Fit per-feature mean/sd on the given training rows only.

    Zero-variance features are flagged with a warning and keep sd = 0; they
    normalize to 0 in apply_normalizer so the fused width stays constant.
    """
    train_ids = list(train_ids)
    missing = [i for i in train_ids if i not in table.rows]
    if missing:
        raise KeyError(f"train ids not in feature table: {missing[:5]}")
    if len(train_ids) < 2:
        raise ValueError(f"need at least 2 training rows to fit, got {len(train_ids)}")
    mat = table.matrix(train_ids)
    mean = mat.mean(axis=0)
    sd = mat.std(axis=0, ddof=1)
    n_const = int((sd == 0.0).sum())
    if n_const:
        warnings.warn(
            f"{n_const} zero-variance feature(s) on the training rows",
            DataQualityWarning,
            stacklevel=2,
        )
    return NormStats(mean=mean, sd=sd, fitted_on=len(train_ids))


def apply_normalizer(stats: NormStats, vector: np.ndarray) -> np.ndarray:
    """z-score one vector: (v - mean) / sd, with zero-variance features -> 0."""
    vector = np.asarray(vector, dtype=np.float64)
    if vector.shape != stats.mean.shape:
        raise ValueError(f"vector length {vector.shape} does not match stats {stats.mean.shape}")
    safe_sd = np.where(stats.sd == 0.0, 1.0, stats.sd)
    out = (vector - stats.mean) / safe_sd
    return np.where(stats.sd == 0.0, 0.0, out)


def demo_features(corpus: Corpus) -> FeatureTable:
    """Trivial plumbing features for end-to-end examples and tests.

    Snippet word count, occurrence count, mean word length, and band. These
    carry no modeling claim; real feature tables come from load_features.
    """
    names = ("snippet_word_count", "occurrence_count", "mean_word_length", "band")
    rows = {}
    for r in corpus.records:
        words = r.snippet.split()
        mean_len = sum(len(w) for w in words) / len(words) if words else 0.0
        rows[r.id] = np.array(
            [len(words), len(r.occurrences), mean_len, r.word.band], dtype=np.float64
        )
    return FeatureTable(feature_names=names, rows=rows)
