"""Dataset ingestion: delimited files to classification bundles with a reference truth."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from models.sparse_linear import logistic_lasso_at_sparsity, logistic_lasso_cv
from utils.errors import IngestionError
from utils.logger import get_logger

logger = get_logger(__name__)


class Transform(str, Enum):
    NONE = "none"
    LOG2 = "log2"


@dataclass(frozen=True, eq=False)
class DatasetBundle:
    """Standardized features, binary labels and the fitted sparse logit truth."""

    features: np.ndarray
    labels: np.ndarray
    beta_ref: np.ndarray
    noise_scale: float
    intercept: float = 0.0
    penalty: float = 0.0
    feature_names: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.beta_ref.shape != (self.features.shape[1],):
            raise IngestionError(
                f"reference parameter has length {self.beta_ref.shape[0]}, expected {self.features.shape[1]}"
            )
        for cls in (0, 1):
            if not np.any(self.labels == cls):
                raise IngestionError(f"class {cls} has no samples")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def class_indices(self) -> Tuple[np.ndarray, np.ndarray]:
        """(rows labeled 0, rows labeled 1)."""
        return np.flatnonzero(self.labels == 0), np.flatnonzero(self.labels == 1)

    @property
    def sparsity(self) -> int:
        return int(np.count_nonzero(self.beta_ref))

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savez_compressed(
            path,
            features=self.features,
            labels=self.labels,
            beta_ref=self.beta_ref,
            scalars=np.array([self.noise_scale, self.intercept, self.penalty]),
            feature_names=np.array(self.feature_names, dtype=str),
        )
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "DatasetBundle":
        with np.load(path, allow_pickle=False) as archive:
            noise_scale, intercept, penalty = archive["scalars"].tolist()
            return cls(
                features=archive["features"],
                labels=archive["labels"],
                beta_ref=archive["beta_ref"],
                noise_scale=noise_scale,
                intercept=intercept,
                penalty=penalty,
                feature_names=tuple(archive["feature_names"].tolist()),
            )


def _parse_labels(raw: pd.Series, label_column: str) -> np.ndarray:
    values = pd.to_numeric(raw, errors="coerce")
    bad = ~values.isin([0, 1])
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise IngestionError(f"label {raw.iloc[row]!r} is not 0 or 1", row=row + 1, column=label_column)
    labels = values.to_numpy(dtype=np.int8)
    for cls in (0, 1):
        if not np.any(labels == cls):
            raise IngestionError(f"class {cls} has no samples", column=label_column)
    return labels


def _parse_features(frame: pd.DataFrame) -> np.ndarray:
    numeric = frame.apply(pd.to_numeric, errors="coerce")
    missing = numeric.isna().to_numpy()
    if missing.any():
        row, col = np.argwhere(missing)[0]
        raise IngestionError(
            f"non-numeric cell {frame.iat[row, col]!r}", row=int(row) + 1, column=str(frame.columns[col])
        )
    values = numeric.to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        row, col = np.argwhere(~np.isfinite(values))[0]
        raise IngestionError("non-finite cell", row=int(row) + 1, column=str(frame.columns[col]))
    return values


def standardize(values: np.ndarray) -> np.ndarray:
    """Center and scale columns; constant columns become zero."""
    centered = values - values.mean(axis=0)
    scale = values.std(axis=0)
    safe = np.where(scale > 0, scale, 1.0)
    return np.where(scale > 0, centered / safe, 0.0)


def ingest_dataset(
    path: Union[str, Path],
    label_column: str,
    transform: Union[Transform, str] = Transform.NONE,
    n_folds: int = 5,
    seed: int = 0,
    target_sparsity: Optional[int] = None,
) -> DatasetBundle:
    """Parse a delimited file and fit the sparse logistic reference truth.

    Rows in error messages are 1-based data rows (the header is not counted).
    The penalty is chosen by cross-validation, or bisected for exactly
    ``target_sparsity`` nonzeros when that is given. The noise scale is
    sqrt(deviance / (n - nnz - 1)) of the fitted model.
    """
    transform = Transform(transform)
    path = Path(path)
    try:
        frame = pd.read_csv(path, sep=None, engine="python")
    except FileNotFoundError:
        raise IngestionError(f"dataset file not found: {path}") from None
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise IngestionError(f"could not parse {path}: {exc}") from exc

    if label_column not in frame.columns:
        raise IngestionError("label column not found", column=label_column)
    labels = _parse_labels(frame[label_column], label_column)
    feature_frame = frame.drop(columns=[label_column])
    if feature_frame.shape[1] == 0:
        raise IngestionError("dataset has no feature columns")
    values = _parse_features(feature_frame)

    if transform is Transform.LOG2:
        if np.any(values <= -1.0):
            row, col = np.argwhere(values <= -1.0)[0]
            raise IngestionError(
                "log2(1 + x) needs x > -1", row=int(row) + 1, column=str(feature_frame.columns[col])
            )
        values = np.log2(1.0 + values)

    features = standardize(values)
    if target_sparsity is None:
        fit = logistic_lasso_cv(features, labels, n_folds=n_folds, seed=seed)
    else:
        if not 1 <= target_sparsity <= features.shape[1]:
            raise IngestionError(f"target sparsity must lie in [1, {features.shape[1]}], got {target_sparsity}")
        fit = logistic_lasso_at_sparsity(features, labels, target_sparsity)
    nnz = int(np.count_nonzero(fit.coefficients))
    dof = max(features.shape[0] - nnz - 1, 1)
    noise_scale = math.sqrt(fit.deviance / dof)

    bundle = DatasetBundle(
        features=features,
        labels=labels,
        beta_ref=fit.coefficients,
        noise_scale=noise_scale,
        intercept=fit.intercept,
        penalty=fit.penalty,
        feature_names=tuple(str(c) for c in feature_frame.columns),
    )
    logger.success(
        "Ingested dataset",
        path=str(path),
        rows=bundle.n_samples,
        features=bundle.n_features,
        positives=int(labels.sum()),
        sparsity=bundle.sparsity,
        noise_scale=noise_scale,
    )
    return bundle


def generate_mimic(
    path: Union[str, Path],
    seed: int = 0,
    n_negative: int = 111,
    n_positive: int = 57,
    dim: int = 2905,
    sparsity: int = 18,
    effect: float = 0.8,
    label_column: str = "label",
) -> Path:
    """Write a synthetic expression table with a sparse class signal.

    Log-expression levels are N(6, 1); on ``sparsity`` genes the positive
    class is shifted by ``+-effect``. Raw values are written on the
    ``2^level - 1`` scale so that ingesting with the log2 transform recovers
    the levels.
    """
    if not 1 <= sparsity <= dim:
        raise IngestionError(f"sparsity must lie in [1, {dim}], got {sparsity}")
    rng = np.random.default_rng(seed)
    n_rows = n_negative + n_positive
    labels = np.zeros(n_rows, dtype=int)
    labels[rng.choice(n_rows, size=n_positive, replace=False)] = 1

    levels = 6.0 + rng.standard_normal((n_rows, dim))
    support = np.sort(rng.choice(dim, size=sparsity, replace=False))
    signs = rng.choice([-1.0, 1.0], size=sparsity)
    levels[:, support] += effect * np.outer(labels, signs)
    raw = np.exp2(levels) - 1.0

    columns: List[str] = [f"g{j:04d}" for j in range(dim)]
    frame = pd.DataFrame(raw, columns=columns)
    frame.insert(0, label_column, labels)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.10g")
    logger.info("Wrote synthetic expression table", path=str(path), rows=n_rows, features=dim, sparsity=sparsity)
    return path


def load_bundle(
    path: Union[str, Path],
    label_column: Optional[str] = None,
    transform: Union[Transform, str] = Transform.NONE,
    target_sparsity: Optional[int] = None,
) -> DatasetBundle:
    """Load a saved ``.npz`` bundle, or ingest a delimited file."""
    path = Path(path)
    if path.suffix == ".npz":
        return DatasetBundle.load(path)
    if label_column is None:
        raise IngestionError("a label column is needed to ingest a delimited file")
    return ingest_dataset(path, label_column, transform, target_sparsity=target_sparsity)
