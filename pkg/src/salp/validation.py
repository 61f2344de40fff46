"""Input validation helpers used by the estimators and file loaders."""

from __future__ import annotations

import numpy as np

from .errors import DataFormatError


def check_features(X, *, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array and verify every value is finite.

    Non-finite entries are reported with their row index so a bad sample can
    be traced back to the source file.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise DataFormatError(f"{name} must be a 2-D matrix, got ndim={X.ndim}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise DataFormatError(f"{name} must have at least one row and one column")
    finite_rows = np.isfinite(X).all(axis=1)
    if not finite_rows.all():
        row = int(np.flatnonzero(~finite_rows)[0])
        raise DataFormatError(f"{name} has a non-finite value at row {row}")
    return X


def check_labels(y, n_classes: int | None = None, *, name: str = "labels") -> np.ndarray:
    """Coerce to a 1-D int array; values must be >= 0 (or -1 for unlabeled)."""
    y = np.asarray(y, dtype=np.int64).ravel()
    if y.size and y.min() < -1:
        raise DataFormatError(f"{name} contains values below -1")
    if n_classes is not None and y.size and y.max() >= n_classes:
        bad = int(np.flatnonzero(y >= n_classes)[0])
        raise DataFormatError(
            f"{name}[{bad}] = {int(y[bad])} is outside the declared {n_classes} classes"
        )
    return y


def check_matching_lengths(a, b, *, names: tuple[str, str] = ("truth", "pred")) -> None:
    if len(a) != len(b):
        raise ValueError(f"{names[0]} and {names[1]} lengths differ: {len(a)} vs {len(b)}")
