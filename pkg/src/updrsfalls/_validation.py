"""Small input-validation helpers used by the estimators and core routines."""

import numpy as np

from .errors import DimensionMismatch, SingleClass


def as_matrix(X):
    """Coerce to a 2-D float64 array (n_samples, n_features)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D feature matrix, got ndim={X.ndim}")
    return X


def as_labels(y, n_rows=None):
    """Coerce to a 1-D 0/1 int64 label vector, optionally checking length."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D label vector, got ndim={y.ndim}")
    vals = np.unique(y)
    if not np.all(np.isin(vals, (0, 1))):
        raise ValueError(f"labels must be binary 0/1, got values {vals}")
    y = y.astype(np.int64)
    if n_rows is not None and y.shape[0] != n_rows:
        raise DimensionMismatch(
            f"label count {y.shape[0]} does not match row count {n_rows}")
    return y


def as_row(row, n_features):
    row = np.asarray(row, dtype=np.float64).ravel()
    if row.shape[0] != n_features:
        raise DimensionMismatch(
            f"row has {row.shape[0]} values, model expects {n_features}")
    return row


def check_both_classes(y):
    y = np.asarray(y)
    if y.min() == y.max():
        raise SingleClass("need both classes present")
    return y
