"""Input checks shared by the estimators and the command line."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array, check_X_y

from .numerics import Dataset
from .params import Budget


def check_design(X, y, Z=None) -> Dataset:
    """Validate ``X``, ``y`` and optional ``Z`` and bundle them."""
    X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
    if Z is None:
        Z = np.zeros((X.shape[0], 0))
    else:
        Z = check_array(Z, dtype=np.float64, ensure_2d=False, ensure_min_features=0)
        if Z.ndim == 1:
            Z = Z[:, None]
        if Z.shape[0] != X.shape[0]:
            raise ValueError(f"Z has {Z.shape[0]} rows, X has {X.shape[0]}")
    return Dataset(y, X, Z)


def check_covariates(Z, n: int, q: int) -> np.ndarray:
    if Z is None:
        if q:
            raise ValueError(f"model was fitted with {q} covariates; pass Z")
        return np.zeros((n, 0))
    Z = check_array(Z, dtype=np.float64, ensure_2d=False, ensure_min_features=0)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.shape != (n, q):
        raise ValueError(f"Z must have shape ({n}, {q}), got {Z.shape}")
    return Z


def check_budget(n_groups, sparsity, p: int) -> Budget:
    """Resolve ``sparsity=None`` to ``p`` and validate the pair."""
    s = p if sparsity is None else sparsity
    return Budget(n_groups, s).check(p)
