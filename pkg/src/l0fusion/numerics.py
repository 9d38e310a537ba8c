"""Dense linear-algebra primitives shared by the solvers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

# relative singular-value cutoff used for rank detection
RCOND = 1e-10
LIPSCHITZ_FLOOR = 1e-12


@dataclass(frozen=True)
class Dataset:
    """Response ``y``, fused/sparse features ``X`` and always-kept covariates ``Z``.

    ``Z`` may have zero columns. Arrays are copied to float64 and validated on
    construction.
    """

    y: NDArray[np.float64]
    X: NDArray[np.float64]
    Z: NDArray[np.float64] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            raise ValueError(f"X must be 2-D, got shape {X.shape}")
        n, p = X.shape
        Z = self.Z
        if Z is None:
            Z = np.zeros((n, 0))
        Z = np.asarray(Z, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        if n < 1 or p < 1:
            raise ValueError("need n >= 1 and p >= 1")
        if y.shape[0] != n or Z.shape[0] != n:
            raise ValueError(
                f"row mismatch: len(y)={y.shape[0]}, X has {n} rows, Z has {Z.shape[0]}"
            )
        for name, arr in (("y", y), ("X", X), ("Z", Z)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Z", Z)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def q(self) -> int:
        return self.Z.shape[1]

    @property
    def W(self) -> NDArray[np.float64]:
        """Full design ``[X Z]``."""
        return np.hstack([self.X, self.Z])

    def subset(self, rows=None, features=None) -> "Dataset":
        rows = slice(None) if rows is None else rows
        X = self.X[rows]
        if features is not None:
            X = X[:, features]
        return Dataset(self.y[rows], X, self.Z[rows])


def least_squares(A: ArrayLike, y: ArrayLike) -> NDArray[np.float64]:
    """Minimum-norm minimizer of ``||y - A b||^2``.

    Rank deficiency is resolved by discarding singular values below
    ``RCOND`` times the largest one, which yields the pseudo-inverse solution.
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.shape[1] == 0:
        return np.zeros(0)
    b, *_ = np.linalg.lstsq(A, y, rcond=RCOND)
    return b


def rss(A: ArrayLike, y: ArrayLike) -> tuple[float, NDArray[np.float64]]:
    """Residual sum of squares of the least-squares fit and its coefficients."""
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    b = least_squares(A, y)
    r = y - A @ b if b.size else y
    return float(r @ r), b


def _power_start(m: int) -> NDArray[np.float64]:
    v = np.ones(m) + 0.1 * np.cos(np.arange(1, m + 1) * 0.7548776662466927)
    return v / np.linalg.norm(v)


def lipschitz_bound(data: Dataset, tol: float = 1e-12, max_iter: int = 20000) -> float:
    """Upper estimate of the gradient Lipschitz constant ``2 lambda_max(W^T W)``.

    Power iteration from a fixed start vector; the converged Rayleigh quotient
    is inflated by ``1e-6`` relative so the returned value is not below the
    true constant. Falls back to a dense eigensolver on the smaller Gram
    matrix if the iteration does not settle.
    """
    W = data.W
    if not np.any(W):
        return LIPSCHITZ_FLOOR
    v = _power_start(W.shape[1])
    lam = 0.0
    converged = False
    for _ in range(max_iter):
        u = W.T @ (W @ v)
        lam_new = float(v @ u)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            break
        v = u / nu
        if abs(lam_new - lam) <= tol * lam_new:
            lam = lam_new
            converged = True
            break
        lam = lam_new
    if not converged:
        G = W @ W.T if W.shape[0] < W.shape[1] else W.T @ W
        lam = float(np.linalg.eigvalsh(G)[-1])
    return max(2.0 * lam * (1.0 + 1e-6), LIPSCHITZ_FLOOR)
