"""CoSaMP feature screening.

Each iteration enlarges the current support with the coordinates of largest
absolute gradient, refits by least squares, keeps the largest refit
coefficients and refits again on the kept set.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .numerics import RCOND, Dataset, least_squares

logger = logging.getLogger(__name__)

SCREEN_CAP = 100


@dataclass
class ScreeningConfig:
    """Settings for :func:`cosamp`.

    Parameters
    ----------
    size : int
        Number of coordinates kept after each contraction.
    expand : int, optional
        Coordinates added per iteration; defaults to ``ceil(size / 2)``.
    tol : float, optional
        Stop once successive iterates differ by less than this in Euclidean
        norm; defaults to ``1e-6 * (1 + ||y||)``.
    max_iters : int
    beta0 : array_like, optional
        Starting coefficients (zero by default).
    """

    size: int
    expand: int | None = None
    tol: float | None = None
    max_iters: int = 200
    beta0: NDArray | None = None

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("size must be at least 1")
        if self.expand is None:
            self.expand = math.ceil(self.size / 2)
        if self.expand < 1:
            raise ValueError("expand must be at least 1")
        if self.tol is not None and self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")


@dataclass
class ScreeningResult:
    support: NDArray[np.int64]
    coef: NDArray[np.float64]
    iterations: int
    converged: bool


def top_indices(values: NDArray, m: int) -> NDArray[np.int64]:
    """Indices of the ``m`` largest entries; ties go to the lower index."""
    order = np.argsort(-values, kind="stable")
    return order[:m]


def _refit(X: NDArray, y: NDArray, idx: NDArray) -> NDArray:
    beta = np.zeros(X.shape[1])
    beta[idx] = least_squares(X[:, idx], y)
    return beta


def cosamp(X: ArrayLike, y: ArrayLike, cfg: ScreeningConfig) -> ScreeningResult:
    """Screen the columns of ``X`` for the response ``y``.

    Returns the kept index set of the last iteration (sorted, at most
    ``cfg.size`` entries) with the refit coefficients, which vanish off it.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.shape
    if y.size != n:
        raise ValueError("X and y row counts differ")
    if cfg.size > p:
        raise ValueError(f"size={cfg.size} exceeds p={p}")
    tol = 1e-6 * (1.0 + float(np.linalg.norm(y))) if cfg.tol is None else cfg.tol
    beta = np.zeros(p) if cfg.beta0 is None else np.asarray(cfg.beta0, dtype=float).copy()
    if beta.size != p:
        raise ValueError("beta0 has the wrong length")

    kept = np.sort(top_indices(np.abs(beta), cfg.size))
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        grad = -2.0 * X.T @ (y - X @ beta)
        expand = top_indices(np.abs(grad), min(cfg.expand, p))
        merged = np.union1d(np.flatnonzero(beta), expand)
        wide = _refit(X, y, merged)
        # top entries among the merged set, ties to the lower index
        kept = np.sort(merged[top_indices(np.abs(wide[merged]), min(cfg.size, merged.size))])
        new = _refit(X, y, kept)
        step = float(np.linalg.norm(new - beta))
        beta = new
        if step < tol:
            converged = True
            break
    logger.debug("cosamp: %d iterations, converged=%s", it, converged)
    return ScreeningResult(kept.astype(np.int64), beta, it, converged)


def residualize(data: Dataset) -> tuple[NDArray, NDArray]:
    """Project ``y`` and the columns of ``X`` onto the orthogonal complement of ``Z``."""
    if data.q == 0:
        return data.X, data.y
    U, sv, _ = np.linalg.svd(data.Z, full_matrices=False)
    Q = U[:, sv > RCOND * max(sv.max(initial=0.0), 1e-300)]
    X = data.X - Q @ (Q.T @ data.X)
    y = data.y - Q @ (Q.T @ data.y)
    return X, y


def screen_with_covariates(data: Dataset, cfg: ScreeningConfig) -> ScreeningResult:
    """CoSaMP on ``X`` and ``y`` after removing the span of the covariates ``Z``."""
    X, y = residualize(data)
    return cosamp(X, y, cfg)
