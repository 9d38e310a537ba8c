"""Choice of the group budget ``K`` and sparsity ``s`` by BIC or cross-validation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .numerics import Dataset
from .params import Budget, FusedParams
from .solver import InfeasibleError, SolveOptions, solve_exact

logger = logging.getLogger(__name__)

FitFn = Callable[[Dataset, Budget], FusedParams]


@dataclass
class TuneConfig:
    K_grid: list[int]
    s_grid: list[int]
    method: str = "bic"
    folds: int = 10
    seed: int = 0

    def __post_init__(self):
        self.K_grid = sorted({int(k) for k in self.K_grid})
        self.s_grid = sorted({int(s) for s in self.s_grid})
        if not self.K_grid or not self.s_grid:
            raise ValueError("grids must be nonempty")
        if self.method not in ("bic", "cv"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.folds < 2:
            raise ValueError("folds must be at least 2")


@dataclass
class TuneResult:
    K: int
    s: int
    # (K, s) -> score; inf marks an infeasible grid point
    scores: dict[tuple[int, int], float] = field(default_factory=dict)


def default_fit(opts: SolveOptions | None = None) -> FitFn:
    def fit(data: Dataset, budget: Budget) -> FusedParams:
        return solve_exact(data, budget, opts)[0]

    return fit


def rss_of(data: Dataset, fp: FusedParams) -> float:
    r = data.y - data.X @ fp.beta - data.Z @ fp.alpha
    return float(r @ r)


def bic(data: Dataset, fp: FusedParams) -> float:
    """``n log(RSS/n) + (distinct nonzero values + q) log n``.

    RSS is floored at ``1e-12 ||y||^2`` so exact fits compare by their
    penalty alone.
    """
    n = data.n
    floor = max(1e-12 * float(data.y @ data.y), 1e-300)
    rss = max(rss_of(data, fp), floor)
    df = fp.n_groups + data.q
    return n * math.log(rss / n) + df * math.log(n)


def fold_ids(n: int, folds: int, seed: int) -> np.ndarray:
    """Fold index per row: a seeded permutation cut into near-equal parts."""
    if folds > n:
        raise ValueError(f"{folds} folds need at least as many rows, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    ids = np.empty(n, dtype=np.int64)
    ids[perm] = np.arange(n) % folds
    return ids


def cv_score(data: Dataset, budget: Budget, fit: FitFn, ids: np.ndarray) -> float:
    errs = []
    for f in range(int(ids.max()) + 1):
        test = ids == f
        fp = fit(data.subset(~test), budget)
        resid = data.y[test] - data.X[test] @ fp.beta - data.Z[test] @ fp.alpha
        errs.append(float(np.mean(resid**2)))
    return float(np.mean(errs))


def tune(data: Dataset, cfg: TuneConfig, fit: FitFn | None = None) -> TuneResult:
    """Score every ``(K, s)`` on the grid and return the minimizer.

    Ties (within ``1e-9`` relative) are resolved toward the lexicographically smaller ``(K, s)``.
    Grid points with ``s > p`` or no feasible fit score ``inf``.
    """
    fit = fit or default_fit()
    ids = fold_ids(data.n, cfg.folds, cfg.seed) if cfg.method == "cv" else None
    scores: dict[tuple[int, int], float] = {}
    for K in cfg.K_grid:
        for s in cfg.s_grid:
            if s > data.p:
                scores[K, s] = math.inf
                continue
            budget = Budget(K, s)
            try:
                if cfg.method == "bic":
                    scores[K, s] = bic(data, fit(data, budget))
                else:
                    scores[K, s] = cv_score(data, budget, fit, ids)
            except InfeasibleError:
                scores[K, s] = math.inf
            logger.debug("tune K=%d s=%d score=%.6g", K, s, scores[K, s])
    low = min(scores.values())
    if not math.isfinite(low):
        raise InfeasibleError("no grid point admits a feasible fit")
    best = min(ks for ks, v in scores.items() if v <= low + 1e-9 * (1.0 + abs(low)))
    return TuneResult(best[0], best[1], scores)
