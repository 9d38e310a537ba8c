"""Seeded generators for simulated regression studies."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .numerics import Dataset


@dataclass
class SimConfig:
    """Simulation design with grouped coefficients.

    Parameters
    ----------
    n, p, q : int
        Samples, fused features and unpenalized covariates.
    rho : float
        Correlation between neighbouring features; feature ``i`` and ``j``
        have correlation ``rho**|i-j|``.
    group_sizes, group_values : sequence
        Consecutive blocks of the coefficient vector, one value per block;
        the remaining coefficients are zero.
    sigma : float
        Noise standard deviation.
    seed : int
    alpha : array_like, optional
        Covariate coefficients; zeros if omitted.
    """

    n: int
    p: int
    group_sizes: tuple[int, ...]
    group_values: tuple[float, ...]
    q: int = 0
    rho: float = 0.0
    sigma: float = 1.0
    seed: int = 0
    alpha: tuple[float, ...] | None = field(default=None)

    def __post_init__(self):
        self.group_sizes = tuple(int(g) for g in self.group_sizes)
        self.group_values = tuple(float(v) for v in self.group_values)
        if self.n < 1 or self.p < 1 or self.q < 0:
            raise ValueError("need n >= 1, p >= 1, q >= 0")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")
        if len(self.group_sizes) != len(self.group_values):
            raise ValueError("group_sizes and group_values differ in length")
        if any(g < 1 for g in self.group_sizes) or sum(self.group_sizes) > self.p:
            raise ValueError("group sizes must be positive and sum to at most p")
        if any(v == 0 for v in self.group_values):
            raise ValueError("group values must be nonzero")
        if len(set(self.group_values)) != len(self.group_values):
            raise ValueError("group values must be distinct")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.alpha is not None:
            self.alpha = tuple(float(a) for a in self.alpha)
            if len(self.alpha) != self.q:
                raise ValueError("alpha must have q entries")

    @property
    def beta(self) -> NDArray[np.float64]:
        return make_beta(self.p, self.group_sizes, self.group_values)


def ar1_rows(rng: np.random.Generator, n: int, p: int, rho: float) -> NDArray[np.float64]:
    xi = rng.standard_normal((n, p))
    if rho == 0.0:
        return xi
    X = np.empty((n, p))
    X[:, 0] = xi[:, 0]
    scale = np.sqrt(1.0 - rho**2)
    for j in range(1, p):
        X[:, j] = rho * X[:, j - 1] + scale * xi[:, j]
    return X


def gen_design(cfg: SimConfig) -> NDArray[np.float64]:
    """Gaussian design whose rows have AR(1) correlation ``rho``."""
    return ar1_rows(np.random.default_rng(cfg.seed), cfg.n, cfg.p, cfg.rho)


def make_beta(p: int, group_sizes, group_values) -> NDArray[np.float64]:
    """Blockwise coefficient vector, e.g. sizes (2, 2), values (-1, 1), p=5 -> (-1, -1, 1, 1, 0)."""
    sizes = [int(g) for g in group_sizes]
    if sum(sizes) > p:
        raise ValueError("group sizes exceed p")
    beta = np.zeros(p)
    beta[: sum(sizes)] = np.repeat(np.asarray(group_values, dtype=float), sizes)
    return beta


def gen_response(
    X: ArrayLike,
    Z: ArrayLike | None,
    beta: ArrayLike,
    alpha: ArrayLike | None,
    sigma: float,
    seed: int,
) -> NDArray[np.float64]:
    X = np.asarray(X, dtype=float)
    y = X @ np.asarray(beta, dtype=float)
    if Z is not None and np.size(Z):
        y = y + np.asarray(Z, dtype=float) @ np.asarray(alpha, dtype=float)
    rng = np.random.default_rng(seed)
    return y + sigma * rng.standard_normal(X.shape[0])


def simulate(cfg: SimConfig) -> Dataset:
    """Design, covariates and response for one replicate.

    Covariates (when ``q > 0``) are an intercept followed by standard
    normal columns. The response uses a seed stream separate from the design.
    """
    rng = np.random.default_rng([cfg.seed, 1])
    X = gen_design(cfg)
    Z = np.zeros((cfg.n, 0))
    if cfg.q:
        Z = np.column_stack([np.ones(cfg.n), rng.standard_normal((cfg.n, cfg.q - 1))])
    alpha = np.zeros(cfg.q) if cfg.alpha is None else np.asarray(cfg.alpha)
    y = gen_response(X, Z, cfg.beta, alpha, cfg.sigma, int(rng.integers(2**63)))
    return Dataset(y, X, Z)


def equal_groups(r: float = 0.8, rho: float = 0.0, seed: int = 0) -> SimConfig:
    """Four groups of 20 with values -2r, -r, r, 2r; n=120, p=80."""
    return SimConfig(120, 80, (20,) * 4, (-2 * r, -r, r, 2 * r), rho=rho, seed=seed)


def unequal_groups(r: float = 0.8, rho: float = 0.0, seed: int = 0) -> SimConfig:
    """Groups of sizes 1, 20, 20, 39 with values -4r, -r, r, 2r; n=120, p=80."""
    return SimConfig(120, 80, (1, 20, 20, 39), (-4 * r, -r, r, 2 * r), rho=rho, seed=seed)


def ultra_high(r: float = 0.3, p: int = 2000, group_size: int = 5, seed: int = 0) -> SimConfig:
    """Independent design with four groups of values -2r, -r, r, 2r on the first features.

    ``n = floor(2 s0 log p)`` with ``s0 = 4 * group_size``.
    """
    s0 = 4 * group_size
    n = int(np.floor(2 * s0 * np.log(p)))
    return SimConfig(n, p, (group_size,) * 4, (-2 * r, -r, r, 2 * r), seed=seed)


def warm_study(r: float = 0.5, rho: float = 0.0, seed: int = 0, n: int = 250, p: int = 120) -> SimConfig:
    """All features nonzero in four near-equal groups with values -2r, -r, r, 2r.

    The default ``r = 0.5`` gives values -1, -0.5, 0.5, 1.
    """
    sizes = tuple(len(c) for c in np.array_split(np.arange(p), 4))
    return SimConfig(n, p, sizes, (-2 * r, -r, r, 2 * r), rho=rho, seed=seed)


PRESETS = {
    "equal": equal_groups,
    "unequal": unequal_groups,
    "ultra": ultra_high,
    "warm": warm_study,
}
