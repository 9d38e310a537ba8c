"""Discrete first-order (projected gradient) method for the fused least-squares problem.

Each step moves along the negative gradient of ``g(theta) = ||y - X beta - Z alpha||^2``
with step ``1/L`` and projects back onto the constrained set. For ``L`` above
the gradient Lipschitz constant the objective never increases.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .numerics import Dataset, lipschitz_bound
from .params import Budget, FusedParams
from .projection import ProjectionProblem, project

logger = logging.getLogger(__name__)

DEFAULT_L_FACTOR = 1.1


class ConfigurationError(ValueError):
    pass


@dataclass
class WarmStartConfig:
    """``L=None`` selects ``1.1 * lipschitz_bound``; ``eps=None`` selects
    ``1e-10 * (1 + g(theta0))``."""

    L: float | None = None
    eps: float | None = None
    max_iters: int = 10_000
    theta0: FusedParams | None = None

    def __post_init__(self):
        if self.L is not None and self.L <= 0:
            raise ConfigurationError("L must be positive")
        if self.eps is not None and self.eps < 0:
            raise ConfigurationError("eps must be nonnegative")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be positive")


@dataclass
class WarmStartTrace:
    objectives: list[float] = field(default_factory=list)
    rho: list[float] = field(default_factory=list)
    tau: list[float] = field(default_factory=list)
    step_norms: list[float] = field(default_factory=list)
    L: float = float("nan")
    lipschitz: float = float("nan")
    converged: bool = False

    @property
    def n_iter(self) -> int:
        return len(self.step_norms)


def objective(data: Dataset, theta: NDArray) -> float:
    r = data.y - data.W @ theta
    return float(r @ r)


def gradient(data: Dataset, theta: NDArray) -> NDArray:
    W = data.W
    return -2.0 * W.T @ (data.y - W @ theta)


def separation(beta: NDArray, K: int) -> tuple[float, float]:
    """Smallest gap between distinct nonzero values and smallest nonzero magnitude.

    The gap is reported only when exactly ``K`` distinct nonzero values are
    present (``inf`` if ``K == 1``), else 0; the magnitude is 0 when all
    entries vanish.
    """
    vals = np.unique(beta[beta != 0])
    if vals.size == 0:
        return 0.0, 0.0
    tau = float(np.min(np.abs(vals)))
    if vals.size != K:
        rho = 0.0
    elif vals.size == 1:
        rho = float("inf")
    else:
        rho = float(np.min(np.diff(vals)))
    return rho, tau


def _project_step(data: Dataset, budget: Budget, theta: NDArray, L: float) -> FusedParams:
    c = theta - gradient(data, theta) / L
    # projection expects the unpenalized part first
    c = np.concatenate([c[data.p :], c[: data.p]])
    return project(ProjectionProblem(c, data.q, budget))


def resolve_L(data: Dataset, L: float | None) -> tuple[float, float]:
    lip = lipschitz_bound(data)
    if L is None:
        return DEFAULT_L_FACTOR * lip, lip
    if L <= lip:
        raise ConfigurationError(
            f"step parameter L={L:.6g} must exceed the Lipschitz bound {lip:.6g}"
        )
    return float(L), lip


def warm_start(
    data: Dataset, budget: Budget, cfg: WarmStartConfig | None = None
) -> tuple[FusedParams, WarmStartTrace]:
    """Run projected gradient iterations from ``cfg.theta0`` (default all zeros).

    Stops when the objective decrease drops to ``eps`` or after ``max_iters``
    steps. Returns the last iterate and the per-iteration trace.
    """
    cfg = cfg or WarmStartConfig()
    budget.check(data.p)
    L, lip = resolve_L(data, cfg.L)
    fp = cfg.theta0 if cfg.theta0 is not None else FusedParams.zeros(data.p, data.q)
    if fp.p != data.p or fp.alpha.size != data.q:
        raise ConfigurationError("theta0 does not match the data dimensions")

    theta = fp.theta
    g = objective(data, theta)
    eps = 1e-10 * (1.0 + g) if cfg.eps is None else cfg.eps
    trace = WarmStartTrace(L=L, lipschitz=lip)
    trace.objectives.append(g)
    rho, tau = separation(theta[: data.p], budget.K)
    trace.rho.append(rho)
    trace.tau.append(tau)

    for _ in range(cfg.max_iters):
        fp_next = _project_step(data, budget, theta, L)
        theta_next = fp_next.theta
        g_next = objective(data, theta_next)
        trace.step_norms.append(float(np.linalg.norm(theta_next - theta)))
        trace.objectives.append(g_next)
        rho, tau = separation(theta_next[: data.p], budget.K)
        trace.rho.append(rho)
        trace.tau.append(tau)
        decrease = g - g_next
        fp, theta, g = fp_next, theta_next, g_next
        if decrease <= eps:
            trace.converged = True
            break
    logger.debug("warm start: %d iterations, objective %.6g", trace.n_iter, g)
    return fp, trace


def is_stationary(
    data: Dataset,
    budget: Budget,
    theta: FusedParams,
    L: float | None = None,
    rtol: float = 1e-4,
) -> bool:
    """Whether ``theta`` is reproduced by one projected gradient step.

    The grouping must be reproduced exactly and the coefficients up to
    ``rtol`` relative (group values are recomputed as means, so bitwise
    equality is not expected).
    """
    L, _ = resolve_L(data, L)
    if not theta.in_budget(budget):
        return False
    nxt = _project_step(data, budget, theta.theta, L)
    if not np.array_equal(nxt.labels, theta.labels):
        return False
    a, b = nxt.theta, theta.theta
    scale = 1.0 + float(np.max(np.abs(b))) if b.size else 1.0
    return bool(np.max(np.abs(a - b), initial=0.0) <= rtol * scale)
