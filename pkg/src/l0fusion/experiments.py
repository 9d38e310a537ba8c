"""Monte Carlo studies and the screen-then-fuse pipeline."""

from __future__ import annotations

import dataclasses
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping

import numpy as np

from .metrics import nmi, nmi_with_zero_group, oracle_ls, same_grouping, tpp
from .numerics import Dataset, least_squares
from .params import Budget, FusedParams, from_beta
from .screening import SCREEN_CAP, ScreeningConfig, screen_with_covariates
from .simgen import PRESETS, SimConfig, ar1_rows, make_beta, simulate
from .solver import SolveOptions, solve_exact
from .tuning import TuneConfig, default_fit, tune

logger = logging.getLogger(__name__)

THREADS_ENV = "L0FUSE_THREADS"


def worker_count(requested: int | None = None) -> int:
    """Pool size: ``requested`` or the CPU count, capped by ``$L0FUSE_THREADS``."""
    n = requested or os.cpu_count() or 1
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            n = min(n, max(int(cap), 1))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {cap!r}") from None
    return max(n, 1)


def run_pool(fn: Callable, items: Iterable, workers: int) -> list:
    """Map ``fn`` over ``items``; results keep the input order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


@dataclass
class SimSettings:
    """Everything needed to reproduce a simulation study.

    ``K`` and ``s`` default to the true number of groups and nonzeros;
    ``screen = 0`` fits on all features, otherwise CoSaMP keeps that many.
    """

    preset: str = "equal"
    reps: int = 1
    seed: int = 0
    rho: float = 0.0
    signal_r: float = 0.8
    sigma: float = 1.0
    n: int | None = None
    p: int | None = None
    K: int | None = None
    s: int | None = None
    screen: int = 0
    gap_tol: float = 1e-4
    time_limit: float | None = 10.0
    warm_start: bool = True
    workers: int | None = None

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}")
        if self.reps < 1:
            raise ValueError("reps must be positive")
        if self.screen < 0:
            raise ValueError("screen must be nonnegative")

    def sim_config(self, rep: int) -> SimConfig:
        seed = self.seed + rep
        make = PRESETS[self.preset]
        kwargs: dict[str, Any] = {"r": self.signal_r, "seed": seed}
        if self.preset != "ultra":
            kwargs["rho"] = self.rho
        # presets that derive their groups from the dimensions take them directly
        sized = {"ultra": ("p",), "warm": ("n", "p")}.get(self.preset, ())
        for name in sized:
            if getattr(self, name) is not None:
                kwargs[name] = getattr(self, name)
        cfg = make(**kwargs)
        updates: dict[str, Any] = {"sigma": self.sigma}
        for name in ("n", "p"):
            if getattr(self, name) is not None and name not in sized:
                updates[name] = getattr(self, name)
        return dataclasses.replace(cfg, **updates)

    def echo(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


RECORD_FIELDS = [
    "rep", "seed", "preset", "n", "p", "rho", "signal_r", "sigma", "K", "s",
    "screen", "screen_size", "tpp", "nmi", "nmi_zero", "objective", "mip_gap",
    "termination", "oracle_match", "t_screen", "t_fit", "t_total",
]


def nmi_on_support(beta_hat: np.ndarray, beta_true: np.ndarray) -> float:
    """NMI of the two partitions of the true support.

    Estimated zeros on the true support form one extra cluster.
    """
    support = np.flatnonzero(beta_true)
    if support.size == 0:
        return float("nan")

    def parts(beta):
        b = beta[support]
        out = [list(np.flatnonzero(b == v)) for v in np.unique(b[b != 0])]
        zeros = list(np.flatnonzero(b == 0))
        return out + ([zeros] if zeros else [])

    return nmi(parts(beta_hat), parts(beta_true))


def coefficients_match(fit: FusedParams, ref: FusedParams, tol: float = 1e-8) -> bool:
    a, b = fit.theta, ref.theta
    return bool(np.max(np.abs(a - b), initial=0.0) <= tol * (1.0 + np.max(np.abs(b), initial=0.0)))


def run_replicate(args: tuple[SimSettings, int]) -> dict[str, Any]:
    settings, rep = args
    t0 = time.perf_counter()
    cfg = settings.sim_config(rep)
    data = simulate(cfg)
    beta_true = cfg.beta
    truth = from_beta(beta_true, np.zeros(data.q) if cfg.alpha is None else cfg.alpha)
    K = settings.K or max(truth.n_groups, 1)
    s = settings.s if settings.s is not None else truth.n_nonzero

    t1 = time.perf_counter()
    if settings.screen:
        res = screen_with_covariates(data, ScreeningConfig(min(settings.screen, data.p)))
        keep = res.support
    else:
        keep = np.arange(data.p)
    t_screen = time.perf_counter() - t1

    t2 = time.perf_counter()
    sub = data.subset(features=keep)
    fp_sub, report = solve_exact(
        sub,
        Budget(K, min(s, sub.p)),
        SolveOptions(
            use_warm_start=settings.warm_start,
            gap_tol=settings.gap_tol,
            time_limit=settings.time_limit,
        ),
    )
    t_fit = time.perf_counter() - t2
    beta = np.zeros(data.p)
    beta[keep] = fp_sub.beta
    fp = from_beta(beta, fp_sub.alpha)

    oracle = oracle_ls(data, truth.grouping())
    match = same_grouping(fp.beta, beta_true) and coefficients_match(fp, oracle)
    return {
        "rep": rep,
        "seed": cfg.seed,
        "preset": settings.preset,
        "n": cfg.n,
        "p": cfg.p,
        "rho": cfg.rho,
        "signal_r": settings.signal_r,
        "sigma": cfg.sigma,
        "K": K,
        "s": s,
        "screen": settings.screen,
        "screen_size": int(keep.size),
        "tpp": tpp(keep, np.flatnonzero(beta_true)) if np.any(beta_true) else None,
        "nmi": nmi_on_support(fp.beta, beta_true),
        "nmi_zero": nmi_with_zero_group(fp.beta, beta_true),
        "objective": report.incumbent_objective,
        "mip_gap": report.mip_gap,
        "termination": report.termination,
        "oracle_match": match,
        "t_screen": t_screen,
        "t_fit": t_fit,
        "t_total": time.perf_counter() - t0,
    }


SUMMARY_COLUMNS = ["tpp", "nmi", "nmi_zero", "objective", "mip_gap", "t_total"]


def summarize(records: list[Mapping[str, Any]]) -> list[dict[str, Any]]:
    """Quartile rows (q1, median, q3) of the numeric columns."""
    rows = []
    for label, q in (("q1", 25), ("median", 50), ("q3", 75)):
        row: dict[str, Any] = {"rep": label}
        for col in SUMMARY_COLUMNS:
            vals = np.array(
                [r[col] for r in records if r.get(col) is not None], dtype=float
            )
            vals = vals[np.isfinite(vals)]
            row[col] = float(np.percentile(vals, q)) if vals.size else None
        row["oracle_match"] = float(np.mean([bool(r["oracle_match"]) for r in records]))
        rows.append(row)
    return rows


def run_study(settings: SimSettings) -> list[dict[str, Any]]:
    workers = worker_count(settings.workers)
    return run_pool(run_replicate, [(settings, r) for r in range(settings.reps)], workers)


@dataclass
class PipelineResult:
    """Outcome of screening followed by fusion on the kept features."""

    params: FusedParams
    support: np.ndarray
    K: int
    s: int
    scores: dict = field(default_factory=dict)
    groups: list[dict[str, Any]] = field(default_factory=list)
    report: Any = None
    metrics: dict[str, Any] = field(default_factory=dict)


def describe_groups(fp: FusedParams) -> list[dict[str, Any]]:
    """Per-group value, size and size-weighted effect, largest groups first."""
    out = []
    for k, value in enumerate(fp.gamma, start=1):
        members = np.flatnonzero(fp.labels == k)
        out.append(
            {
                "value": float(value),
                "size": int(members.size),
                "effect": float(value) * members.size,
                "features": members.tolist(),
            }
        )
    out.sort(key=lambda g: (-g["size"], g["features"][0]))
    return out


def run_pipeline(
    data: Dataset,
    s_hat: int,
    K_grid: Iterable[int],
    method: str = "bic",
    folds: int = 10,
    seed: int = 0,
    gap_tol: float = 1e-4,
    time_limit: float | None = None,
    beta_true: np.ndarray | None = None,
) -> PipelineResult:
    """Screen to ``s_hat`` features (capped at 100), then tune ``K`` and fuse.

    The covariates ``Z`` are always kept. Every screened feature may stay
    nonzero, so only ``K`` is tuned.
    """
    s_hat = min(int(s_hat), SCREEN_CAP, data.p)
    if s_hat < 1:
        raise ValueError("s_hat must be positive")
    if s_hat < data.p:
        support = screen_with_covariates(data, ScreeningConfig(s_hat)).support
    else:
        support = np.arange(data.p)
    sub = data.subset(features=support)
    opts = SolveOptions(gap_tol=gap_tol, time_limit=time_limit)
    K_grid = [k for k in K_grid if k <= sub.p] or [1]
    tuned = tune(sub, TuneConfig(K_grid, [sub.p], method, folds, seed), default_fit(opts))
    fp_sub, report = solve_exact(sub, Budget(tuned.K, sub.p), opts)
    beta = np.zeros(data.p)
    beta[support] = fp_sub.beta
    fp = from_beta(beta, fp_sub.alpha)

    metrics: dict[str, Any] = {}
    if beta_true is not None:
        s0 = np.flatnonzero(beta_true)
        metrics = {
            "tpp": tpp(support, s0) if s0.size else None,
            "nmi_zero": nmi_with_zero_group(fp.beta, beta_true),
            "nmi": nmi_on_support(fp.beta, beta_true),
            "same_grouping": same_grouping(fp.beta, beta_true),
        }
    return PipelineResult(
        fp, support, tuned.K, sub.p, tuned.scores, describe_groups(fp), report, metrics
    )


def unfused_fit(data: Dataset, support: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ordinary least squares on the kept features and ``Z``; returns ``(beta, alpha)``."""
    A = np.hstack([data.X[:, support], data.Z])
    coef = least_squares(A, data.y)
    beta = np.zeros(data.p)
    beta[support] = coef[: support.size]
    return beta, coef[support.size :]


@dataclass
class SemiSimSettings:
    """Stand-in for a metabolomics design: correlated standardized features,
    an intercept, a standardized age covariate and a 0/1 sex covariate."""

    n: int = 397
    p: int = 234
    rho: float = 0.5
    signal_r: float = 1.0
    group_size: int = 5
    alpha_age: float = 0.5
    alpha_sex: float = 1.0
    sigma: float = 1.0
    train_fraction: float = 0.75
    s_hat: int = 20
    K_grid: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    time_limit: float | None = 2.0


def semi_sim_data(cfg: SemiSimSettings, seed: int) -> tuple[Dataset, np.ndarray]:
    rng = np.random.default_rng([seed, 7])
    X = ar1_rows(rng, cfg.n, cfg.p, cfg.rho)
    X = (X - X.mean(axis=0)) / X.std(axis=0)
    age = rng.uniform(8, 18, cfg.n)
    age = (age - age.mean()) / age.std()
    sex = rng.integers(0, 2, cfg.n).astype(float)
    Z = np.column_stack([np.ones(cfg.n), age, sex])
    r = cfg.signal_r
    beta = np.zeros(cfg.p)
    idx = rng.permutation(cfg.p)[: 4 * cfg.group_size]
    beta[idx] = make_beta(4 * cfg.group_size, (cfg.group_size,) * 4, (-2 * r, -r, r, 2 * r))
    y = X @ beta + cfg.alpha_age * age + cfg.alpha_sex * sex + cfg.sigma * rng.standard_normal(cfg.n)
    return Dataset(y, X, Z), beta


def semi_sim_replicate(args: tuple[SemiSimSettings, int]) -> dict[str, Any]:
    """Held-out MSE of screen-then-fuse versus screen-then-OLS on one split."""
    cfg, seed = args
    data, beta_true = semi_sim_data(cfg, seed)
    rng = np.random.default_rng([seed, 11])
    perm = rng.permutation(data.n)
    n_train = int(round(cfg.train_fraction * data.n))
    train, test = perm[:n_train], perm[n_train:]
    tr, te = data.subset(rows=train), data.subset(rows=test)

    res = run_pipeline(
        tr, cfg.s_hat, cfg.K_grid, time_limit=cfg.time_limit, beta_true=beta_true
    )
    fp = res.params
    mse_grouped = float(np.mean((te.y - te.X @ fp.beta - te.Z @ fp.alpha) ** 2))
    b_ols, a_ols = unfused_fit(tr, res.support)
    mse_unfused = float(np.mean((te.y - te.X @ b_ols - te.Z @ a_ols) ** 2))
    return {
        "seed": seed,
        "K": res.K,
        "mse_grouped": mse_grouped,
        "mse_unfused": mse_unfused,
        "tpp": res.metrics["tpp"],
        "nmi_zero": res.metrics["nmi_zero"],
    }
