"""Acceptance criteria; each test prints one PASS/FAIL line."""

import time

import numpy as np
import pytest

from l0fusion import (
    Budget,
    Dataset,
    ProjectionProblem,
    SolveOptions,
    from_beta,
    grouping_sensitivity,
    is_stationary,
    nmi,
    oracle_ls,
    project,
    same_grouping,
    solve_exact,
    tpp,
    warm_start,
)
from l0fusion.experiments import SemiSimSettings, coefficients_match, semi_sim_replicate
from l0fusion.metrics import grouping_distance, grouping_distance_enumerated
from l0fusion.projection import project_bruteforce
from l0fusion.screening import ScreeningConfig, cosamp
from l0fusion.simgen import SimConfig, simulate, ultra_high, warm_study
from oracles import distance_by_maps, enumerate_optimum, groups_of, nmi_formula

pytestmark = pytest.mark.slow


def solver_instances():
    """Criterion 2's instances: n=30, p<=7, K<=2, sigma=0.5."""
    out = []
    for i in range(200):
        rng = np.random.default_rng([2024, i])
        p = int(rng.integers(2, 8))
        K = int(rng.integers(1, 3))
        s = int(rng.integers(1, p + 1))
        X = rng.standard_normal((30, p))
        beta = rng.choice([-1.5, 0.0, 1.0], size=p)
        y = X @ beta + 0.5 * rng.standard_normal(30)
        out.append((Dataset(y, X), Budget(K, s)))
    return out


def test_projection_matches_bruteforce(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(500):
        rng = np.random.default_rng([1, i])
        p = int(rng.integers(1, 9))
        K = int(rng.integers(1, 4))
        q = int(rng.integers(0, 3))
        s = int(rng.integers(0, p + 1))
        c = rng.normal(0, 3, q + p)
        prob = ProjectionProblem(c, q, Budget(K, s))
        d_dp = prob.distance(project(prob))
        d_bf = prob.distance(project_bruteforce(prob))
        worst = max(worst, abs(d_dp - d_bf))
    elapsed = time.perf_counter() - t0
    criterion(
        "1 projection vs brute force",
        worst <= 1e-9 and elapsed < 30,
        f"500 instances, max |diff| {worst:.2e}, {elapsed:.1f}s",
    )


def test_exact_solver_matches_enumeration(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    not_optimal = 0
    for data, budget in solver_instances():
        _, rep = solve_exact(data, budget, SolveOptions(gap_tol=0.0))
        not_optimal += rep.termination != "optimal"
        best = enumerate_optimum(data.y, data.X, data.Z, budget.K, budget.s)
        worst = max(worst, abs(rep.incumbent_objective - best) / max(abs(best), 1e-300))
    elapsed = time.perf_counter() - t0
    criterion(
        "2 exact solver vs enumeration",
        worst <= 1e-8 and not_optimal == 0 and elapsed < 300,
        f"200 instances, max rel diff {worst:.2e}, {not_optimal} not optimal, {elapsed:.1f}s",
    )


def test_warm_start_contracts(criterion):
    failures = []
    for i, (data, budget) in enumerate(solver_instances()):
        fp, tr = warm_start(data, budget)
        g = np.array(tr.objectives)
        d2 = np.array(tr.step_norms) ** 2
        tol = 1e-7 * (1.0 + g[0])
        gap = tr.L - tr.lipschitz
        ok = bool(np.all(np.diff(g) <= tol))
        ok &= bool(np.all(g[:-1] - g[1:] >= gap / 2 * d2 - tol))
        cum = np.cumsum(d2)
        M = np.arange(1, d2.size + 1)
        ok &= bool(np.all(cum <= 2 * (g[0] - g[1:]) / gap + tol))
        ok &= bool(np.all(np.minimum.accumulate(d2) <= 2 * (g[0] - g[1:]) / (M * gap) + tol))
        ok &= fp.in_budget(budget)
        ok &= is_stationary(data, budget, fp, L=tr.L)
        if not ok:
            failures.append(i)
    criterion(
        "3 warm start contracts",
        not failures,
        f"200 runs, failing instances {failures[:10]}",
    )


def reconstruction_rate(sigma, reps=30):
    hits = 0
    for rep in range(reps):
        cfg = SimConfig(100, 12, (4, 4, 4), (-1.0, 0.5, 1.5), sigma=sigma, seed=500 + rep)
        data = simulate(cfg)
        truth = from_beta(cfg.beta)
        fp, _ = solve_exact(data, Budget(3, 12), SolveOptions(gap_tol=0.0))
        ref = oracle_ls(data, truth.grouping())
        hits += same_grouping(fp.beta, cfg.beta) and coefficients_match(fp, ref, 1e-8)
    return hits / reps


def test_oracle_reconstruction(criterion):
    t0 = time.perf_counter()
    base = reconstruction_rate(0.3)
    noisy = reconstruction_rate(0.6)
    elapsed = time.perf_counter() - t0
    criterion(
        "4 oracle reconstruction",
        base >= 0.9 and noisy <= base and elapsed < 600,
        f"rate {base:.2f} at sigma=0.3, {noisy:.2f} at sigma=0.6, {elapsed:.1f}s",
    )


def screening_tpp(r, reps=50):
    out = []
    for rep in range(reps):
        cfg = ultra_high(r=r, seed=900 + rep)
        data = simulate(cfg)
        res = cosamp(data.X, data.y, ScreeningConfig(20, expand=10))
        out.append(tpp(res.support, np.flatnonzero(cfg.beta)))
    return np.array(out)


def test_screening_reproduction(criterion):
    t0 = time.perf_counter()
    strong = screening_tpp(0.3)
    weak = screening_tpp(0.15)
    elapsed = time.perf_counter() - t0
    full = float(np.mean(strong == 1.0))
    criterion(
        "5 CoSaMP screening",
        full >= 0.9 and np.median(weak) < np.median(strong) and elapsed < 300,
        f"TPP=1 in {full:.0%} at r=0.3 (median {np.median(strong):.2f}); "
        f"median {np.median(weak):.2f} at r=0.15; {elapsed:.1f}s",
    )


def test_metrics_ground_truth(criterion):
    identical = nmi([[0, 1], [2, 3, 4]], [[2, 3, 4], [0, 1]])
    p4 = nmi([[0, 1], [2, 3]], [[0, 1, 2], [3]])
    p4_ref = nmi_formula([0, 0, 1, 1], [0, 0, 0, 1])
    rng = np.random.default_rng(77)
    mismatches = 0
    for _ in range(1000):
        p = int(rng.integers(1, 13))
        a = rng.integers(0, 6, p).astype(float)
        b = rng.integers(0, 6, p).astype(float)
        ref = distance_by_maps(groups_of(a), groups_of(b))
        mismatches += grouping_distance(a, b) != ref
        mismatches += grouping_distance_enumerated(a, b) != ref
    cmin = grouping_sensitivity(Dataset(np.zeros(2), np.sqrt(2) * np.eye(2)), from_beta([1.0, 2.0]))
    ok = identical == 1.0 and abs(p4 - 0.3438) <= 1e-4 and abs(p4 - p4_ref) <= 1e-6
    ok &= mismatches == 0 and abs(cmin - 0.5) <= 1e-10
    criterion(
        "6 metrics ground truth",
        ok,
        f"nmi identical {identical}, p=4 example {p4:.7f}, "
        f"{mismatches} distance mismatches in 1000 pairs, c_min {cmin:.12f}",
    )


def test_warm_vs_cold(criterion):
    obj_wins = gap_wins = 0
    reps = 20
    for rep in range(reps):
        data = simulate(warm_study(p=30, seed=300 + rep))
        budget = Budget(4, 30)
        _, warm = solve_exact(data, budget, SolveOptions(use_warm_start=True, gap_tol=0.0, time_limit=5.0))
        _, cold = solve_exact(data, budget, SolveOptions(use_warm_start=False, gap_tol=0.0, time_limit=5.0))
        obj_wins += warm.incumbent_objective <= cold.incumbent_objective * (1 + 1e-12)
        gap_wins += warm.mip_gap <= cold.mip_gap + 1e-12
    criterion(
        "7 warm vs cold start",
        obj_wins >= 0.8 * reps and gap_wins >= 0.8 * reps,
        f"incumbent no worse in {obj_wins}/{reps}, gap no worse in {gap_wins}/{reps}",
    )


def test_semi_simulation(criterion):
    cfg = SemiSimSettings()
    rows = [semi_sim_replicate((cfg, seed)) for seed in range(30)]
    wins = sum(r["mse_grouped"] <= r["mse_unfused"] for r in rows)
    g = np.median([r["mse_grouped"] for r in rows])
    u = np.median([r["mse_unfused"] for r in rows])
    criterion(
        "8 semi-simulation",
        wins >= 24,
        f"grouped MSE <= unfused in {wins}/30 (medians {g:.3f} vs {u:.3f})",
    )
