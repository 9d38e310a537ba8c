import re
import shutil
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from l0fusion import (
    Budget,
    Dataset,
    InfeasibleError,
    SolveOptions,
    export_mio,
    grouping_of,
    score_assignment,
    solve_exact,
)
from l0fusion.solver import OPTIMAL, NODE_LIMIT, default_big_m, mip_gap
from conftest import random_data
from oracles import canonical_patterns, collapsed_rss, enumerate_optimum

EXACT = SolveOptions(gap_tol=0.0)


def test_perfect_fusion():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(20)
    X = np.column_stack([x, x])
    data = Dataset(3 * (X[:, 0] + X[:, 1]), X)
    fp, rep = solve_exact(data, Budget(1, 2), EXACT)
    np.testing.assert_allclose(fp.beta, [3, 3])
    assert rep.incumbent_objective <= 1e-20 and rep.termination == OPTIMAL


def test_noiseless_recovery():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((30, 6))
    beta = np.array([-1, -1, 2, 2, 0, 0.0])
    fp, rep = solve_exact(Dataset(X @ beta, X), Budget(2, 4), EXACT)
    assert grouping_of(fp.beta) == grouping_of(beta)
    assert rep.incumbent_objective <= 1e-18


def test_random_instance_matches_enumeration():
    data = random_data(2, n=30, p=6)
    fp, rep = solve_exact(data, Budget(2, 4), EXACT)
    best = enumerate_optimum(data.y, data.X, data.Z, 2, 4)
    assert rep.incumbent_objective == pytest.approx(best, rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 2), st.integers(0, 2))
def test_enumeration_property(seed, p, K, q):
    data = random_data(seed, n=25, p=p, q=q)
    s = int(np.random.default_rng(seed).integers(0, p + 1))
    for warm in (True, False):
        fp, rep = solve_exact(data, Budget(K, s), SolveOptions(gap_tol=0.0, use_warm_start=warm))
        assert fp.in_budget(Budget(K, s))
        best = enumerate_optimum(data.y, data.X, data.Z, K, s)
        assert rep.incumbent_objective == pytest.approx(best, rel=1e-8, abs=1e-12)
        assert rep.lower_bound <= rep.incumbent_objective + 1e-12


def test_score_assignment_reductions(rng):
    data = random_data(4, q=1)
    obj, gamma, alpha = score_assignment(data, np.zeros(6, dtype=int))
    ref = np.linalg.lstsq(data.Z, data.y, rcond=None)[1][0]
    assert obj == pytest.approx(ref)
    assert gamma.size == 0
    nz = Dataset(data.y, data.X)
    assert score_assignment(nz, np.zeros(6, dtype=int))[0] == pytest.approx(data.y @ data.y)
    obj1, g1, _ = score_assignment(nz, np.ones(6, dtype=int))
    s = data.X.sum(axis=1)
    assert g1[0] == pytest.approx(s @ data.y / (s @ s))
    ols = np.linalg.lstsq(data.W, data.y, rcond=None)[1][0]
    for labels in canonical_patterns(6, 2):
        if rng.random() < 0.1:
            assert score_assignment(data, labels)[0] >= ols - 1e-9
            assert score_assignment(data, labels)[0] == pytest.approx(
                collapsed_rss(data.y, data.X, data.Z, labels), rel=1e-9
            )


def test_monotone_budgets():
    data = random_data(9, n=30, p=6)
    vals = {}
    for K in (1, 2, 3):
        for s in range(7):
            vals[K, s] = solve_exact(data, Budget(K, s), EXACT)[1].incumbent_objective
    for K in (1, 2, 3):
        for s in range(7):
            if K < 3:
                assert vals[K + 1, s] <= vals[K, s] * (1 + 1e-10) + 1e-12
            if s < 6:
                assert vals[K, s + 1] <= vals[K, s] * (1 + 1e-10) + 1e-12


def link_optimum(data, K, s, must, cannot):
    best = np.inf
    for labels in canonical_patterns(data.p, K):
        if np.count_nonzero(labels) > s:
            continue
        if any(labels[a] != labels[b] for a, b in must):
            continue
        if any(labels[a] == labels[b] for a, b in cannot):
            continue
        best = min(best, collapsed_rss(data.y, data.X, data.Z, labels))
    return best


@pytest.mark.parametrize("seed", range(6))
def test_links_respected_and_optimal(seed):
    data = random_data(100 + seed, n=30, p=6)
    must, cannot = [(0, 3)], [(1, 2)]
    opts = SolveOptions(gap_tol=0.0, must_link=must, cannot_link=cannot)
    fp, rep = solve_exact(data, Budget(2, 5), opts)
    assert fp.labels[0] == fp.labels[3]
    assert fp.labels[1] != fp.labels[2]
    assert rep.incumbent_objective == pytest.approx(
        link_optimum(data, 2, 5, must, cannot), rel=1e-8
    )


def test_infeasible_links():
    data = random_data(3, p=4)
    with pytest.raises(InfeasibleError):
        solve_exact(data, Budget(2, 4), SolveOptions(must_link=[(0, 1)], cannot_link=[(0, 1)]))
    # three mutually cannot-linked features need three distinct labels
    with pytest.raises(InfeasibleError):
        solve_exact(data, Budget(1, 4), SolveOptions(cannot_link=[(0, 1), (1, 2), (0, 2)]))


def test_warm_start_dominance():
    data = random_data(21, n=40, p=7)
    fp, rep = solve_exact(data, Budget(2, 5), EXACT)
    assert rep.history[0][1] == rep.warm_start_objective
    assert rep.incumbent_objective <= rep.warm_start_objective


def test_node_limit():
    data = random_data(22, n=40, p=7)
    fp, rep = solve_exact(data, Budget(2, 5), SolveOptions(gap_tol=0.0, node_limit=1, use_warm_start=False))
    assert rep.termination == NODE_LIMIT and rep.nodes_explored == 1
    assert rep.lower_bound <= rep.incumbent_objective


def test_mip_gap():
    assert mip_gap(2.0, 1.0) == 0.5
    assert mip_gap(0.0, 0.0) == 0.0
    assert mip_gap(0.0, -1.0) == float("inf")


def test_export_counts():
    data = random_data(5, n=10, p=3)
    text = export_mio(data, Budget(2, 2))
    binaries = text.split("Binaries\n")[1].split("End")[0].split()
    assert len(binaries) == 9
    assert len(re.findall(r"^ assign_\d+:", text, flags=re.M)) == 3
    assert re.search(r"^ sparsity: .* >= 1$", text, flags=re.M)
    assert text.endswith("End\n") and "\r" not in text
    assert default_big_m(data) > 0


def test_export_links():
    data = random_data(5, n=10, p=4)
    text = export_mio(data, Budget(2, 3), must_link=[(0, 1)], cannot_link=[(2, 3)])
    assert len(re.findall(r"^ must_1_\d:", text, flags=re.M)) == 3
    assert len(re.findall(r"^ cannot_1_\d:", text, flags=re.M)) == 3


def test_export_solves_to_same_optimum():
    scip = pytest.importorskip("pyscipopt")
    rng = np.random.default_rng(8)
    X = rng.standard_normal((20, 5))
    Z = np.ones((20, 1))
    y = X @ np.array([1.0, 1.0, -1.0, 0.0, 0.0]) + 0.5 + 0.5 * rng.standard_normal(20)
    data = Dataset(y, X, Z)
    budget = Budget(2, 3)
    _, rep = solve_exact(data, budget, EXACT)
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "model.lp"
        path.write_text(export_mio(data, budget, big_m=100.0))
        m = scip.Model()
        m.hideOutput()
        m.readProblem(str(path))
        m.setParam("limits/gap", 0.0)
        m.optimize()
        assert m.getObjVal() == pytest.approx(rep.incumbent_objective, rel=1e-6, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 2))
def test_random_links_match_enumeration(seed, K):
    rng = np.random.default_rng(seed)
    p = int(rng.integers(3, 7))
    data = random_data(seed, n=20, p=p)
    s = int(rng.integers(1, p + 1))
    pairs = [tuple(rng.choice(p, 2, replace=False)) for _ in range(3)]
    n_must = int(rng.integers(0, 3))
    must, cannot = pairs[:n_must], pairs[n_must:]
    best = link_optimum(data, K, s, must, cannot)
    opts = SolveOptions(gap_tol=0.0, must_link=must, cannot_link=cannot)
    if best == np.inf:
        with pytest.raises(InfeasibleError):
            solve_exact(data, Budget(K, s), opts)
        return
    try:
        fp, rep = solve_exact(data, Budget(K, s), opts)
    except InfeasibleError:
        pytest.fail("solver reported infeasible on a feasible instance")
    assert rep.incumbent_objective == pytest.approx(best, rel=1e-8, abs=1e-12)
    assert all(fp.labels[a] == fp.labels[b] for a, b in must)
    assert all(fp.labels[a] != fp.labels[b] for a, b in cannot)
