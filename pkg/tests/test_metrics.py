import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.metrics import normalized_mutual_info_score

from l0fusion import (
    Dataset,
    Grouping,
    from_beta,
    grouping_distance,
    grouping_sensitivity,
    nmi,
    nmi_with_zero_group,
    oracle_ls,
    same_grouping,
    tpp,
)
from l0fusion.metrics import grouping_distance_enumerated, partition_with_zero_group
from l0fusion.projection import ProblemSizeError
from oracles import distance_by_maps, groups_of, nmi_formula


def test_nmi_identical():
    assert nmi([[0, 1], [2, 3]], [[2, 3], [0, 1]]) == 1.0
    assert nmi([[0, 1, 2]], [[0, 1, 2]]) == 1.0


def test_nmi_single_cluster():
    assert nmi([[0, 1, 2, 3]], [[0], [1, 2], [3]]) == 0.0


def test_nmi_p4_example():
    value = nmi([[0, 1], [2, 3]], [[0, 1, 2], [3]])
    assert value == pytest.approx(0.3437110184854508, abs=1e-12)
    assert value == pytest.approx(nmi_formula([0, 0, 1, 1], [0, 0, 0, 1]), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=2, max_size=15), st.integers(0, 2**32 - 1))
def test_nmi_against_references(a, seed):
    b = np.random.default_rng(seed).integers(0, 4, len(a)).tolist()
    part = lambda lab: [np.flatnonzero(np.array(lab) == v).tolist() for v in set(lab)]  # noqa: E731
    value = nmi(part(a), part(b))
    assert value == pytest.approx(nmi(part(b), part(a)), abs=1e-12)
    assert 0.0 <= value <= 1.0 + 1e-12
    assert value == pytest.approx(nmi_formula(a, b), abs=1e-10)
    if len(set(a)) > 1 or len(set(b)) > 1:
        assert value == pytest.approx(normalized_mutual_info_score(a, b), abs=1e-10)


def test_nmi_rejects_bad_partitions():
    with pytest.raises(ValueError):
        nmi([[0, 1], [1, 2]], [[0, 1, 2]])


def test_nmi_with_zero_group():
    beta = np.array([1.0, 1.0, -2.0, 0.0])
    assert nmi_with_zero_group(beta, beta) == 1.0
    assert nmi_with_zero_group(np.zeros(4), beta) == 0.0
    hat = np.array([1.0, 0.0, -2.0, 0.0])
    assert nmi_with_zero_group(hat, beta) == pytest.approx(
        nmi_formula([1, 0, 2, 0], [1, 1, 2, 0]), abs=1e-12
    )
    assert sorted(map(sorted, partition_with_zero_group(beta))) == [[0, 1], [2], [3]]


def test_grouping_distance_examples():
    b = np.array([1, 1, 1, 2, 2, 0, 0.0])
    assert grouping_distance(b, b) == 0
    assert grouping_distance(b, [1, 1, 2, 2, 2, 0, 0]) == 1
    g1 = [1, 1, 1, 1, 2, 2, 2]
    g2 = [5, 5, 7, 7, 5, 7, 7]
    assert grouping_distance(g1, g2) == 3
    assert distance_by_maps(groups_of(g1), groups_of(g2)) == 3


@settings(max_examples=300, deadline=None)
@given(
    st.lists(st.integers(0, 5), min_size=1, max_size=12),
    st.lists(st.integers(0, 5), min_size=1, max_size=12),
)
def test_grouping_distance_against_maps(a, b):
    p = max(len(a), len(b))
    a = np.pad(np.array(a, dtype=float), (0, p - len(a)))
    b = np.pad(np.array(b, dtype=float), (0, p - len(b)))
    d = grouping_distance(a, b)
    assert d == distance_by_maps(groups_of(a), groups_of(b))
    assert d == grouping_distance_enumerated(a, b)
    assert (d == 0) == same_grouping(a, b) or not same_grouping(a, b)
    if same_grouping(a, b):
        assert d == 0


def test_same_grouping():
    b = np.array([1.0, 1.0, 2.0, 0.0])
    assert same_grouping(b, b)
    assert same_grouping(b, [-4.0, -4.0, 9.0, 0.0])
    assert not same_grouping(b, [1.0, 2.0, 2.0, 0.0])


def test_tpp():
    assert tpp([1, 2, 3, 9], [1, 2]) == 1.0
    assert tpp([5], [1, 2]) == 0.0
    assert tpp([1, 2, 3], [1, 2, 3, 4]) == 0.75
    with pytest.raises(ValueError):
        tpp([1], [])


def test_cmin_example():
    X = np.sqrt(2) * np.eye(2)
    data = Dataset(np.zeros(2), X)
    assert grouping_sensitivity(data, from_beta([1.0, 2.0])) == pytest.approx(0.5, abs=1e-10)


def test_cmin_duplicate_columns():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(10)
    data = Dataset(np.zeros(10), np.column_stack([x, x]))
    assert grouping_sensitivity(data, from_beta([1.0, 2.0])) == pytest.approx(0.0, abs=1e-10)


def test_cmin_scaling(rng):
    X = rng.standard_normal((8, 4))
    truth = from_beta([1.0, 1.0, -1.0, 0.0])
    base = grouping_sensitivity(Dataset(rng.standard_normal(8), X), truth)
    assert base > 0
    assert grouping_sensitivity(Dataset(5 * rng.standard_normal(8), X), truth) == pytest.approx(base)
    assert grouping_sensitivity(Dataset(np.zeros(8), 3 * X), truth) == pytest.approx(9 * base)


def test_cmin_size_guard():
    with pytest.raises(ProblemSizeError):
        grouping_sensitivity(Dataset(np.zeros(12), np.eye(12)), from_beta(np.ones(12)))


def test_oracle_ls(rng):
    X = rng.standard_normal((20, 5))
    y = 1.7 * X.sum(axis=1)
    fp = oracle_ls(Dataset(y, X), Grouping([range(5)]))
    np.testing.assert_allclose(fp.gamma, [1.7])
    assert not np.any(oracle_ls(Dataset(y, X), Grouping()).beta)

    Z = rng.standard_normal((20, 2))
    y = rng.standard_normal(20)
    g = Grouping([{0, 3}, {1}])
    fp = oracle_ls(Dataset(y, X, Z), g)
    A = np.column_stack([X[:, 0] + X[:, 3], X[:, 1], Z])
    coef = np.linalg.solve(A.T @ A, A.T @ y)
    expect = np.array([coef[0], coef[1], 0, coef[0], 0])
    np.testing.assert_allclose(fp.beta, expect, atol=1e-10)
    np.testing.assert_allclose(fp.alpha, coef[2:], atol=1e-10)
    # within-grouping minimizer
    rss = lambda b, a: float(np.sum((y - X @ b - Z @ a) ** 2))  # noqa: E731
    for _ in range(20):
        c = coef + 0.1 * rng.standard_normal(4)
        b = np.array([c[0], c[1], 0, c[0], 0])
        assert rss(fp.beta, fp.alpha) <= rss(b, c[2:]) + 1e-12
