"""Grouping-quality measures and oracle quantities for fused sparse fits."""

from __future__ import annotations

import itertools
from collections.abc import Collection, Iterable

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import linear_sum_assignment

from .numerics import Dataset, least_squares
from .params import FusedParams, Grouping, from_beta, grouping_from_labels, grouping_of
from .projection import ProblemSizeError, label_patterns
from .solver import collapse

SENSITIVITY_MAX_P = 10
SENSITIVITY_MAX_K = 3


def _entropy(counts: NDArray) -> float:
    pr = counts[counts > 0] / counts.sum()
    return float(-np.sum(pr * np.log(pr)))


def _as_labels(partition: Iterable[Collection[int]], p: int | None = None) -> NDArray:
    clusters = [sorted(int(i) for i in c) for c in partition]
    universe = sorted(i for c in clusters for i in c)
    if len(universe) != len(set(universe)):
        raise ValueError("clusters must be disjoint")
    if p is not None and universe != list(range(p)):
        raise ValueError(f"clusters must cover 0..{p - 1}")
    labels = np.full(max(universe, default=-1) + 1, -1, dtype=np.int64)
    for k, c in enumerate(clusters):
        labels[c] = k
    if np.any(labels < 0):
        raise ValueError("clusters must cover a contiguous index range starting at 0")
    return labels


def nmi(g1: Iterable[Collection[int]], g2: Iterable[Collection[int]]) -> float:
    """Normalized mutual information of two partitions of ``{0, ..., p-1}``.

    Mutual information over the arithmetic mean of the two entropies, natural
    logarithm. Two single-cluster partitions score 1.
    """
    a = _as_labels(g1)
    b = _as_labels(g2)
    if a.size != b.size:
        raise ValueError("partitions cover different index sets")
    table = np.zeros((a.max() + 1, b.max() + 1))
    np.add.at(table, (a, b), 1.0)
    h1 = _entropy(table.sum(axis=1))
    h2 = _entropy(table.sum(axis=0))
    if h1 == 0.0 and h2 == 0.0:
        return 1.0
    n = table.sum()
    nz = table > 0
    outer = np.outer(table.sum(axis=1), table.sum(axis=0))
    mi = float(np.sum(table[nz] / n * np.log(table[nz] * n / outer[nz])))
    return min(max(mi / ((h1 + h2) / 2.0), 0.0), 1.0)


def partition_with_zero_group(beta: ArrayLike) -> list[list[int]]:
    """Nonzero value groups plus one cluster holding every zero index."""
    beta = np.asarray(beta, dtype=float).ravel()
    parts = grouping_of(beta).sorted_groups()
    zeros = np.flatnonzero(beta == 0).tolist()
    if zeros:
        parts.append(zeros)
    return parts


def nmi_with_zero_group(beta_hat: ArrayLike, beta_true: ArrayLike) -> float:
    return nmi(partition_with_zero_group(beta_hat), partition_with_zero_group(beta_true))


def _overlap(g1: Grouping, g2: Grouping) -> NDArray:
    a, b = g1.sorted_groups(), g2.sorted_groups()
    return np.array([[len(set(x) & set(y)) for y in b] for x in a], dtype=np.int64).reshape(
        len(a), len(b)
    )


def _distance(g1: Grouping, g2: Grouping, best_overlap) -> int:
    if len(g1) > len(g2):
        g1, g2 = g2, g1
    total = sum(len(g) for g in g2)
    if not g1:
        return total
    return total - int(best_overlap(_overlap(g1, g2)))


def _assignment_overlap(ov: NDArray) -> int:
    rows, cols = linear_sum_assignment(ov, maximize=True)
    return int(ov[rows, cols].sum())


def _enumerated_overlap(ov: NDArray) -> int:
    m, k = ov.shape
    return max(
        sum(ov[i, f[i]] for i in range(m)) for f in itertools.permutations(range(k), m)
    )


def grouping_distance(beta: ArrayLike, beta_other: ArrayLike) -> int:
    """Number of indices whose group labels must change to align the two groupings.

    The side with fewer groups is mapped injectively into the other; the
    result counts the indices of the larger side left unmatched under the
    best map (optimal assignment on the overlap matrix).
    """
    return _distance(grouping_of(beta), grouping_of(beta_other), _assignment_overlap)


def grouping_distance_enumerated(beta: ArrayLike, beta_other: ArrayLike) -> int:
    """Same as :func:`grouping_distance` by trying every injective map."""
    return _distance(grouping_of(beta), grouping_of(beta_other), _enumerated_overlap)


def same_grouping(beta_hat: ArrayLike, beta_true: ArrayLike) -> bool:
    return grouping_of(beta_hat) == grouping_of(beta_true)


def tpp(selected: Iterable[int], truth: Iterable[int]) -> float:
    """Fraction of the true support contained in ``selected``."""
    truth = set(int(i) for i in truth)
    if not truth:
        raise ValueError("true support must be nonempty")
    return len(truth & set(int(i) for i in selected)) / len(truth)


def oracle_ls(data: Dataset, grouping: Grouping) -> FusedParams:
    """Least-squares fit with the grouping held fixed.

    Columns are summed within each group and fitted jointly with ``Z``; the
    group coefficients are spread back to their features.
    """
    labels = grouping.labels(data.p)
    Xg, groups = collapse(data.X, labels)
    coef = least_squares(np.hstack([Xg, data.Z]), data.y)
    lookup = np.zeros(len(grouping) + 1)
    lookup[groups] = coef[: groups.size]
    return from_beta(lookup[labels], coef[groups.size :])


def grouping_sensitivity(data: Dataset, truth: FusedParams) -> float:
    """Smallest mean squared error increase per misgrouped feature.

    Enumerates every assignment with at most as many groups and nonzeros as
    ``truth`` whose grouping differs from it. For each, the best achievable
    ``||X (beta - beta*) + Z (alpha - alpha*)||^2`` is the squared residual of
    projecting the true mean onto the collapsed design; it is divided by
    ``n * max(d, 1)`` with ``d`` the grouping distance to the truth.
    """
    K0 = max(truth.n_groups, 1)
    s0 = truth.n_nonzero
    if data.p > SENSITIVITY_MAX_P or truth.n_groups > SENSITIVITY_MAX_K:
        raise ProblemSizeError(
            f"exhaustive sensitivity limited to p <= {SENSITIVITY_MAX_P}, "
            f"K <= {SENSITIVITY_MAX_K}"
        )
    if truth.p != data.p or truth.alpha.size != data.q:
        raise ValueError("truth does not match the data dimensions")
    mean = data.X @ truth.beta + data.Z @ truth.alpha
    g_true = truth.grouping()
    best = float("inf")
    for labels in label_patterns(data.p, K0):
        if np.count_nonzero(labels) > s0:
            continue
        g = grouping_from_labels(labels)
        if g == g_true:
            continue
        Xg, _ = collapse(data.X, labels)
        A = np.hstack([Xg, data.Z])
        coef = least_squares(A, mean)
        r = mean - A @ coef if coef.size else mean
        d = _distance(g, g_true, _assignment_overlap)
        best = min(best, float(r @ r) / (data.n * max(d, 1)))
    return best
