"""Euclidean projection onto the fused sparse parameter set.

``project`` solves ``min ||theta - c||^2`` over points with at most ``K``
distinct nonzero values among the last ``p`` coordinates and at most ``s``
nonzero among them; the first ``q`` coordinates are free and copied.

After sorting the penalized part of ``c``, an optimal point groups contiguous
runs of sorted values. The nonzero runs sit at the two ends and the zeros form
one middle block. Fixing the runs, each group value is the run mean, so the
problem reduces to maximizing ``sum(run_sum**2 / run_len)`` with a forward
dynamic program over prefixes and a backward one over suffixes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .params import Budget, FusedParams, from_beta

BRUTEFORCE_MAX_P = 10
BRUTEFORCE_MAX_K = 4


class ProblemSizeError(ValueError):
    """Raised when an exhaustive routine is asked to handle too large an instance."""


@dataclass(frozen=True, eq=False)
class ProjectionProblem:
    c: NDArray[np.float64]
    q: int
    budget: Budget

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        if self.q < 0 or self.q > c.size:
            raise ValueError(f"q={self.q} out of range for len(c)={c.size}")
        object.__setattr__(self, "c", c)
        self.budget.check(c.size - self.q)

    @property
    def p(self) -> int:
        return self.c.size - self.q

    def distance(self, fp: FusedParams) -> float:
        """Squared distance between ``c`` and a candidate (alpha part first)."""
        d_alpha = self.c[: self.q] - fp.alpha
        d_beta = self.c[self.q :] - fp.beta
        return float(d_alpha @ d_alpha + d_beta @ d_beta)


def _segment_table(S: NDArray) -> NDArray:
    # M[a, b] = (S[b] - S[a])**2 / (b - a) for a < b, else -inf
    m = S.size
    a = np.arange(m)
    diff = S[None, :] - S[:, None]
    length = (a[None, :] - a[:, None]).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        M = np.where(length > 0, diff**2 / length, -np.inf)
    return M


def segment_scores(c_beta: NDArray, K: int, s: int):
    """Forward and backward DP tables over the sorted values.

    Returns ``(order, S, F, Fa, B, Ba)`` where ``F[k, l]`` is the best score of
    the ``l`` smallest values split into exactly ``k`` runs and ``B[k, t]`` the
    same for the ``t`` largest values; ``Fa``/``Ba`` hold the arg-maxima.
    """
    p = c_beta.size
    order = np.argsort(c_beta, kind="stable")
    v = c_beta[order]
    S = np.concatenate([[0.0], np.cumsum(v)])
    smax = min(s, p)

    # prefix lengths 0..smax
    Mf = _segment_table(S[: smax + 1])
    # suffix of length t covers sorted positions p-t .. p-1; boundary sums S[p-t]
    Sb = S[p - np.arange(smax + 1)]
    Mb = (Sb[:, None] - Sb[None, :]) ** 2
    t = np.arange(smax + 1)
    lb = (t[None, :] - t[:, None]).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        Mb = np.where(lb > 0, Mb / lb, -np.inf)

    F = np.full((K + 1, smax + 1), -np.inf)
    B = np.full((K + 1, smax + 1), -np.inf)
    Fa = np.zeros((K + 1, smax + 1), dtype=np.int64)
    Ba = np.zeros((K + 1, smax + 1), dtype=np.int64)
    F[0, 0] = 0.0
    B[0, 0] = 0.0
    for k in range(1, K + 1):
        cand = F[k - 1][:, None] + Mf
        Fa[k] = np.argmax(cand, axis=0)
        F[k] = cand[Fa[k], np.arange(smax + 1)]
        cand = B[k - 1][:, None] + Mb
        Ba[k] = np.argmax(cand, axis=0)
        B[k] = cand[Ba[k], np.arange(smax + 1)]
    return order, S, F, Fa, B, Ba


def project(prob: ProjectionProblem) -> FusedParams:
    """Closest point of the constrained set to ``prob.c``.

    Ties within ``1e-12`` relative are broken toward fewer nonzero features,
    then fewer groups.
    """
    q, p, K, s = prob.q, prob.p, prob.budget.K, prob.budget.s
    alpha = prob.c[:q].copy()
    c_beta = prob.c[q:]
    smax = min(s, p)
    if smax == 0 or not np.any(c_beta):
        return FusedParams.zeros(p).with_alpha(alpha)

    order, S, F, Fa, B, Ba = segment_scores(c_beta, K, smax)

    k1 = np.arange(K + 1)[:, None, None, None]
    k2 = np.arange(K + 1)[None, :, None, None]
    ll = np.arange(smax + 1)[None, None, :, None]
    tt = np.arange(smax + 1)[None, None, None, :]
    total = F[:, None, :, None] + B[None, :, None, :]
    feasible = (k1 + k2 <= K) & (ll + tt <= smax)
    total = np.where(feasible, total, -np.inf)

    best = total.max()
    tol = 1e-12 * (1.0 + float(c_beta @ c_beta))
    near = total >= best - tol
    nnz = np.broadcast_to(ll + tt, total.shape)
    ngr = np.broadcast_to(k1 + k2, total.shape)
    key = np.where(near, nnz * (K + 1) + ngr, np.iinfo(np.int64).max)
    flat = int(np.argmin(key))
    kf, kb, l, t = np.unravel_index(flat, total.shape)

    beta = np.zeros(p)
    # forward runs over sorted positions [a, end)
    end, k = int(l), int(kf)
    while k > 0:
        a = int(Fa[k, end])
        idx = order[a:end]
        beta[idx] = (S[end] - S[a]) / (end - a)
        end, k = a, k - 1
    # backward runs: suffix length t -> t' covers sorted positions [p-t, p-t')
    tl, k = int(t), int(kb)
    while k > 0:
        tn = int(Ba[k, tl])
        lo, hi = p - tl, p - tn
        idx = order[lo:hi]
        beta[idx] = (S[hi] - S[lo]) / (hi - lo)
        tl, k = tn, k - 1
    return from_beta(beta, alpha)


@lru_cache(maxsize=64)
def label_patterns(p: int, K: int) -> NDArray[np.int64]:
    """All label vectors over ``{0..K}`` up to relabeling of the nonzero groups.

    Nonzero labels appear in first-occurrence order (1 before 2 before ...), so
    each unlabeled grouping with a zero set is listed exactly once.
    """
    rows: list[tuple[int, ...]] = []

    def grow(prefix: list[int], used: int):
        if len(prefix) == p:
            rows.append(tuple(prefix))
            return
        for lab in range(0, min(used + 1, K) + 1):
            prefix.append(lab)
            grow(prefix, max(used, lab))
            prefix.pop()

    grow([], 0)
    out = np.array(rows, dtype=np.int64).reshape(len(rows), p)
    out.setflags(write=False)
    return out


def project_bruteforce(prob: ProjectionProblem) -> FusedParams:
    """Exhaustive projection for small instances (verification oracle).

    Every assignment of features to the zero group or to one of ``K`` groups is
    scored with group means as values.
    """
    q, p, K, s = prob.q, prob.p, prob.budget.K, prob.budget.s
    if p > BRUTEFORCE_MAX_P or K > BRUTEFORCE_MAX_K:
        raise ProblemSizeError(
            f"exhaustive projection limited to p <= {BRUTEFORCE_MAX_P}, K <= {BRUTEFORCE_MAX_K}"
        )
    alpha = prob.c[:q].copy()
    c = prob.c[q:]
    A = label_patterns(p, K)
    A = A[(A > 0).sum(axis=1) <= s]
    cost = np.full(A.shape[0], float(c @ c))
    means = np.zeros((A.shape[0], K + 1))
    for k in range(1, K + 1):
        mask = A == k
        cnt = mask.sum(axis=1)
        sums = mask @ c
        has = cnt > 0
        means[has, k] = sums[has] / cnt[has]
        cost[has] -= sums[has] ** 2 / cnt[has]
    best = cost.min()
    tol = 1e-12 * (1.0 + float(c @ c))
    near = np.flatnonzero(cost <= best + tol)
    nnz = (A[near] > 0).sum(axis=1)
    ngr = A[near].max(axis=1)
    pick = near[np.lexsort((ngr, nnz))[0]]
    beta = means[pick][A[pick]]
    return from_beta(beta, alpha)


def projection_score_identity(c_beta: ArrayLike, fp: FusedParams) -> tuple[float, float]:
    """Distance of ``fp`` to ``c_beta`` computed two ways.

    Returns ``(||beta - c||^2, ||c||^2 - sum over groups of sum**2/len)``; the
    two agree whenever every group value is its group's mean.
    """
    c_beta = np.asarray(c_beta, dtype=float)
    direct = float(np.sum((fp.beta - c_beta) ** 2))
    score = 0.0
    for k in range(1, fp.n_groups + 1):
        sel = fp.labels == k
        score += c_beta[sel].sum() ** 2 / sel.sum()
    return direct, float(c_beta @ c_beta) - score

