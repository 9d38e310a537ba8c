"""Exact branch-and-bound for least squares with fused, sparse coefficients.

A node fixes some features to the zero group or to one of at most ``K``
groups and leaves the rest free. Its lower bound is the least-squares fit on
the design where each assigned group is collapsed into the sum of its columns,
zeros are dropped and free features keep their own column. Any completion of
the node is a further restriction of that fit, so the bound is valid.

Groups are labeled in order of creation along the search path, which lists
each unlabeled partition once. Group values are only sorted when the final
point is extracted.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .numerics import Dataset, least_squares
from .params import Budget, FusedParams, from_beta
from .warmstart import WarmStartConfig, objective, warm_start

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
GAP_REACHED = "gap_reached"
NODE_LIMIT = "node_limit"
TIME_LIMIT = "time_limit"


class InfeasibleError(ValueError):
    """No point satisfies the budget together with the link constraints."""


@dataclass
class SolveOptions:
    use_warm_start: bool = True
    gap_tol: float = 1e-4
    node_limit: int | None = None
    time_limit: float | None = None
    must_link: Sequence[tuple[int, int]] = ()
    cannot_link: Sequence[tuple[int, int]] = ()
    warm_start_config: WarmStartConfig | None = None

    def __post_init__(self):
        if self.gap_tol < 0:
            raise ValueError("gap_tol must be nonnegative")
        self.must_link = [tuple(map(int, pair)) for pair in self.must_link]
        self.cannot_link = [tuple(map(int, pair)) for pair in self.cannot_link]


@dataclass
class SolverReport:
    incumbent_objective: float
    lower_bound: float
    mip_gap: float
    nodes_explored: int
    wall_time: float
    termination: str
    warm_start_objective: float | None = None
    # (seconds, incumbent, lower bound) whenever the incumbent improves
    history: list[tuple[float, float, float]] = field(default_factory=list)


def mip_gap(z_primal: float, z_dual: float, zero_tol: float = 0.0) -> float:
    """Relative gap ``|z_P - z_D| / |z_P|``; 0 for a zero incumbent with a nonnegative bound."""
    if abs(z_primal) <= zero_tol:
        return 0.0 if z_dual >= -1e-12 else float("inf")
    return abs(z_primal - z_dual) / abs(z_primal)


def collapse(X: NDArray, labels: ArrayLike) -> tuple[NDArray, NDArray]:
    """Sum the columns of ``X`` within each nonzero label.

    Returns the collapsed matrix and the labels of its columns in increasing
    order.
    """
    labels = np.asarray(labels)
    groups = np.unique(labels[labels > 0])
    if groups.size == 0:
        return np.zeros((X.shape[0], 0)), groups
    cols = [X[:, labels == k].sum(axis=1) for k in groups]
    return np.column_stack(cols), groups


def score_assignment(data: Dataset, labels: ArrayLike) -> tuple[float, NDArray, NDArray]:
    """Least-squares objective of a label assignment on the collapsed design.

    Returns ``(rss, gamma, alpha)`` with ``gamma`` in increasing label order
    (not sorted by value).
    """
    labels = np.asarray(labels, dtype=np.int64).ravel()
    if labels.size != data.p:
        raise ValueError("one label per feature required")
    Xg, groups = collapse(data.X, labels)
    A = np.hstack([Xg, data.Z])
    coef = least_squares(A, data.y)
    r = data.y - A @ coef if coef.size else data.y
    return float(r @ r), coef[: groups.size], coef[groups.size :]


def params_from_assignment(data: Dataset, labels: ArrayLike) -> FusedParams:
    labels = np.asarray(labels, dtype=np.int64)
    _, gamma, alpha = score_assignment(data, labels)
    groups = np.unique(labels[labels > 0])
    lookup = np.zeros(int(labels.max(initial=0)) + 1)
    lookup[groups] = gamma
    return from_beta(lookup[labels], alpha)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _link_units(p: int, must: Iterable, cannot: Iterable):
    for j1, j2 in itertools.chain(must, cannot):
        if not (0 <= j1 < p and 0 <= j2 < p) or j1 == j2:
            raise ValueError(f"invalid link pair ({j1}, {j2}) for p={p}")
    uf = _UnionFind(p)
    for j1, j2 in must:
        uf.union(j1, j2)
    roots = sorted({uf.find(j) for j in range(p)})
    index = {r: u for u, r in enumerate(roots)}
    unit_of = np.array([index[uf.find(j)] for j in range(p)], dtype=np.int64)
    units = [np.flatnonzero(unit_of == u) for u in range(len(roots))]
    conflicts: list[set[int]] = [set() for _ in units]
    for j1, j2 in cannot:
        u1, u2 = unit_of[j1], unit_of[j2]
        if u1 == u2:
            raise InfeasibleError(f"features {j1} and {j2} are both must- and cannot-linked")
        conflicts[u1].add(int(u2))
        conflicts[u2].add(int(u1))
    return unit_of, units, conflicts


@dataclass(order=True)
class _Node:
    bound: float
    seq: int
    assign: NDArray = field(compare=False)
    n_groups: int = field(compare=False)
    nnz: int = field(compare=False)


class _Search:
    """Precomputed Gram data over link units; node fits reuse it."""

    def __init__(self, data: Dataset, budget: Budget, opts: SolveOptions):
        self.data = data
        self.K = budget.K
        self.s = budget.s
        self.unit_of, self.units, self.conflicts = _link_units(
            data.p, opts.must_link, opts.cannot_link
        )
        self.n_units = len(self.units)
        self.sizes = np.array([u.size for u in self.units])
        Xu = np.column_stack([data.X[:, u].sum(axis=1) for u in self.units])
        self.Wu = np.hstack([Xu, data.Z])
        self.G = self.Wu.T @ self.Wu
        self.h = self.Wu.T @ data.y
        self.yy = float(data.y @ data.y)
        # slack absorbing round-off of Gram-based residuals
        self.margin = 1e-11 * self.yy
        norms = np.sqrt(np.diag(self.G)[: self.n_units]).copy()
        norms[norms == 0] = 1.0
        self.unit_norm = norms

    def aggregation(self, assign: NDArray, n_groups: int, with_free: bool) -> NDArray:
        U, q = self.n_units, self.data.q
        free = np.flatnonzero(assign < 0) if with_free else np.zeros(0, dtype=np.int64)
        m = n_groups + free.size + q
        M = np.zeros((U + q, m))
        grouped = np.flatnonzero(assign > 0)
        M[grouped, assign[grouped] - 1] = 1.0
        M[free, n_groups + np.arange(free.size)] = 1.0
        M[U + np.arange(q), n_groups + free.size + np.arange(q)] = 1.0
        return M

    def fit(self, assign: NDArray, n_groups: int, with_free: bool) -> tuple[float, NDArray]:
        """Residual sum of squares and the fitted coefficients in unit space."""
        M = self.aggregation(assign, n_groups, with_free)
        if M.shape[1] == 0:
            return self.yy, np.zeros(M.shape[0])
        Gs = M.T @ self.G @ M
        hs = M.T @ self.h
        try:
            c, low = cho_factor(Gs, check_finite=False)
            d = np.abs(np.diag(c))
            if d.min() ** 2 <= 1e-10 * d.max() ** 2:
                raise LinAlgError("ill-conditioned")
            coef = cho_solve((c, low), hs, check_finite=False)
            rss = max(self.yy - float(coef @ hs), 0.0)
        except LinAlgError:
            A = self.Wu @ M
            coef = least_squares(A, self.data.y)
            r = self.data.y - A @ coef
            rss = float(r @ r)
        return rss, M @ coef

    def bound(self, assign: NDArray, n_groups: int) -> float:
        rss, _ = self.fit(assign, n_groups, with_free=True)
        return max(rss - self.margin, 0.0)

    def feature_labels(self, assign: NDArray) -> NDArray:
        return np.where(assign > 0, assign, 0)[self.unit_of]

    def allowed(self, assign: NDArray, unit: int, value: int) -> bool:
        return all(assign[v] != value for v in self.conflicts[unit])

    def zero_completion_ok(self, assign: NDArray) -> bool:
        zero = assign <= 0
        return all(
            not zero[v] for u in np.flatnonzero(zero) for v in self.conflicts[u]
        )

    def links_ok(self, assign: NDArray) -> bool:
        return all(
            assign[u] != assign[v] for u, conf in enumerate(self.conflicts) for v in conf
        )


def _check_links(fp: FusedParams, opts: SolveOptions) -> bool:
    lab = fp.labels
    return all(lab[a] == lab[b] for a, b in opts.must_link) and all(
        lab[a] != lab[b] for a, b in opts.cannot_link
    )


def solve_exact(
    data: Dataset, budget: Budget, opts: SolveOptions | None = None
) -> tuple[FusedParams, SolverReport]:
    """Globally minimize the residual sum of squares over the constrained set.

    Best-first branch and bound; stops at a proven optimum, when the relative
    gap falls to ``opts.gap_tol``, or at a node/time limit (returning the best
    point found so far with the matching ``termination`` flag).
    """
    opts = opts or SolveOptions()
    budget.check(data.p)
    t0 = time.perf_counter()
    search = _Search(data, budget, opts)
    n_units = len(search.units)
    zero_tol = 1e-12 * float(data.y @ data.y)

    best_labels: NDArray | None = None
    best_obj = float("inf")
    best_fp: FusedParams | None = None
    history: list[tuple[float, float, float]] = []
    ws_obj = None
    heap: list[_Node] = []

    def offer(labels: NDArray, approx: float | None = None):
        """Score ``labels`` exactly if the Gram estimate ``approx`` looks promising."""
        nonlocal best_labels, best_obj, best_fp
        if approx is not None and approx >= best_obj + search.margin:
            return
        obj = score_assignment(data, labels)[0]
        if obj < best_obj:
            best_labels, best_obj, best_fp = labels, obj, None
            z_dual = min(heap[0].bound, obj) if heap else float("nan")
            history.append((time.perf_counter() - t0, obj, z_dual))

    def below_incumbent(bound: float) -> bool:
        # inf - inf is nan: without an incumbent nothing is pruned
        return best_obj == math.inf or bound < best_obj - 1e-12 * (1.0 + abs(best_obj))

    if opts.use_warm_start:
        ws_fp, _ = warm_start(data, budget, opts.warm_start_config)
        if _check_links(ws_fp, opts):
            ws_obj = objective(data, ws_fp.theta)
            best_labels, best_obj, best_fp = ws_fp.labels, ws_obj, ws_fp
            history.append((time.perf_counter() - t0, ws_obj, float("nan")))
            offer(ws_fp.labels)

    root = np.full(n_units, -1, dtype=np.int64)
    if search.zero_completion_ok(root):
        offer(np.zeros(data.p, dtype=np.int64))

    counter = itertools.count()
    root_bound = search.bound(root, 0)
    heapq.heappush(heap, _Node(root_bound, next(counter), root, 0, 0))

    nodes = 0
    termination = OPTIMAL
    while heap:
        z_dual = min(heap[0].bound, best_obj)
        if best_obj <= zero_tol:
            break
        gap = mip_gap(best_obj, z_dual, zero_tol)
        if opts.gap_tol > 0 and gap <= opts.gap_tol:
            termination = GAP_REACHED
            break
        if opts.node_limit is not None and nodes >= opts.node_limit:
            termination = NODE_LIMIT
            break
        if opts.time_limit is not None and time.perf_counter() - t0 >= opts.time_limit:
            termination = TIME_LIMIT
            break

        node = heapq.heappop(heap)
        if not below_incumbent(node.bound):
            continue
        nodes += 1
        assign = node.assign

        # assigned-only fit: a feasible completion and the residual used for branching
        obj_c, coef = search.fit(assign, node.n_groups, with_free=False)
        if search.zero_completion_ok(assign):
            offer(search.feature_labels(assign), obj_c)

        free = np.flatnonzero(assign < 0)
        corr = np.abs(search.h[free] - search.G[free] @ coef) / search.unit_norm[free]
        unit = int(free[np.argmax(corr)])
        size = int(search.sizes[unit])

        values = [0]
        if node.nnz + size <= search.s:
            values.extend(range(1, node.n_groups + 1))
            if node.n_groups < search.K:
                values.append(node.n_groups + 1)
        for v in values:
            if not search.allowed(assign, unit, v):
                continue
            child = assign.copy()
            child[unit] = v
            n_groups = max(node.n_groups, v)
            nnz = node.nnz + (size if v > 0 else 0)
            rest = child < 0
            if rest.any() and nnz == search.s:
                # sparsity exhausted: the remaining units must be zero
                child[rest] = 0
                rest = child < 0
            if not rest.any():
                if search.links_ok(child):
                    obj, _ = search.fit(child, n_groups, with_free=False)
                    offer(search.feature_labels(child), obj)
                continue
            bound = max(search.bound(child, n_groups), node.bound)
            if below_incumbent(bound):
                heapq.heappush(heap, _Node(bound, next(counter), child, n_groups, nnz))

    if best_labels is None:
        raise InfeasibleError("no assignment satisfies the budget and link constraints")
    if not heap and termination == OPTIMAL:
        z_dual = best_obj
    else:
        z_dual = min(heap[0].bound, best_obj) if heap else best_obj
    if best_obj <= zero_tol:
        termination = OPTIMAL

    if best_fp is None:
        best_fp = params_from_assignment(data, best_labels)
    final_obj = objective(data, best_fp.theta)
    if termination == OPTIMAL:
        z_dual = min(z_dual, final_obj)
    report = SolverReport(
        incumbent_objective=final_obj,
        lower_bound=z_dual,
        mip_gap=mip_gap(final_obj, z_dual, zero_tol),
        nodes_explored=nodes,
        wall_time=time.perf_counter() - t0,
        termination=termination,
        warm_start_objective=ws_obj,
        history=history,
    )
    logger.debug(
        "solve_exact: %s after %d nodes, z_P=%.6g z_D=%.6g",
        termination, nodes, final_obj, z_dual,
    )
    return best_fp, report


def default_big_m(data: Dataset) -> float:
    """Coefficient-scale heuristic ``10 * max_j |x_j^T y| / ||x_j||^2``.

    Not a proven bound on the optimal coefficients; pass a larger value when
    the exported model must be exact.
    """
    norms = np.sum(data.X**2, axis=0)
    ok = norms > 0
    if not ok.any():
        return 1.0
    scale = np.abs(data.X[:, ok].T @ data.y) / norms[ok]
    return max(10.0 * float(scale.max()), 1.0)


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def _linear(terms: Iterable[tuple[float, str]]) -> str:
    out = []
    for coef, name in terms:
        if coef == 0:
            continue
        sign = "-" if coef < 0 else "+"
        out.append(f"{sign} {_fmt(abs(coef))} {name}")
    if not out:
        return "0"
    text = " ".join(out)
    return text[2:] if text.startswith("+ ") else text


def export_mio(
    data: Dataset,
    budget: Budget,
    big_m: float | None = None,
    delta: float = 1e-6,
    must_link: Sequence[tuple[int, int]] = (),
    cannot_link: Sequence[tuple[int, int]] = (),
) -> str:
    """Mixed-integer quadratic model of the problem in LP file format.

    Variables are ``b1..bp`` (coefficients), ``g1..gK`` (group values),
    ``a1..aq`` (covariate coefficients) and binaries ``w_j_k`` marking that
    feature ``j`` takes group value ``k`` (``k = 0`` is zero). The objective is
    the expanded residual sum of squares including its constant.
    """
    if big_m is None:
        big_m = default_big_m(data)
    if big_m <= 0 or delta <= 0:
        raise ValueError("big_m and delta must be positive")
    budget.check(data.p)
    p, q, K = data.p, data.q, budget.K
    W = data.W
    G = W.T @ W
    h = W.T @ data.y
    names = [f"b{j + 1}" for j in range(p)] + [f"a{i + 1}" for i in range(q)]
    gam = [f"g{k + 1}" for k in range(K)]

    def w(j, k):
        return f"w_{j + 1}_{k}"

    lines = ["\\ fused sparse least squares", "Minimize"]
    obj = _linear((-2.0 * h[i], names[i]) for i in range(len(names)))
    quad = []
    for i in range(len(names)):
        quad.append((2.0 * G[i, i], f"{names[i]}^2"))
        quad.extend((4.0 * G[i, k], f"{names[i]} * {names[k]}") for k in range(i + 1, len(names)))
    obj_line = f" obj: {obj}"
    if any(c != 0 for c, _ in quad):
        obj_line += f" + [ {_linear(quad)} ] / 2"
    obj_line += f" + {_fmt(float(data.y @ data.y))}"
    lines.append(obj_line)

    lines.append("Subject To")
    M = _fmt(big_m)
    for j in range(p):
        b = names[j]
        lines.append(f" z_up_{j + 1}: {b} + {M} {w(j, 0)} <= {M}")
        lines.append(f" z_lo_{j + 1}: {b} - {M} {w(j, 0)} >= -{M}")
        for k in range(1, K + 1):
            g = gam[k - 1]
            lines.append(f" v_up_{j + 1}_{k}: {b} - {g} + {M} {w(j, k)} <= {M}")
            lines.append(f" v_lo_{j + 1}_{k}: {b} - {g} - {M} {w(j, k)} >= -{M}")
    for k in range(1, K):
        lines.append(f" order_{k}: {gam[k - 1]} - {gam[k]} <= -{_fmt(delta)}")
    for j in range(p):
        row = " + ".join(w(j, k) for k in range(K + 1))
        lines.append(f" assign_{j + 1}: {row} = 1")
    lines.append(f" sparsity: {' + '.join(w(j, 0) for j in range(p))} >= {p - budget.s}")
    for idx, (j1, j2) in enumerate(must_link):
        for k in range(K + 1):
            lines.append(f" must_{idx + 1}_{k}: {w(j1, k)} - {w(j2, k)} = 0")
    for idx, (j1, j2) in enumerate(cannot_link):
        for k in range(K + 1):
            lines.append(f" cannot_{idx + 1}_{k}: {w(j1, k)} + {w(j2, k)} <= 1")

    lines.append("Bounds")
    for v in names + gam:
        lines.append(f" {v} free")
    lines.append("Binaries")
    lines.append(" " + " ".join(w(j, k) for j in range(p) for k in range(K + 1)))
    lines.append("End")
    return "\n".join(lines) + "\n"
