"""Independent reference computations used only by the tests.

Nothing here calls into the package's algorithmic code; each function is a
direct, slow transcription of the quantity it checks.
"""

import itertools
import math

import numpy as np


def canonical_patterns(p, K):
    """All label vectors over {0..K} with nonzero labels in first-use order."""
    for labels in itertools.product(range(K + 1), repeat=p):
        used = [l for l in labels if l > 0]
        first = list(dict.fromkeys(used))
        if first == list(range(1, len(first) + 1)):
            yield np.array(labels)


def projection_distance(c_beta, K, s):
    """Smallest squared distance from ``c_beta`` to a point with <= K values and <= s nonzeros."""
    c = np.asarray(c_beta, dtype=float)
    best = math.inf
    for labels in canonical_patterns(c.size, K):
        if np.count_nonzero(labels) > s:
            continue
        beta = np.zeros_like(c)
        for k in range(1, labels.max(initial=0) + 1):
            sel = labels == k
            beta[sel] = c[sel].mean()
        best = min(best, float(np.sum((beta - c) ** 2)))
    return best


def collapsed_rss(y, X, Z, labels):
    cols = [X[:, labels == k].sum(axis=1) for k in range(1, labels.max(initial=0) + 1)]
    A = np.column_stack(cols + [Z]) if cols or Z.shape[1] else np.zeros((len(y), 0))
    if A.shape[1] == 0:
        return float(y @ y)
    coef = np.linalg.pinv(A) @ y
    r = y - A @ coef
    return float(r @ r)


def enumerate_optimum(y, X, Z, K, s):
    """Global minimum of the fused sparse least-squares problem by enumeration."""
    best = math.inf
    for labels in canonical_patterns(X.shape[1], K):
        if np.count_nonzero(labels) <= s:
            best = min(best, collapsed_rss(y, X, Z, labels))
    return best


def nmi_formula(a, b):
    """NMI straight from the definition, labels given as integer lists."""
    n = len(a)
    pa = {x: a.count(x) / n for x in set(a)}
    pb = {x: b.count(x) / n for x in set(b)}
    joint = {}
    for x, y in zip(a, b):
        joint[x, y] = joint.get((x, y), 0) + 1 / n
    mi = sum(v * math.log(v / (pa[x] * pb[y])) for (x, y), v in joint.items())
    h1 = -sum(v * math.log(v) for v in pa.values())
    h2 = -sum(v * math.log(v) for v in pb.values())
    if h1 == 0 and h2 == 0:
        return 1.0
    return mi / ((h1 + h2) / 2)


def groups_of(beta):
    beta = np.asarray(beta, dtype=float)
    return [set(np.flatnonzero(beta == v).tolist()) for v in np.unique(beta[beta != 0])]


def distance_by_maps(g1, g2):
    """Grouping distance by trying every injective map from the smaller side."""
    if len(g1) > len(g2):
        g1, g2 = g2, g1
    total = sum(len(g) for g in g2)
    best = 0
    for image in itertools.permutations(range(len(g2)), len(g1)):
        best = max(best, sum(len(g1[i] & g2[j]) for i, j in enumerate(image)))
    return total - best
