"""Points of the constrained parameter space and unlabeled groupings.

A point is stored as integer labels per feature (0 = zero coefficient,
k >= 1 = k-th smallest nonzero value), the sorted nonzero group values and
the unpenalized coefficients. Groups are defined by exact floating equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray


@dataclass(frozen=True)
class Budget:
    """At most ``K`` distinct nonzero values and at most ``s`` nonzero features."""

    K: int
    s: int

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K}")
        if int(self.s) != self.s or self.s < 0:
            raise ValueError(f"s must be a nonnegative integer, got {self.s}")
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "s", int(self.s))

    def check(self, p: int) -> "Budget":
        if self.s > p:
            raise ValueError(f"s={self.s} exceeds the number of features p={p}")
        return self


@dataclass(frozen=True, eq=False)
class FusedParams:
    labels: NDArray[np.int64]
    gamma: NDArray[np.float64]
    alpha: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).ravel()
        gamma = np.asarray(self.gamma, dtype=float).ravel()
        alpha = np.asarray(self.alpha, dtype=float).ravel()
        if labels.size and (labels.min() < 0 or labels.max() > gamma.size):
            raise ValueError("labels must lie in 0..len(gamma)")
        if np.any(gamma == 0):
            raise ValueError("group values must be nonzero")
        if gamma.size > 1 and np.any(np.diff(gamma) <= 0):
            raise ValueError("group values must be strictly increasing")
        used = np.unique(labels[labels > 0])
        if used.size != gamma.size:
            raise ValueError("every group must contain at least one feature")
        for arr in (labels, gamma, alpha):
            arr.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "alpha", alpha)

    @property
    def p(self) -> int:
        return self.labels.size

    @property
    def n_groups(self) -> int:
        return self.gamma.size

    @property
    def n_nonzero(self) -> int:
        return int(np.count_nonzero(self.labels))

    @property
    def beta(self) -> NDArray[np.float64]:
        return to_beta(self)

    @property
    def theta(self) -> NDArray[np.float64]:
        """Stacked ``(beta, alpha)``."""
        return np.concatenate([self.beta, self.alpha])

    def grouping(self) -> "Grouping":
        return grouping_of(self.beta)

    def in_budget(self, budget: Budget) -> bool:
        return self.n_groups <= budget.K and self.n_nonzero <= budget.s

    def with_alpha(self, alpha: ArrayLike) -> "FusedParams":
        return FusedParams(self.labels, self.gamma, alpha)

    def __eq__(self, other):
        if not isinstance(other, FusedParams):
            return NotImplemented
        return (
            np.array_equal(self.labels, other.labels)
            and np.array_equal(self.gamma, other.gamma)
            and np.array_equal(self.alpha, other.alpha)
        )

    def __hash__(self):
        return hash((self.labels.tobytes(), self.gamma.tobytes(), self.alpha.tobytes()))

    def __repr__(self):
        return (
            f"FusedParams(labels={self.labels.tolist()}, gamma={self.gamma.tolist()}, "
            f"alpha={self.alpha.tolist()})"
        )

    @classmethod
    def zeros(cls, p: int, q: int = 0) -> "FusedParams":
        return cls(np.zeros(p, dtype=np.int64), np.zeros(0), np.zeros(q))


def to_beta(fp: FusedParams) -> NDArray[np.float64]:
    full = np.concatenate([[0.0], fp.gamma])
    return full[fp.labels]


def from_beta(beta: ArrayLike, alpha: ArrayLike | None = None) -> FusedParams:
    """Canonical parameters for a coefficient vector.

    Distinct nonzero values become the sorted group values; zeros get label 0.
    """
    beta = np.asarray(beta, dtype=float).ravel()
    nz = beta != 0
    gamma = np.unique(beta[nz])
    labels = np.zeros(beta.size, dtype=np.int64)
    labels[nz] = np.searchsorted(gamma, beta[nz]) + 1
    return FusedParams(labels, gamma, np.zeros(0) if alpha is None else alpha)


class Grouping(frozenset):
    """Unlabeled partition of the nonzero feature indices (0-based).

    A frozenset of frozensets, so two groupings compare equal exactly when
    they contain the same index sets.
    """

    def __new__(cls, groups=()):
        groups = [frozenset(int(i) for i in g) for g in groups]
        if any(not g for g in groups):
            raise ValueError("groups must be nonempty")
        seen: set[int] = set()
        for g in groups:
            if seen & g:
                raise ValueError("groups must be pairwise disjoint")
            seen |= g
        if any(i < 0 for i in seen):
            raise ValueError("indices must be nonnegative")
        return super().__new__(cls, groups)

    @property
    def support(self) -> frozenset[int]:
        return frozenset().union(*self) if self else frozenset()

    def sorted_groups(self) -> list[list[int]]:
        return sorted(sorted(g) for g in self)

    def labels(self, p: int) -> NDArray[np.int64]:
        """Label vector with groups numbered by their smallest index."""
        out = np.zeros(p, dtype=np.int64)
        for k, g in enumerate(self.sorted_groups(), start=1):
            if g[-1] >= p:
                raise ValueError(f"index {g[-1]} out of range for p={p}")
            out[g] = k
        return out

    def __repr__(self):
        return f"Grouping({self.sorted_groups()})"


def grouping_of(beta: ArrayLike) -> Grouping:
    beta = np.asarray(beta, dtype=float).ravel()
    groups: dict[float, list[int]] = {}
    for j, b in enumerate(beta):
        if b != 0:
            groups.setdefault(float(b), []).append(j)
    return Grouping(groups.values())


def grouping_from_labels(labels: ArrayLike) -> Grouping:
    """Grouping induced by an integer label vector (label 0 = zero)."""
    labels = np.asarray(labels).ravel()
    return Grouping(np.flatnonzero(labels == k) for k in np.unique(labels[labels != 0]))
