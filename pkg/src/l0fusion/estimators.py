"""scikit-learn compatible wrappers.

Covariates that must stay in the model unpenalized are passed to ``fit`` and
``predict`` through the ``Z`` keyword.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ._validation import check_budget, check_covariates, check_design
from .screening import ScreeningConfig, cosamp
from .solver import SolveOptions, solve_exact
from .warmstart import WarmStartConfig, warm_start


class _FusedBase(RegressorMixin, BaseEstimator):
    def _store(self, fp, q):
        self.coef_ = fp.beta
        self.alpha_ = fp.alpha.copy()
        self.labels_ = fp.labels.copy()
        self.group_values_ = fp.gamma.copy()
        self.n_features_in_ = fp.p
        self.n_covariates_ = q
        self.params_ = fp

    def predict(self, X, Z=None):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        Z = check_covariates(Z, X.shape[0], self.n_covariates_)
        return X @ self.coef_ + Z @ self.alpha_

    def score(self, X, y, Z=None, sample_weight=None):
        from sklearn.metrics import r2_score

        return r2_score(y, self.predict(X, Z), sample_weight=sample_weight)


class L0FusionRegressor(_FusedBase):
    """Least squares with at most ``n_groups`` distinct nonzero coefficients.

    Args:
        n_groups (int):
            Maximum number of distinct nonzero coefficient values.
        sparsity (int | None):
            Maximum number of nonzero coefficients; ``None`` allows all.
        use_warm_start (bool):
            Seed the search with the projected gradient solution.
        gap_tol (float):
            Relative gap at which the search stops.
        time_limit (float | None):
            Wall-clock budget in seconds.
        node_limit (int | None):
            Maximum number of explored nodes.
        must_link, cannot_link (sequence of pairs):
            Feature pairs forced into the same group or kept apart.

    Attributes:
        coef_ (NDArray): fused coefficients, shape (n_features,).
        alpha_ (NDArray): covariate coefficients.
        labels_ (NDArray): group label per feature (0 = zero).
        group_values_ (NDArray): increasing nonzero values.
        report_ (SolverReport): search statistics.
    """

    def __init__(
        self,
        n_groups: int = 2,
        sparsity: int | None = None,
        use_warm_start: bool = True,
        gap_tol: float = 1e-4,
        time_limit: float | None = None,
        node_limit: int | None = None,
        must_link=(),
        cannot_link=(),
    ):
        self.n_groups = n_groups
        self.sparsity = sparsity
        self.use_warm_start = use_warm_start
        self.gap_tol = gap_tol
        self.time_limit = time_limit
        self.node_limit = node_limit
        self.must_link = must_link
        self.cannot_link = cannot_link

    def fit(self, X, y, Z=None):
        data = check_design(X, y, Z)
        budget = check_budget(self.n_groups, self.sparsity, data.p)
        opts = SolveOptions(
            use_warm_start=self.use_warm_start,
            gap_tol=self.gap_tol,
            node_limit=self.node_limit,
            time_limit=self.time_limit,
            must_link=self.must_link,
            cannot_link=self.cannot_link,
        )
        fp, report = solve_exact(data, budget, opts)
        self._store(fp, data.q)
        self.report_ = report
        return self


class ProjectedGradientRegressor(_FusedBase):
    """Fast approximate fit by projected gradient steps.

    Args:
        n_groups (int): maximum number of distinct nonzero values.
        sparsity (int | None): maximum number of nonzeros, ``None`` for all.
        step (float | None): inverse step size; must exceed the gradient
            Lipschitz constant. ``None`` picks a safe default.
        tol (float | None): stop when the objective decreases by at most this.
        max_iter (int): iteration cap.
    """

    def __init__(self, n_groups=2, sparsity=None, step=None, tol=None, max_iter=10_000):
        self.n_groups = n_groups
        self.sparsity = sparsity
        self.step = step
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y, Z=None):
        data = check_design(X, y, Z)
        budget = check_budget(self.n_groups, self.sparsity, data.p)
        fp, trace = warm_start(
            data, budget, WarmStartConfig(L=self.step, eps=self.tol, max_iters=self.max_iter)
        )
        self._store(fp, data.q)
        self.trace_ = trace
        self.n_iter_ = trace.n_iter
        return self


class CoSaMPSelector(SelectorMixin, BaseEstimator):
    """Feature screening by CoSaMP; ``transform`` keeps the selected columns.

    Args:
        n_features_to_select (int): size of the kept set.
        expand (int | None): coordinates added per iteration.
        tol (float | None): convergence threshold on successive iterates.
        max_iter (int): iteration cap.
    """

    def __init__(self, n_features_to_select=10, expand=None, tol=None, max_iter=200):
        self.n_features_to_select = n_features_to_select
        self.expand = expand
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        cfg = ScreeningConfig(
            self.n_features_to_select, self.expand, self.tol, self.max_iter
        )
        res = cosamp(X, y, cfg)
        self.support_ = res.support
        self.coef_ = res.coef
        self.n_iter_ = res.iterations
        self.converged_ = res.converged
        self.n_features_in_ = X.shape[1]
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "support_")
        mask = np.zeros(self.n_features_in_, dtype=bool)
        mask[self.support_] = True
        return mask
