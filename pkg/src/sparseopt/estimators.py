"""Scikit-learn style estimators wrapping the solvers.

These classes make the library compose with the wider ecosystem
(pipelines, grid search, cloning): hyperparameters live in ``__init__``,
``fit(X, y)`` runs a solver and stores ``coef_``, and ``get_params`` /
``set_params`` come from ``BaseEstimator``.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import ValidationError
from .groups import GroupStructure
from .homotopy import lasso_path, path_solution_at, solve_homotopy
from .greedy import omp
from .penalties import (
    ElasticNet,
    GroupL1L2,
    GroupL1Linf,
    HierL1L2,
    HierL1Linf,
    L1,
    L1Ball,
)
from .problem import LOGISTIC, SQUARE, Problem
from .solvers import SolverConfig, get_solver

_PENALTIES = {
    "l1": lambda self: L1(),
    "elastic_net": lambda self: ElasticNet(self.gamma),
    "group_l1l2": lambda self: GroupL1L2(self._structure()),
    "group_l1linf": lambda self: GroupL1Linf(self._structure()),
    "hier_l1l2": lambda self: HierL1L2(self._structure()),
    "hier_l1linf": lambda self: HierL1Linf(self._structure()),
    "l1_ball": lambda self: L1Ball(self.radius),
}


class _SparseLinearBase(BaseEstimator):
    def _structure(self):
        if not isinstance(self.groups, GroupStructure):
            raise ValidationError(
                "penalty %r needs a GroupStructure in `groups`" % self.penalty
            )
        return self.groups

    def _make_penalty(self):
        try:
            factory = _PENALTIES[self.penalty]
        except KeyError:
            raise ValidationError("unknown penalty %r" % (self.penalty,)) from None
        return factory(self)

    def _solve(self, X, y, loss):
        problem = Problem(loss, X, y, self.lam, self._make_penalty()).validate()
        config = SolverConfig(
            tol=self.tol, max_iter=self.max_iter, max_seconds=self.max_seconds
        )
        if self.solver == "homotopy":
            trace = solve_homotopy(problem, config)
        else:
            trace = get_solver(self.solver)(problem, config)
        self.coef_ = trace.final_w
        self.n_iter_ = trace.records[-1].iteration
        self.gap_ = trace.records[-1].duality_gap
        self.converged_ = trace.converged
        self.trace_ = trace
        return self


class SparseRegression(_SparseLinearBase, RegressorMixin):
    """Penalized least-squares regression.

    Parameters
    ----------
    penalty : str
        One of "l1", "elastic_net", "group_l1l2", "group_l1linf",
        "hier_l1l2", "hier_l1linf", "l1_ball".
    lam : float
        Regularization strength (ball radius is `radius` for "l1_ball").
    solver : str
        Solver registry name ("fista", "ista", "cd", "bcd", "rel2", "sg",
        "ws") or "homotopy".
    groups : GroupStructure, optional
        Required by the group and hierarchical penalties.
    """

    def __init__(self, penalty="l1", lam=1.0, gamma=1.0, radius=1.0,
                 groups=None, solver="fista", tol=1e-6, max_iter=100_000,
                 max_seconds=600.0):
        self.penalty = penalty
        self.lam = lam
        self.gamma = gamma
        self.radius = radius
        self.groups = groups
        self.solver = solver
        self.tol = tol
        self.max_iter = max_iter
        self.max_seconds = max_seconds

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        return self._solve(X, y, SQUARE)

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_


class SparseLogistic(_SparseLinearBase, ClassifierMixin):
    """Penalized logistic regression for binary labels.

    Labels may be any two values; they are mapped to {-1, +1} internally
    and ``classes_`` preserves the originals.
    """

    def __init__(self, penalty="l1", lam=1.0, gamma=1.0, radius=1.0,
                 groups=None, solver="fista", tol=1e-6, max_iter=100_000,
                 max_seconds=600.0):
        self.penalty = penalty
        self.lam = lam
        self.gamma = gamma
        self.radius = radius
        self.groups = groups
        self.solver = solver
        self.tol = tol
        self.max_iter = max_iter
        self.max_seconds = max_seconds

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = np.unique(y)
        if self.classes_.size != 2:
            raise ValidationError("binary classification requires two classes")
        signs = np.where(y == self.classes_[1], 1.0, -1.0)
        return self._solve(X, signs, LOGISTIC)

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_

    def predict(self, X):
        scores = self.decision_function(X)
        return np.where(scores >= 0, self.classes_[1], self.classes_[0])


class LassoPath(BaseEstimator, RegressorMixin):
    """Full Lasso regularization path via the homotopy algorithm.

    After ``fit``, ``alphas_`` holds the kink lambdas and ``coef_`` the
    solution at ``lam`` (clipped into the computed range). Solutions at
    other lambdas come from :meth:`solution_at`.
    """

    def __init__(self, lam=None, lambda_min=None, max_kinks=10_000,
                 gamma_en=0.0):
        self.lam = lam
        self.lambda_min = lambda_min
        self.max_kinks = max_kinks
        self.gamma_en = gamma_en

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        self.path_ = lasso_path(
            X, y, lambda_min=self.lambda_min,
            max_kinks=self.max_kinks, gamma_en=self.gamma_en,
        )
        self.alphas_ = np.asarray(self.path_.kinks)
        lam = self.lam if self.lam is not None else self.path_.lambda_min
        lam = max(lam, self.path_.lambda_min)
        self.coef_ = path_solution_at(self.path_, lam)
        return self

    def solution_at(self, lam):
        check_is_fitted(self, "path_")
        return path_solution_at(self.path_, lam)

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_


class OMPRegression(BaseEstimator, RegressorMixin):
    """Orthogonal matching pursuit with a fixed nonzero budget."""

    def __init__(self, n_nonzero_coefs=10, criterion="decrease"):
        self.n_nonzero_coefs = n_nonzero_coefs
        self.criterion = criterion

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        result = omp(X, y, self.n_nonzero_coefs, criterion=self.criterion)
        self.coef_ = result.w
        self.support_ = result.support
        self.residual_norms_ = result.residual_norms
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_
