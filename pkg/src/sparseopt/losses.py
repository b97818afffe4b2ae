"""Square and logistic empirical risks: values, gradients, curvature bounds,
Fenchel conjugates of the sample-space loss, and dual-point construction.

Throughout, the smooth part of the objective is ``f(w) = psi(X w) / n`` where
``psi`` is the unnormalized sample-space loss,

    square:   psi(u) = 0.5 * ||y - u||^2
    logistic: psi(u) = sum_i log(1 + exp(-y_i u_i)),

so ``f`` is the mean loss. :func:`conjugate_psi` evaluates the conjugate of
the unnormalized ``psi``; the duality-gap code accounts for the 1/n scaling.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatch, UnsupportedLoss
from .problem import LOGISTIC, SQUARE


@dataclass(frozen=True)
class LossEval:
    value: float
    gradient: np.ndarray | None


def _log1pexp(x):
    """log(1 + e^x) without overflow: x + log(1 + e^-x) for x > 0."""
    out = np.empty_like(x)
    pos = x > 0
    out[pos] = x[pos] + np.log1p(np.exp(-x[pos]))
    out[~pos] = np.log1p(np.exp(x[~pos]))
    return out


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def loss_value_grad(problem, w, want_grad=True):
    """Mean loss value and gradient at ``w``.

    square:   value ||y - Xw||^2 / (2n),  gradient X^T (Xw - y) / n
    logistic: value mean log(1 + exp(-y * Xw)),
              gradient -X^T (y * sigmoid(-y * Xw)) / n
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (problem.p,):
        raise DimensionMismatch("w has wrong length")
    Xw = problem.X @ w
    return _value_grad_from_scores(problem, Xw, want_grad)


def _value_grad_from_scores(problem, Xw, want_grad=True):
    """Same as loss_value_grad but reusing a precomputed Xw."""
    n = problem.n
    if problem.loss == SQUARE:
        r = Xw - problem.y
        value = 0.5 * float(r @ r) / n
        grad = (problem.X.T @ r) / n if want_grad else None
    elif problem.loss == LOGISTIC:
        m = problem.y * Xw
        value = float(_log1pexp(-m).sum()) / n
        if want_grad:
            grad = -(problem.X.T @ (problem.y * _sigmoid(-m))) / n
        else:
            grad = None
    else:
        raise UnsupportedLoss(problem.loss)
    return LossEval(value, grad)


def logistic_margin_diff(problem, margins, delta):
    """Change of the mean logistic loss when margins ``y * Xw`` move by
    ``delta``, computed without cancellation:

        log1pexp(-(m + d)) - log1pexp(-m) = log1p(sigmoid(-m) * expm1(-d)).

    Accurate even when the change is far below the loss value itself, which
    the coordinate methods need to certify tiny line-search steps.
    """
    return float(np.log1p(_sigmoid(-margins) * np.expm1(-delta)).sum()) / problem.n


def square_residual_diff(problem, r, dr):
    """Change of the mean square loss when the residual moves from ``r`` to
    ``r - dr``: (-2 r @ dr + ||dr||^2) / (2n), exact for tiny steps."""
    return (-2.0 * float(r @ dr) + float(dr @ dr)) / (2.0 * problem.n)


def grad_psi_scaled(problem, Xw):
    """Gradient of ``psi(.)/n`` in sample space, i.e. d f / d(Xw)."""
    n = problem.n
    if problem.loss == SQUARE:
        return (Xw - problem.y) / n
    if problem.loss == LOGISTIC:
        m = problem.y * Xw
        return -(problem.y * _sigmoid(-m)) / n
    raise UnsupportedLoss(problem.loss)


def coordinate_curvatures(problem):
    """Upper bounds on the diagonal Hessian entries, per column of X."""
    col_sq = np.einsum("ij,ij->j", problem.X, problem.X)
    if problem.loss == SQUARE:
        return col_sq / problem.n
    return col_sq / (4.0 * problem.n)


def lipschitz_bound(problem, tol=1e-9, max_iter=10_000):
    """Gradient Lipschitz constant via power iteration on X^T X / n.

    For the logistic loss the sample-space Hessian is bounded by 1/4, so the
    bound is ``lambda_max(X^T X) / (4n)``. The start vector is drawn from a
    fixed-seed generator so the bound is deterministic.
    """
    X = problem.X
    n, p = X.shape
    rng = np.random.default_rng(0)
    v = rng.standard_normal(p)
    v /= np.linalg.norm(v)
    rho_prev = 0.0
    for _ in range(max_iter):
        z = X.T @ (X @ v)
        nz = np.linalg.norm(z)
        if nz == 0.0:
            rho_prev = 0.0
            break
        v = z / nz
        rho = float(v @ (X.T @ (X @ v)))
        if abs(rho - rho_prev) <= tol * max(rho, 1.0):
            rho_prev = rho
            break
        rho_prev = rho
    lam_max = rho_prev / n
    if problem.loss == LOGISTIC:
        lam_max /= 4.0
    return lam_max


def conjugate_psi(problem, beta):
    """Fenchel conjugate of the unnormalized sample-space loss ``psi``.

    square:   0.5 * ||beta||^2 + beta @ y
    logistic: sum_i (1 + b_i) log(1 + b_i) - b_i log(-b_i) with
              b_i = beta_i y_i, finite only when -b_i lies in [0, 1]
              (0 log 0 := 0); returns +inf outside that domain rather than
              raising, so gap computations stay monotone-safe.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (problem.n,):
        raise DimensionMismatch("beta must have length n")
    if problem.loss == SQUARE:
        return 0.5 * float(beta @ beta) + float(beta @ problem.y)
    if problem.loss == LOGISTIC:
        b = beta * problem.y
        if np.any(b > 0.0) or np.any(b < -1.0):
            return float("inf")
        one_plus = 1.0 + b
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = np.where(one_plus > 0.0, one_plus * np.log(one_plus), 0.0)
            t2 = np.where(b < 0.0, b * np.log(-b), 0.0)
        return float(np.sum(t1 - t2))
    raise UnsupportedLoss(problem.loss)


def dual_point(problem, w):
    """Feasible dual candidate built from the gradient, no matrix inversion.

    Returns ``(alpha, feasible)`` where ``alpha = c * grad`` with
    ``grad = d f / d(Xw)`` and ``c = min(1, lam / Omega*(X^T grad))``. The
    scaling guarantees ``Omega*(X^T alpha) <= lam``; at an optimum ``c = 1``
    and alpha is the gradient itself. ``-psi*(n alpha)/n`` is then a valid
    lower bound on the optimal objective.
    """
    w = np.asarray(w, dtype=float)
    g = grad_psi_scaled(problem, problem.X @ w)
    z = problem.X.T @ g
    dn = problem.penalty.dual_norm(z)
    if problem.lam == 0.0:
        c = 0.0
    elif dn <= problem.lam or dn == 0.0:
        c = 1.0
    else:
        c = problem.lam / dn
    alpha = c * g
    feasible = c * dn <= problem.lam * (1.0 + 1e-12)
    return alpha, bool(feasible)
