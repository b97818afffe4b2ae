"""Greedy and nonconvex methods: matching pursuit, orthogonal matching
pursuit, iterative hard thresholding, and DC-programming reweighted-l1.

The pursuit methods assume unit-norm columns; inputs are normalized
internally and coefficients are reported in the original coordinates.
"""

import math
import time
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .exceptions import NonPositiveParameter, UnsupportedLoss, UnsupportedPenalty
from .groups import singleton_structure
from .penalties import GroupL1L2, L1
from .problem import SQUARE, Problem, SolverTrace
from .solvers import SolverConfig, _initial_l, get_solver
from .losses import _value_grad_from_scores, loss_value_grad


@dataclass
class GreedyResult:
    """Selected support (in selection order), coefficients in the original
    coordinates, and the residual norm after each step."""

    support: list
    w: np.ndarray
    residual_norms: list


def _normalized(X):
    X = np.asarray(X, dtype=float)
    scales = np.sqrt(np.einsum("ij,ij->j", X, X))
    safe = np.where(scales > 0, scales, 1.0)
    return X / safe, safe


def matching_pursuit(X, y, s, max_steps):
    """Residual-correlation pursuit; may revisit an index.

    Each step adds the residual's projection on the most-correlated column
    to that coefficient, so the squared residual norm drops by exactly the
    squared correlation. Stops once the support holds ``s`` distinct
    indices or after ``max_steps`` updates.
    """
    Xn, scales = _normalized(X)
    y = np.asarray(y, dtype=float)
    p = Xn.shape[1]
    w = np.zeros(p)
    r = y.copy()
    support = []
    norms = [float(np.linalg.norm(r))]
    for _ in range(max_steps):
        c = Xn.T @ r
        i = int(np.argmax(np.abs(c)))
        if c[i] == 0.0:
            break
        w[i] += c[i]
        r = r - c[i] * Xn[:, i]
        if i not in support:
            support.append(i)
        norms.append(float(np.linalg.norm(r)))
        if np.count_nonzero(w) >= s:
            break
    return GreedyResult(support, w / scales, norms)


def omp(X, y, s, criterion="decrease"):
    """Orthogonal matching pursuit with exact least-squares refits.

    Forward selection keeps the residual orthogonal to every selected
    column by refitting on the active set each step through a rank-one
    Cholesky update. ``criterion`` picks the entering column by residual
    correlation ("corr") or by exact decrease of the squared residual
    ("decrease", the default). Columns (numerically) inside the span of the
    active set are rejected in favor of the next-best candidate; if every
    remaining candidate is rejected the run stops early.
    """
    if criterion not in ("decrease", "corr"):
        raise ValueError("criterion must be 'decrease' or 'corr'")
    Xn, scales = _normalized(X)
    y = np.asarray(y, dtype=float)
    p = Xn.shape[1]
    w = np.zeros(p)
    r = y.copy()
    support = []
    norms = [float(np.linalg.norm(r))]
    R = np.zeros((0, 0))  # Cholesky factor of Xn_J^T Xn_J
    for _ in range(min(s, p)):
        corr = Xn.T @ r
        if support:
            corr[support] = 0.0
        if not np.any(corr):
            break
        # span test / selection gain per candidate
        gains = np.full(p, -np.inf)
        for i in range(p):
            if i in support or corr[i] == 0.0:
                continue
            if support:
                g = Xn[:, support].T @ Xn[:, i]
                z = solve_triangular(R.T, g, lower=True)
                denom = 1.0 - float(z @ z)
            else:
                z = None
                denom = 1.0
            if denom <= 1e-12:
                continue  # inside the active span: reject
            if criterion == "corr":
                gains[i] = abs(corr[i])
            else:
                gains[i] = corr[i] * corr[i] / denom
        i = int(np.argmax(gains))
        if not math.isfinite(gains[i]):
            break  # every candidate rejected
        # Cholesky append for the accepted column
        if support:
            g = Xn[:, support].T @ Xn[:, i]
            z = solve_triangular(R.T, g, lower=True)
            d2 = 1.0 - float(z @ z)
            k = R.shape[0]
            R_new = np.zeros((k + 1, k + 1))
            R_new[:k, :k] = R
            R_new[:k, k] = z
            R_new[k, k] = math.sqrt(d2)
            R = R_new
        else:
            R = np.array([[1.0]])
        support.append(i)
        wj = cho_solve((R, False), Xn[:, support].T @ y)
        r = y - Xn[:, support] @ wj
        norms.append(float(np.linalg.norm(r)))
    w = np.zeros(p)
    if support:
        w[support] = wj
    return GreedyResult(support, w / scales, norms)


def _hard_threshold(v, s):
    """Keep the s largest magnitudes; ties resolved toward the lowest index."""
    if s <= 0:
        return np.zeros_like(v)
    if s >= v.size:
        return v.copy()
    order = np.argsort(-np.abs(v), kind="stable")
    out = np.zeros_like(v)
    keep = order[:s]
    out[keep] = v[keep]
    return out


def iht(problem, s, config=None):
    """Iterative hard thresholding for the l0-constrained square loss.

    Projected gradient on ``{||w||_0 <= s}`` with the same backtracked step
    constant as the proximal solvers, which keeps the objective
    nonincreasing. Stops when the iterate stalls (sup-norm change below
    1e-10) or the budget runs out.
    """
    config = config or SolverConfig()
    problem.validate()
    if problem.loss != SQUARE:
        raise UnsupportedLoss("iht requires the square loss")
    s = int(s)
    X, y = problem.X, problem.y
    p = problem.p
    w = np.zeros(p)
    norms = [float(np.linalg.norm(y))]
    if s == 0:
        return GreedyResult([], w, norms)
    L = _initial_l(problem, config)
    Xw = X @ w
    fval = _value_grad_from_scores(problem, Xw, want_grad=False).value
    t0 = time.perf_counter()
    for _ in range(config.max_iter):
        grad = _value_grad_from_scores(problem, Xw).gradient
        for _bt in range(200):
            w_new = _hard_threshold(w - grad / L, s)
            Xw_new = X @ w_new
            f_new = _value_grad_from_scores(problem, Xw_new, want_grad=False).value
            d = w_new - w
            quad = fval + float(grad @ d) + 0.5 * L * float(d @ d)
            if f_new <= quad + 1e-12 * max(1.0, abs(quad)):
                break
            L *= config.line_search_factor
        delta = float(np.abs(w_new - w).max(initial=0.0))
        w, Xw, fval = w_new, Xw_new, f_new
        norms.append(float(np.linalg.norm(y - Xw)))
        if delta <= 1e-10:
            break
        if time.perf_counter() - t0 > config.max_seconds:
            break
    support = np.flatnonzero(w).tolist()
    return GreedyResult(support, w, norms)


class ConcavePenalty:
    """Separable concave penalty ``sum_j zeta(|w_j|)`` with an evaluable,
    positive, nonincreasing derivative on [0, inf)."""

    def value(self, t):
        raise NotImplementedError

    def derivative(self, t):
        raise NotImplementedError


class LogEps(ConcavePenalty):
    """zeta(t) = log(t + eps); derivative 1 / (t + eps)."""

    def __init__(self, eps):
        if eps <= 0:
            raise NonPositiveParameter("eps must be positive")
        self.eps = float(eps)

    def value(self, t):
        return np.log(np.asarray(t) + self.eps)

    def derivative(self, t):
        return 1.0 / (np.asarray(t) + self.eps)


class LqEps(ConcavePenalty):
    """zeta(t) = (t + eps)^q for q in (0, 1); derivative q (t + eps)^(q-1)."""

    def __init__(self, q, eps):
        if not 0.0 < q < 1.0:
            raise NonPositiveParameter("q must lie in (0, 1)")
        if eps <= 0:
            raise NonPositiveParameter("eps must be positive")
        self.q = float(q)
        self.eps = float(eps)

    def value(self, t):
        return (np.asarray(t) + self.eps) ** self.q

    def derivative(self, t):
        return self.q * (np.asarray(t) + self.eps) ** (self.q - 1.0)


def reweighted_l1(problem, zeta, outer_iters, inner="fista", config=None):
    """Majorize-minimize scheme for concave separable penalties.

    Outer iteration ``k`` solves the weighted Lasso with weights
    ``zeta'(|w_j^k|)`` (a plain Lasso at ``k = 0``, where the weights are
    uniform), each inner solve to duality gap 1e-8 with a warm start. The
    concave-penalized objective is nonincreasing across outer iterations;
    an explicit monotone safeguard keeps the previous iterate if an inexact
    inner solve ever fails to improve it. ``meta["support_history"]``
    records the support after every outer step.
    """
    config = config or SolverConfig()
    problem.validate()
    pen = problem.penalty
    if isinstance(pen, L1):
        base_weights = np.ones(problem.p)
    elif isinstance(pen, GroupL1L2) and all(len(g) == 1 for g in pen.structure):
        base_weights = np.array([g.weight for g in pen.structure])
    else:
        raise UnsupportedPenalty("reweighted-l1 needs a separable l1-shaped penalty")
    if not isinstance(zeta, ConcavePenalty):
        raise UnsupportedPenalty("zeta must be a ConcavePenalty")
    lam = problem.lam
    inner_fn = get_solver(inner)
    inner_config = replace(config, tol=1e-8)

    def nonconvex_objective(w):
        f = loss_value_grad(problem, w).value
        return f + lam * float(np.sum(zeta.value(base_weights * np.abs(w))))

    t0 = time.perf_counter()
    trace = SolverTrace([], None, False)
    w = np.zeros(problem.p)
    obj = nonconvex_objective(w)
    trace.append(0, 0.0, obj, None)
    supports = []
    zeta_weights = np.ones(problem.p)  # first solve is a plain Lasso
    for k in range(1, outer_iters + 1):
        sub_pen = GroupL1L2(
            singleton_structure(problem.p, zeta_weights * base_weights)
        )
        sub = Problem(problem.loss, problem.X, problem.y, lam, sub_pen)
        sub_trace = inner_fn(sub, inner_config, w0=w)
        w_new = sub_trace.final_w
        obj_new = nonconvex_objective(w_new)
        if obj_new <= obj:
            w, obj = w_new, obj_new
        trace.append(k, time.perf_counter() - t0, obj, None)
        supports.append(tuple(np.flatnonzero(w).tolist()))
        zeta_weights = zeta.derivative(base_weights * np.abs(w))
    stabilized_at = None
    for k in range(1, len(supports)):
        if supports[k] == supports[k - 1]:
            stabilized_at = k + 1
            break
    trace.final_w = w
    trace.converged = True
    trace.meta["support_history"] = supports
    trace.meta["stabilized_at"] = stabilized_at
    return trace
