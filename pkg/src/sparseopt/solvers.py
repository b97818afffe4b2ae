"""First-order, coordinate-wise, reweighted, and working-set solvers.

All solvers minimize ``f(w) + lam * Omega(w)`` for a validated
:class:`~sparseopt.problem.Problem` and return a
:class:`~sparseopt.problem.SolverTrace`. Stopping is gap-based: a run is
``converged`` once the relative duality gap ``gap / max(|objective|, 1)``
drops below ``config.tol``. Two documented substitutes apply where no gap
exists: for ``lam = 0`` the scaled gradient norm is used, and for the
l1-ball constraint the projected-gradient fixed-point residual.

Gap checks cost a matrix-vector product, so they run every iteration only
for small problems (p <= 1000) and every 10 iterations otherwise; cyclic
methods check once per full sweep.
"""

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .duality import duality_gap
from .exceptions import (
    UnknownSolver,
    UnsupportedLoss,
    UnsupportedPenalty,
)
from .groups import PARTITION, Group, GroupStructure
from .losses import (
    _sigmoid,
    _value_grad_from_scores,
    coordinate_curvatures,
    logistic_margin_diff,
    loss_value_grad,
    square_residual_diff,
)
from .penalties import (
    ElasticNet,
    GroupL1L2,
    GroupL1Linf,
    L1,
    L1Ball,
    soft_threshold,
)
from .problem import LOGISTIC, SQUARE, Problem, SolverTrace


@dataclass(frozen=True)
class ArmijoParams:
    """Parameters of the modified Armijo condition used by the coordinate
    methods with non-quadratic losses."""

    sigma: float = 0.1
    gamma: float = 0.5
    beta: float = 0.5
    alpha0: float = 1.0


@dataclass(frozen=True)
class EpsilonSchedule:
    """Smoothing schedule for the reweighted-l2 scheme: start value, shrink
    factor applied when the iterate stalls, and the floor."""

    start: float = 1e-2
    shrink: float = 0.1
    floor: float = 1e-8


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-6
    max_iter: int = 100_000
    max_seconds: float = 600.0
    line_search_factor: float = 2.0
    #: multiplier on the cheap column-norm bound used to seed the step
    #: constant; backtracking corrects upward.
    l0_scale: float = 1.0
    seed: int = 0
    armijo: ArmijoParams = ArmijoParams()
    epsilon_schedule: EpsilonSchedule = EpsilonSchedule()
    #: subgradient stepsize a / (t + b)^beta
    sg_a: float = 1.0
    sg_b: float = 0.0
    sg_beta: float = 0.5
    #: units admitted per working-set round
    ws_batch: int = 1
    #: largest p for which coordinate descent precomputes the Gram matrix
    cd_gram_limit: int = 4096
    #: gap-check cadence; None picks 1 for p <= 1000 and 10 otherwise
    gap_every: int | None = None


def _initial_l(problem, config):
    col_sq = np.einsum("ij,ij->j", problem.X, problem.X)
    l0 = config.l0_scale * float(col_sq.max()) / problem.n
    return max(l0, 1e-12)


class _Monitor:
    """Wall clock, trace bookkeeping, and the relative stopping measure."""

    def __init__(self, problem, config, cadence=None):
        self.problem = problem
        self.config = config
        self.t0 = time.perf_counter()
        self.trace = SolverTrace([], None, False)
        if cadence is not None:
            self.cadence = cadence
        elif config.gap_every is not None:
            self.cadence = config.gap_every
        else:
            self.cadence = 1 if problem.p <= 1000 else 10

    def elapsed(self):
        return time.perf_counter() - self.t0

    def out_of_budget(self):
        return self.elapsed() > self.config.max_seconds

    def due(self, t):
        return t % self.cadence == 0

    def measure(self, w, fval, grad, L=1.0, Xw=None):
        """Return (objective, gap-or-None, relative stopping measure)."""
        problem = self.problem
        pen = problem.penalty
        if pen.is_constraint:
            obj = fval if pen.feasible(w) else math.inf
            step = pen.prox(w - grad / L, 0.0)
            resid = L * float(np.abs(w - step).max(initial=0.0))
            return obj, None, resid / max(abs(obj), 1.0)
        if problem.lam == 0.0:
            rel = float(np.abs(grad).max(initial=0.0)) / max(abs(fval), 1.0)
            return fval, None, rel
        cert = duality_gap(problem, w, Xw=Xw, grad=grad)
        rel = cert.gap / max(abs(cert.primal), 1.0)
        return cert.primal, cert.gap, rel

    def finish(self, w, converged):
        self.trace.final_w = np.asarray(w, dtype=float).copy()
        self.trace.converged = bool(converged)
        return self.trace


def _penalty_value(problem, w):
    if problem.penalty.is_constraint or problem.lam == 0.0:
        return 0.0
    return problem.lam * problem.penalty.value(w)


# ---------------------------------------------------------------------------
# proximal-gradient methods


def _backtrack_prox_step(problem, config, base, Xbase, fbase, grad, L):
    """Largest step constant (by doubling) passing the descent test at
    ``base``; returns (w_new, Xw_new, f_new, L)."""
    X = problem.X
    mu_pen = problem.penalty
    slack = 1e-12
    for _ in range(200):
        w_new = mu_pen.prox(base - grad / L, problem.lam / L)
        Xw_new = X @ w_new
        f_new = _value_grad_from_scores(problem, Xw_new, want_grad=False).value
        d = w_new - base
        quad = fbase + float(grad @ d) + 0.5 * L * float(d @ d)
        if f_new <= quad + slack * max(1.0, abs(quad)):
            return w_new, Xw_new, f_new, L
        L *= config.line_search_factor
    return w_new, Xw_new, f_new, L


def solve_ista(problem, config=None, w0=None):
    """Proximal gradient descent with backtracking line search.

    Each iteration linearizes ``f`` at the current point and applies the
    penalty's prox with scale ``lam / L``; ``L`` grows by
    ``config.line_search_factor`` until the quadratic upper bound holds, so
    the objective never increases.
    """
    config = config or SolverConfig()
    problem.validate()
    mon = _Monitor(problem, config)
    w = np.zeros(problem.p) if w0 is None else np.array(w0, dtype=float)
    L = _initial_l(problem, config)
    Xw = problem.X @ w
    ev = _value_grad_from_scores(problem, Xw)
    fval, grad = ev.value, ev.gradient
    obj, gap, rel = mon.measure(w, fval, grad, L, Xw=Xw)
    mon.trace.append(0, mon.elapsed(), obj, gap)
    if rel <= config.tol:
        return mon.finish(w, True)
    converged = False
    for t in range(1, config.max_iter + 1):
        w, Xw, fval, L = _backtrack_prox_step(
            problem, config, w, Xw, fval, grad, L
        )
        grad = _value_grad_from_scores(problem, Xw).gradient
        if mon.due(t) or t == config.max_iter:
            obj, gap, rel = mon.measure(w, fval, grad, L, Xw=Xw)
            mon.trace.append(t, mon.elapsed(), obj, gap)
            if rel <= config.tol:
                converged = True
                break
            if mon.out_of_budget():
                break
    mon.trace.meta["final_L"] = L
    return mon.finish(w, converged)


def solve_fista(problem, config=None, w0=None):
    """Accelerated proximal gradient (two-sequence momentum scheme).

    Momentum follows ``t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2`` with the same
    backtracking test as :func:`solve_ista`, applied at the extrapolated
    point. The objective is recorded as-is; accelerated steps need not be
    monotone. ``meta["L_by_iter"]`` stores the step constant in force at
    every iteration, which certifies the O(1/t^2) objective bound.
    """
    config = config or SolverConfig()
    problem.validate()
    mon = _Monitor(problem, config)
    w = np.zeros(problem.p) if w0 is None else np.array(w0, dtype=float)
    L = _initial_l(problem, config)
    X = problem.X
    Xw = X @ w
    y = w.copy()
    Xy = Xw.copy()
    tk = 1.0
    ev = _value_grad_from_scores(problem, Xw)
    obj, gap, rel = mon.measure(w, ev.value, ev.gradient, L, Xw=Xw)
    mon.trace.append(0, mon.elapsed(), obj, gap)
    if rel <= config.tol:
        return mon.finish(w, True)
    L_by_iter = []
    converged = False
    for t in range(1, config.max_iter + 1):
        ev_y = _value_grad_from_scores(problem, Xy)
        w_new, Xw_new, f_new, L = _backtrack_prox_step(
            problem, config, y, Xy, ev_y.value, ev_y.gradient, L
        )
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
        m = (tk - 1.0) / t_next
        y = w_new + m * (w_new - w)
        Xy = Xw_new + m * (Xw_new - Xw)
        w, Xw, tk = w_new, Xw_new, t_next
        L_by_iter.append(L)
        if mon.due(t) or t == config.max_iter:
            grad_w = _value_grad_from_scores(problem, Xw).gradient
            obj, gap, rel = mon.measure(w, f_new, grad_w, L, Xw=Xw)
            mon.trace.append(t, mon.elapsed(), obj, gap)
            if rel <= config.tol:
                converged = True
                break
            if mon.out_of_budget():
                break
    mon.trace.meta["L_by_iter"] = np.asarray(L_by_iter)
    return mon.finish(w, converged)


# ---------------------------------------------------------------------------
# coordinate descent


def solve_cd(problem, config=None, w0=None):
    """Cyclic coordinate descent for the square loss with l1 or elastic net.

    Coordinates are updated in the fixed order 0..p-1 by minimizing the
    exact one-dimensional restriction (soft-thresholding the univariate
    solution). The gradient is maintained through the precomputed Gram
    matrix when ``p <= config.cd_gram_limit`` (a sweep then costs O(p s)
    for s surviving nonzeros) and through residual updates otherwise. The
    gap is checked after every full sweep.
    """
    config = config or SolverConfig()
    problem.validate()
    if problem.loss != SQUARE:
        raise UnsupportedLoss("coordinate descent requires the square loss")
    pen = problem.penalty
    if not isinstance(pen, (L1, ElasticNet)):
        raise UnsupportedPenalty("coordinate descent handles l1 or elastic net")
    gamma = pen.gamma if isinstance(pen, ElasticNet) else 0.0
    lam = problem.lam
    X, y, n, p = problem.X, problem.y, problem.n, problem.p
    mon = _Monitor(problem, config, cadence=1)
    w = np.zeros(p) if w0 is None else np.array(w0, dtype=float)

    q = np.einsum("ij,ij->j", X, X) / n
    use_gram = p <= config.cd_gram_limit
    if use_gram:
        Q = (X.T @ X) / n
        c = (X.T @ y) / n
        grad = Q @ w - c
    else:
        r = y - X @ w

    def full_grad():
        return grad.copy() if use_gram else -(X.T @ r) / n

    def fval():
        if use_gram:
            res = y - X @ w
            return 0.5 * float(res @ res) / n
        return 0.5 * float(r @ r) / n

    g0 = full_grad()
    obj, gap, rel = mon.measure(w, fval(), g0)
    mon.trace.append(0, mon.elapsed(), obj, gap)
    if rel <= config.tol:
        return mon.finish(w, True)
    converged = False
    for cycle in range(1, config.max_iter + 1):
        moved = False
        for j in range(p):
            qj = q[j]
            if qj <= 0.0:
                # zero column: the coordinate never helps the fit
                delta = -w[j] if lam > 0.0 else 0.0
            else:
                gj = grad[j] if use_gram else -float(X[:, j] @ r) / n
                zj = qj * w[j] - gj
                if lam > 0.0:
                    new = soft_threshold(zj, lam) / (qj + lam * gamma)
                else:
                    new = zj / qj
                delta = new - w[j]
            if delta != 0.0:
                moved = True
                w[j] += delta
                if use_gram:
                    grad += Q[:, j] * delta
                else:
                    r -= X[:, j] * delta
        g = full_grad()
        obj, gap, rel = mon.measure(w, fval(), g)
        mon.trace.append(cycle, mon.elapsed(), obj, gap)
        if rel <= config.tol:
            converged = True
            break
        if not moved:
            break  # sweep fixed point
        if mon.out_of_budget():
            break
    return mon.finish(w, converged)


def solve_cd_smooth(problem, config=None, w0=None):
    """Coordinate descent for l1-regularized logistic regression.

    Each coordinate solves a one-dimensional quadratic model with the local
    curvature ``L_j = d^2 f / dw_j^2`` (floored at 1e-12); the prox of that
    model gives the direction and an inexact backtracking line search picks
    the step via the modified Armijo condition of the coordinate method
    with inexact curvature.
    """
    config = config or SolverConfig()
    problem.validate()
    if problem.loss != LOGISTIC:
        raise UnsupportedLoss("cd_smooth requires the logistic loss")
    if not isinstance(problem.penalty, L1):
        raise UnsupportedPenalty("cd_smooth handles the l1 penalty")
    lam = problem.lam
    X, y, n, p = problem.X, problem.y, problem.n, problem.p
    ap = config.armijo
    mon = _Monitor(problem, config, cadence=1)
    w = np.zeros(p) if w0 is None else np.array(w0, dtype=float)
    Xw = X @ w
    Xsq = X * X

    fcur = _value_grad_from_scores(problem, Xw, want_grad=False).value
    grad0 = _value_grad_from_scores(problem, Xw).gradient
    obj, gap, rel = mon.measure(w, fcur, grad0, Xw=Xw)
    mon.trace.append(0, mon.elapsed(), obj, gap)
    if rel <= config.tol:
        return mon.finish(w, True)
    max_k = 0
    converged = False
    for cycle in range(1, config.max_iter + 1):
        moved = False
        for j in range(p):
            m = y * Xw
            sig = _sigmoid(-m)
            gj = -float(X[:, j] @ (y * sig)) / n
            hj = max(float(Xsq[:, j] @ (sig * (1.0 - sig))) / n, 1e-12)
            target = soft_threshold(w[j] - gj / hj, lam / hj)
            d = float(target - w[j])
            if d == 0.0:
                continue
            decrease = (
                gj * d
                + ap.gamma * hj * d * d
                + lam * (abs(w[j] + d) - abs(w[j]))
            )
            alpha = ap.alpha0
            yxj = y * X[:, j]
            for k in range(60):
                step = alpha * d
                # objective change computed directly, free of cancellation
                diff = logistic_margin_diff(problem, m, step * yxj) + lam * (
                    abs(w[j] + step) - abs(w[j])
                )
                if diff <= ap.sigma * alpha * decrease:
                    max_k = max(max_k, k)
                    w[j] += step
                    Xw = Xw + step * X[:, j]
                    moved = True
                    break
                alpha *= ap.beta
        fcur = _value_grad_from_scores(problem, Xw, want_grad=False).value
        grad = _value_grad_from_scores(problem, Xw).gradient
        obj, gap, rel = mon.measure(w, fcur, grad, Xw=Xw)
        mon.trace.append(cycle, mon.elapsed(), obj, gap)
        if rel <= config.tol:
            converged = True
            break
        if not moved:
            break  # fixed point of the sweep; no further progress possible
        if mon.out_of_budget():
            break
    mon.trace.meta["max_backtracks"] = max_k
    return mon.finish(w, converged)


def solve_bcd(problem, config=None, gs=None, w0=None):
    """Block-coordinate descent for partition group penalties.

    Per group the quadratic model uses the scalar curvature
    ``L_g = lambda_max(X_g^T X_g) / n`` (divided by 4 for the logistic
    loss), solved in closed form by the group prox; non-quadratic losses
    line-search the resulting direction with the modified Armijo condition.
    """
    config = config or SolverConfig()
    problem.validate()
    pen = problem.penalty
    if not isinstance(pen, (GroupL1L2, GroupL1Linf)):
        raise UnsupportedPenalty("bcd requires a partition group penalty")
    gs = gs or pen.structure
    if gs is not pen.structure and gs != pen.structure:
        raise UnsupportedPenalty("gs must match the penalty's structure")
    lam = problem.lam
    X, y, n, p = problem.X, problem.y, problem.n, problem.p
    ap = config.armijo
    mon = _Monitor(problem, config, cadence=1)
    w = np.zeros(p) if w0 is None else np.array(w0, dtype=float)

    lgs = []
    for g in gs:
        B = X[:, g.index_array]
        lmax = float(np.linalg.eigvalsh(B.T @ B)[-1]) / n
        if problem.loss == LOGISTIC:
            lmax /= 4.0
        lgs.append(max(lmax, 1e-12))

    square = problem.loss == SQUARE
    if square:
        r = y - X @ w
    else:
        Xw = X @ w

    def f_cur():
        if square:
            return 0.5 * float(r @ r) / n
        return _value_grad_from_scores(problem, Xw, want_grad=False).value

    scores = (y - r) if square else Xw
    grad0 = _value_grad_from_scores(problem, scores).gradient
    obj, gap, rel = mon.measure(w, f_cur(), grad0)
    mon.trace.append(0, mon.elapsed(), obj, gap)
    if rel <= config.tol:
        return mon.finish(w, True)
    converged = False
    for cycle in range(1, config.max_iter + 1):
        moved = False
        for g, Lg in zip(gs, lgs):
            idx = g.index_array
            B = X[:, idx]
            if square:
                gvec = -(B.T @ r) / n
            else:
                m = problem.y * Xw
                gvec = -(B.T @ (problem.y * _sigmoid(-m))) / n
            target = pen._block_prox(w[idx] - gvec / Lg, lam * g.weight / Lg)
            d = target - w[idx]
            if not np.any(d):
                continue
            old_norm = pen._block_norm(w[idx])
            decrease = (
                float(gvec @ d)
                + ap.gamma * Lg * float(d @ d)
                + lam * g.weight * (pen._block_norm(w[idx] + d) - old_norm)
            )
            alpha = ap.alpha0
            for _ in range(60):
                step = alpha * d
                Bstep = B @ step
                # cancellation-free objective change for the candidate step
                if square:
                    f_diff = square_residual_diff(problem, r, Bstep)
                else:
                    f_diff = logistic_margin_diff(problem, m, problem.y * Bstep)
                diff = f_diff + lam * g.weight * (
                    pen._block_norm(w[idx] + step) - old_norm
                )
                if diff <= ap.sigma * alpha * decrease:
                    w[idx] += step
                    moved = True
                    if square:
                        r = r - Bstep
                    else:
                        Xw = Xw + Bstep
                    break
                alpha *= ap.beta
        scores = (y - r) if square else Xw
        grad = _value_grad_from_scores(problem, scores).gradient
        obj, gap, rel = mon.measure(w, f_cur(), grad)
        mon.trace.append(cycle, mon.elapsed(), obj, gap)
        if rel <= config.tol:
            converged = True
            break
        if not moved:
            break  # sweep fixed point
        if mon.out_of_budget():
            break
    return mon.finish(w, converged)


# ---------------------------------------------------------------------------
# subgradient descent


def solve_subgradient(problem, config=None, w0=None):
    """Plain subgradient descent with stepsize ``a / (t + b)^beta``.

    Slow (O(log t / sqrt(t)) on the objective) and produces no exact zeros;
    included as the generic baseline. The returned trace follows the best
    iterate seen so far.
    """
    config = config or SolverConfig()
    problem.validate()
    if problem.penalty.is_constraint:
        raise UnsupportedPenalty("subgradient descent expects a norm penalty")
    mon = _Monitor(problem, config)
    w = np.zeros(problem.p) if w0 is None else np.array(w0, dtype=float)
    lam = problem.lam
    best_w = w.copy()
    ev = loss_value_grad(problem, w)
    best_obj = ev.value + _penalty_value(problem, w)
    obj, gap, rel = mon.measure(best_w, ev.value, ev.gradient)
    mon.trace.append(0, mon.elapsed(), obj, gap)
    if rel <= config.tol:
        return mon.finish(best_w, True)
    converged = False
    for t in range(1, config.max_iter + 1):
        step = config.sg_a / (t + config.sg_b) ** config.sg_beta
        s = ev.gradient
        if lam > 0.0:
            s = s + lam * problem.penalty.subgradient(w)
        w = w - step * s
        ev = loss_value_grad(problem, w)
        cur = ev.value + _penalty_value(problem, w)
        if cur < best_obj:
            best_obj = cur
            best_w = w.copy()
        if mon.due(t) or t == config.max_iter:
            bev = loss_value_grad(problem, best_w)
            obj, gap, rel = mon.measure(best_w, bev.value, bev.gradient)
            mon.trace.append(t, mon.elapsed(), obj, gap)
            if rel <= config.tol:
                converged = True
                break
            if mon.out_of_budget():
                break
    return mon.finish(best_w, converged)


# ---------------------------------------------------------------------------
# reweighted-l2 (IRLS)


def solve_reweighted_l2(problem, config=None, w0=None):
    """Alternating scheme from the quadratic variational form of the norm.

    Alternates (1) the closed-form update of the variational weights
    ``eta_g = sqrt(d_g^2 ||w_g||^2 + eps)`` with (2) an exactly solved
    l2-reweighted least-squares problem, choosing the p x p or n x n linear
    system, whichever is smaller. The smoothing ``eps`` shrinks whenever the
    iterate stalls at scale ``sqrt(eps)`` and never drops below the
    configured floor. The returned ``final_w`` is the raw iterate;
    ``meta["final_w_sparse"]`` carries the copy hard-thresholded at
    ``sqrt(eps)`` for sparsity reporting.
    """
    config = config or SolverConfig()
    problem.validate()
    if problem.loss != SQUARE:
        raise UnsupportedLoss("reweighted-l2 requires the square loss")
    pen = problem.penalty
    if isinstance(pen, L1):
        group_idx = [np.array([j]) for j in range(problem.p)]
        weights = np.ones(problem.p)
    elif isinstance(pen, GroupL1L2):
        group_idx = [g.index_array for g in pen.structure]
        weights = np.array([g.weight for g in pen.structure])
    else:
        raise UnsupportedPenalty("reweighted-l2 handles l1 or group-l1/l2")
    lam = problem.lam
    X, y, n, p = problem.X, problem.y, problem.n, problem.p
    sched = config.epsilon_schedule
    mon = _Monitor(problem, config, cadence=1)
    w = np.zeros(p) if w0 is None else np.array(w0, dtype=float)

    if lam == 0.0:
        w, *_ = np.linalg.lstsq(X, y, rcond=None)
        ev = loss_value_grad(problem, w)
        obj, gap, rel = mon.measure(w, ev.value, ev.gradient)
        mon.trace.append(0, mon.elapsed(), obj, gap)
        mon.trace.append(1, mon.elapsed(), obj, gap)
        mon.trace.meta["final_w_sparse"] = w.copy()
        return mon.finish(w, rel <= config.tol)

    use_primal = p <= n
    G = (X.T @ X) if use_primal else None
    Xty = X.T @ y
    eps = sched.start

    def smoothed_objective(wv, epsv):
        tot = 0.0
        for idx, dg in zip(group_idx, weights):
            wg = wv[idx]
            tot += math.sqrt(dg * dg * float(wg @ wg) + epsv)
        return loss_value_grad(problem, wv, want_grad=False).value + lam * tot

    smoothed = [smoothed_objective(w, eps)]
    ev = loss_value_grad(problem, w)
    obj, gap, rel = mon.measure(w, ev.value, ev.gradient)
    mon.trace.append(0, mon.elapsed(), obj, gap)
    if rel <= config.tol:
        mon.trace.meta["final_w_sparse"] = w.copy()
        mon.trace.meta["smoothed_objectives"] = smoothed
        return mon.finish(w, True)
    converged = False
    for k in range(1, config.max_iter + 1):
        # (1) variational weights, then the diagonal D of the quadratic term
        D = np.empty(p)
        for idx, dg in zip(group_idx, weights):
            wg = w[idx]
            eta = math.sqrt(dg * dg * float(wg @ wg) + eps)
            D[idx] = dg * dg / eta
        # (2) ridge-like solve; the scaled p x p form keeps conditioning
        # bounded even when eta collapses on zero groups
        if use_primal:
            e = 1.0 / np.sqrt(D)
            B = (G * e).T * e
            B[np.diag_indices_from(B)] += n * lam
            v = scipy.linalg.cho_solve(scipy.linalg.cho_factor(B), e * Xty)
            w_new = e * v
        else:
            Dinv = 1.0 / D
            M = (X * Dinv) @ X.T
            M[np.diag_indices_from(M)] += n * lam
            alpha = scipy.linalg.cho_solve(scipy.linalg.cho_factor(M), y)
            w_new = Dinv * (X.T @ alpha)
        delta = float(np.abs(w_new - w).max(initial=0.0))
        w = w_new
        smoothed.append(smoothed_objective(w, eps))
        ev = loss_value_grad(problem, w)
        obj, gap, rel = mon.measure(w, ev.value, ev.gradient)
        mon.trace.append(k, mon.elapsed(), obj, gap)
        if rel <= config.tol:
            converged = True
            break
        if mon.out_of_budget():
            break
        at_floor = eps <= sched.floor * (1.0 + 1e-12)
        if delta <= math.sqrt(eps):
            if at_floor:
                if delta <= 1e-12 * max(1.0, float(np.abs(w).max(initial=0.0))):
                    break
            else:
                eps = max(eps * sched.shrink, sched.floor)
    thresh = math.sqrt(eps)
    w_sparse = np.where(np.abs(w) > thresh, w, 0.0)
    mon.trace.meta["final_w_sparse"] = w_sparse
    mon.trace.meta["epsilon_final"] = eps
    mon.trace.meta["smoothed_objectives"] = smoothed
    return mon.finish(w, converged)


# ---------------------------------------------------------------------------
# working-set meta-solver


def _unit_layout(problem):
    """Working-set admission units: coordinates for l1, groups otherwise."""
    pen = problem.penalty
    if isinstance(pen, L1):
        return [np.array([j]) for j in range(problem.p)], np.ones(problem.p), "l1"
    if isinstance(pen, (GroupL1L2, GroupL1Linf)):
        idx = [g.index_array for g in pen.structure]
        wts = np.array([g.weight for g in pen.structure])
        return idx, wts, "group"
    raise UnsupportedPenalty("working set supports l1 and partition group norms")


def _unit_violations(problem, grad, unit_idx, unit_w):
    pen = problem.penalty
    if isinstance(pen, L1):
        return np.abs(grad)
    if isinstance(pen, GroupL1L2):
        return np.array(
            [np.linalg.norm(grad[idx]) / d for idx, d in zip(unit_idx, unit_w)]
        )
    return np.array(
        [float(np.abs(grad[idx]).sum()) / d for idx, d in zip(unit_idx, unit_w)]
    )


def _restricted_problem(problem, unit_idx, members):
    """Subproblem on the columns of the admitted units, with the penalty
    remapped to the new contiguous indexing."""
    pen = problem.penalty
    cols = np.concatenate([unit_idx[u] for u in members])
    Xs = np.asfortranarray(problem.X[:, cols])
    if isinstance(pen, L1):
        sub_pen = L1()
    else:
        groups = []
        start = 0
        for u in members:
            size = len(unit_idx[u])
            groups.append(
                Group(tuple(range(start, start + size)), pen.structure.groups[u].weight)
            )
            start += size
        gs = GroupStructure(tuple(groups), PARTITION, int(start))
        sub_pen = type(pen)(gs)
    sub = Problem(problem.loss, Xs, problem.y, problem.lam, sub_pen)
    return sub, cols


def solve_working_set(problem, config=None, inner="fista", w0=None):
    """Forward-growing working-set meta-solver.

    Solves the problem restricted to the admitted units (coordinates or
    groups) with the inner solver at a tighter tolerance, then checks the
    dual norm of the full gradient. Units violating the optimality bound
    ``lam (1 + tol)`` enter the set, most-violating first
    (``config.ws_batch`` per round). The set only grows, so termination is
    finite; the run ends when the full-problem relative gap meets ``tol``.
    """
    config = config or SolverConfig()
    problem.validate()
    unit_idx, unit_w, _kind = _unit_layout(problem)
    inner_fn = get_solver(inner)
    mon = _Monitor(problem, config, cadence=1)
    w = np.zeros(problem.p) if w0 is None else np.array(w0, dtype=float)
    members = [
        u for u in range(len(unit_idx)) if np.any(w[unit_idx[u]] != 0.0)
    ]
    inner_tol = config.tol / 10.0
    sizes = []
    converged = False
    max_rounds = len(unit_idx) + 60
    for rnd in range(max_rounds):
        ev = loss_value_grad(problem, w)
        obj, gap, rel = mon.measure(w, ev.value, ev.gradient)
        mon.trace.append(rnd, mon.elapsed(), obj, gap)
        sizes.append(len(members))
        if rel <= config.tol:
            converged = True
            break
        if mon.out_of_budget():
            break
        viol = _unit_violations(problem, ev.gradient, unit_idx, unit_w)
        viol[members] = -math.inf
        threshold = problem.lam * (1.0 + config.tol)
        order = np.argsort(-viol, kind="stable")
        admit = [int(u) for u in order[: config.ws_batch] if viol[u] > threshold]
        if admit:
            members = sorted(members + admit)
        else:
            # KKT holds on the complement but the restricted solve was too
            # loose for the full gap; tighten and re-solve
            inner_tol /= 10.0
            if inner_tol < 1e-16 or not members:
                break
        sub, cols = _restricted_problem(problem, unit_idx, members)
        sub_config = replace(config, tol=inner_tol)
        sub_trace = inner_fn(sub, sub_config, w0=w[cols])
        w = np.zeros(problem.p)
        w[cols] = sub_trace.final_w
    mon.trace.meta["working_set_sizes"] = sizes
    return mon.finish(w, converged)


# ---------------------------------------------------------------------------
# registry

SOLVERS = {
    "sg": solve_subgradient,
    "ista": solve_ista,
    "fista": solve_fista,
    "cd": solve_cd,
    "cd_smooth": solve_cd_smooth,
    "bcd": solve_bcd,
    "rel2": solve_reweighted_l2,
    "ws": solve_working_set,
}


def get_solver(name):
    try:
        return SOLVERS[name]
    except KeyError:
        raise UnknownSolver(name) from None
