"""Homotopy (LARS-style) computation of the full Lasso regularization path.

The Lasso solution ``argmin ||y - Xw||^2 / (2n) + lam ||w||_1`` is piecewise
affine in ``lam``. Between two consecutive kinks the active coefficients obey

    w_J(lam) = (X_J^T X_J + n gamma I)^{-1} (X_J^T y - n lam t_J)

for the active set ``J``, the active signs ``t_J``, and an optional
elastic-net stabilizer ``gamma >= 0`` (the problem then carries an extra
``(gamma/2) ||w||^2`` term, which keeps the Gram factor invertible). The
path starts at ``lam_max = ||X^T y||_inf / n`` with ``w = 0`` and jumps from
kink to kink by computing, in closed form, the next lambda at which either
an inactive correlation reaches the boundary (a variable enters) or an
active coefficient crosses zero (a variable leaves). A Cholesky factor of
the active Gram matrix is updated and downdated as variables move, with
periodic refactorization to bound drift.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .exceptions import DimensionMismatch, OutOfRange, SingularGram, TieDetected

#: relative separation below which two path events are considered a tie
TIE_RTOL = 1e-10
#: relative guard band excluding the event just processed
GUARD = 1e-12
#: full refactorization cadence for the active Cholesky factor
REFACTOR_EVERY = 50
#: relative Frobenius drift forcing an early refactorization
DRIFT_RTOL = 1e-8


@dataclass(frozen=True)
class PathSegment:
    """One affine piece of the path: on ``[lambda_low, lambda_high]`` the
    active coefficients are ``intercept - lam * slope``."""

    lambda_high: float
    lambda_low: float
    active: tuple
    signs: tuple
    intercept: np.ndarray
    slope: np.ndarray

    def solution(self, lam, p):
        w = np.zeros(p)
        if self.active:
            w[list(self.active)] = self.intercept - lam * self.slope
        return w


@dataclass(frozen=True)
class RegularizationPath:
    segments: tuple
    lambda_max: float
    p: int
    gamma: float = 0.0

    @property
    def lambda_min(self):
        return self.segments[-1].lambda_low if self.segments else self.lambda_max

    @property
    def kinks(self):
        """Lambdas at which the active set or signs change."""
        return [s.lambda_high for s in self.segments]


def path_solution_at(path, lam):
    """Exact solution at ``lam``; affine interpolation on its segment."""
    lam = float(lam)
    if lam >= path.lambda_max * (1.0 - 1e-15):
        return np.zeros(path.p)
    if lam < path.lambda_min * (1.0 - 1e-12):
        raise OutOfRange(
            "lambda %g below the computed path terminus %g"
            % (lam, path.lambda_min)
        )
    for seg in path.segments:
        if lam >= seg.lambda_low * (1.0 - 1e-12):
            return seg.solution(lam, path.p)
    return path.segments[-1].solution(lam, path.p)


def check_kkt(X, y, lam, w, tol):
    """Lasso optimality: inactive correlations within ``n lam`` and active
    ones equal to ``n lam sign(w_j)``, both up to ``n lam tol``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    if X.shape[0] != y.size or X.shape[1] != w.size:
        raise DimensionMismatch("inconsistent shapes in check_kkt")
    n = X.shape[0]
    corr = X.T @ (y - X @ w)
    bound = n * lam
    zero = w == 0.0
    if np.any(np.abs(corr[zero]) > bound * (1.0 + tol)):
        return False
    act = ~zero
    if np.any(np.abs(corr[act] - bound * np.sign(w[act])) > bound * tol):
        return False
    return True


class _ActiveCholesky:
    """Upper-triangular factor of ``X_J^T X_J + n gamma I`` maintained under
    insertions and removals of active columns."""

    def __init__(self, X, gamma_diag):
        self.X = X
        self.gamma_diag = gamma_diag
        self.active = []
        self.R = np.zeros((0, 0))
        self._updates = 0
        self._cols = {}

    def gram_col(self, j):
        if j not in self._cols:
            self._cols[j] = self.X.T @ self.X[:, j]
        return self._cols[j]

    def _gram(self):
        k = len(self.active)
        G = np.empty((k, k))
        for a, j in enumerate(self.active):
            G[:, a] = self.gram_col(j)[self.active]
        G[np.diag_indices(k)] += self.gamma_diag
        return G

    def insert(self, j):
        diag = float(self.gram_col(j)[j]) + self.gamma_diag
        k = len(self.active)
        if k == 0:
            if diag <= 1e-12:
                raise SingularGram("column %d has near-zero norm" % j)
            self.R = np.array([[math.sqrt(diag)]])
        else:
            g = self.gram_col(j)[self.active]
            z = solve_triangular(self.R.T, g, lower=True)
            d2 = diag - float(z @ z)
            if d2 <= 1e-12 * max(diag, 1.0):
                raise SingularGram(
                    "active Gram matrix is numerically singular after adding "
                    "column %d; retry with gamma_en > 0" % j
                )
            R = np.zeros((k + 1, k + 1))
            R[:k, :k] = self.R
            R[:k, k] = z
            R[k, k] = math.sqrt(d2)
            self.R = R
        self.active.append(j)
        self._maintain()

    def remove(self, pos):
        del self.active[pos]
        R = np.delete(self.R, pos, axis=1)
        m = R.shape[0]
        # re-triangularize the Hessenberg part with Givens rotations
        for i in range(pos, m - 1):
            a, b = R[i, i], R[i + 1, i]
            r = math.hypot(a, b)
            if r == 0.0:
                continue
            c, s = a / r, b / r
            rot = np.array([[c, s], [-s, c]])
            R[i : i + 2, i:] = rot @ R[i : i + 2, i:]
        self.R = R[: m - 1, :]
        self._maintain()

    def _maintain(self):
        self._updates += 1
        if not self.active:
            return
        refactor = self._updates % REFACTOR_EVERY == 0
        if not refactor:
            G = self._gram()
            drift = np.linalg.norm(self.R.T @ self.R - G)
            refactor = drift > DRIFT_RTOL * max(np.linalg.norm(G), 1.0)
        if refactor:
            self.R = np.linalg.cholesky(self._gram()).T

    def solve(self, rhs):
        return cho_solve((self.R, False), rhs)


def lasso_path(X, y, lambda_min=None, max_kinks=10_000, gamma_en=0.0):
    """Full Lasso (or elastic-net-stabilized) path from ``lambda_max`` down.

    Parameters
    ----------
    X, y : design matrix (n, p) and response (n,)
    lambda_min : float, optional
        Path terminus; defaults to ``1e-4 * lambda_max``.
    max_kinks : int
        Upper bound on the number of segments computed.
    gamma_en : float
        Elastic-net stabilizer; 0 gives the pure Lasso. Positive values
        keep the active Gram matrix positive definite.

    Raises
    ------
    SingularGram
        When ``gamma_en = 0`` and the active Gram matrix becomes
        numerically singular.
    TieDetected
        When two distinct path events coincide within relative 1e-10; the
        path ordering is then ambiguous and no choice is made.
    """
    X = np.asfortranarray(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.shape
    if y.size != n:
        raise DimensionMismatch("y length does not match X")
    if gamma_en < 0:
        raise OutOfRange("gamma_en must be >= 0")
    Xty = X.T @ y
    lam_max = float(np.abs(Xty).max()) / n
    if lambda_min is None:
        lambda_min = 1e-4 * lam_max
    lambda_min = float(lambda_min)
    if lam_max == 0.0 or lambda_min >= lam_max:
        return RegularizationPath((), lam_max, p, gamma_en)

    start = np.abs(Xty) / n
    top = np.flatnonzero(start >= lam_max * (1.0 - TIE_RTOL))
    if top.size > 1:
        raise TieDetected(
            "columns %s tie for the maximal correlation at lambda_max"
            % top.tolist()
        )
    chol = _ActiveCholesky(X, n * gamma_en)
    j0 = int(top[0])
    chol.insert(j0)
    signs = [1.0 if Xty[j0] > 0 else -1.0]

    segments = []
    lam = lam_max
    while len(segments) < max_kinks and lam > lambda_min:
        J = list(chol.active)
        t = np.array(signs)
        b = chol.solve(Xty[J])
        s = n * chol.solve(t)
        # inactive correlations are affine: c_j(lam) = a_j + lam * h_j
        C = np.column_stack([chol.gram_col(j) for j in J]) if J else None
        a = Xty - (C @ b if J else 0.0)
        h = C @ s if J else np.zeros(p)

        events = []  # (lam_event, kind, payload)
        in_J = np.zeros(p, dtype=bool)
        in_J[J] = True
        hi = lam * (1.0 - GUARD)
        for j in np.flatnonzero(~in_J):
            den_plus = n - h[j]
            if den_plus != 0.0:
                cand = a[j] / den_plus
                if lambda_min < cand <= hi:
                    events.append((cand, "enter", (j, 1.0)))
            den_minus = -n - h[j]
            if den_minus != 0.0:
                cand = a[j] / den_minus
                if lambda_min < cand <= hi:
                    events.append((cand, "enter", (j, -1.0)))
        for pos, j in enumerate(J):
            if s[pos] != 0.0:
                cand = b[pos] / s[pos]
                if lambda_min < cand <= hi:
                    events.append((cand, "leave", (pos, j)))

        if events:
            events.sort(key=lambda e: -e[0])
            lam_next, kind, payload = events[0]
            if len(events) > 1:
                runner = events[1][0]
                same = (
                    kind == events[1][1]
                    and payload[:1] == events[1][2][:1]
                )
                if not same and lam_next - runner <= TIE_RTOL * lam_next:
                    raise TieDetected(
                        "events at lambda=%.17g and %.17g are separated by "
                        "less than rtol=%g" % (lam_next, runner, TIE_RTOL)
                    )
        else:
            lam_next, kind, payload = lambda_min, None, None

        segments.append(
            PathSegment(
                lambda_high=lam,
                lambda_low=lam_next,
                active=tuple(J),
                signs=tuple(t.tolist()),
                intercept=b.copy(),
                slope=s.copy(),
            )
        )
        if kind is None:
            lam = lam_next
            break
        if kind == "enter":
            j, sign = payload
            chol.insert(int(j))
            signs.append(sign)
        else:
            pos, _j = payload
            chol.remove(pos)
            del signs[pos]
        lam = lam_next
    return RegularizationPath(tuple(segments), lam_max, p, gamma_en)


def solve_homotopy(problem, config=None, w0=None):
    """Solver-registry adapter: run the path down to ``problem.lam``.

    Homotopy produces the exact solution once the path reaches the target
    lambda, so the trace has two records: the trivial start and the final
    exact solution with its certified gap.
    """
    import time as _time

    from .duality import duality_gap
    from .exceptions import UnsupportedLoss, UnsupportedPenalty
    from .penalties import L1
    from .problem import SQUARE, SolverTrace
    from .solvers import SolverConfig

    config = config or SolverConfig()
    problem.validate()
    if problem.loss != SQUARE:
        raise UnsupportedLoss("homotopy requires the square loss")
    if not isinstance(problem.penalty, L1):
        raise UnsupportedPenalty("homotopy requires the l1 penalty")
    t0 = _time.perf_counter()
    trace = SolverTrace([], None, False)
    w0_obj = problem.objective(np.zeros(problem.p))
    trace.append(0, 0.0, w0_obj, None)
    lam = problem.lam
    lam_max = float(np.abs(problem.X.T @ problem.y).max()) / problem.n
    if lam >= lam_max:
        w = np.zeros(problem.p)
    else:
        path = lasso_path(problem.X, problem.y, lambda_min=lam, max_kinks=10**6)
        w = path_solution_at(path, lam)
    cert = duality_gap(problem, w)
    rel = cert.gap / max(abs(cert.primal), 1.0)
    trace.append(1, _time.perf_counter() - t0, cert.primal, cert.gap)
    trace.final_w = w
    trace.converged = bool(rel <= config.tol)
    return trace
