"""Problem container, validation, objective evaluation, and solver traces."""

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    DimensionMismatch,
    InvalidLabels,
    NonPositiveParameter,
    ValidationError,
)
from .penalties import Penalty

SQUARE = "square"
LOGISTIC = "logistic"


@dataclass(frozen=True)
class Problem:
    """A penalized empirical-risk problem ``min_w f(w) + lam * Omega(w)``.

    ``f`` is the mean loss over ``n`` rows of the design matrix ``X`` with
    targets ``y`` (square loss, or logistic loss with labels in {-1, +1}),
    and ``Omega`` is one of the penalties from :mod:`sparseopt.penalties`.
    Instances are immutable; ``X`` is stored column-major since solvers work
    columnwise.
    """

    loss: str
    X: np.ndarray
    y: np.ndarray
    lam: float
    penalty: Penalty
    _validated: bool = field(default=False, init=False, repr=False, compare=False)

    def __post_init__(self):
        X = np.asfortranarray(np.asarray(self.X, dtype=float))
        y = np.ascontiguousarray(np.asarray(self.y, dtype=float)).ravel()
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def validate(self):
        """Raise a ValidationError naming the first violated invariant."""
        if self.loss not in (SQUARE, LOGISTIC):
            raise ValidationError("unknown loss %r" % (self.loss,))
        if self.X.ndim != 2 or self.X.shape[0] < 1 or self.X.shape[1] < 1:
            raise DimensionMismatch("X must be a nonempty 2-d matrix")
        if not np.all(np.isfinite(self.X)):
            raise ValidationError("X contains non-finite entries")
        if self.y.shape != (self.X.shape[0],):
            raise DimensionMismatch(
                "y has length %d, expected n=%d" % (self.y.size, self.X.shape[0])
            )
        if not np.all(np.isfinite(self.y)):
            raise ValidationError("y contains non-finite entries")
        if self.loss == LOGISTIC and not np.all(np.abs(self.y) == 1.0):
            raise InvalidLabels("logistic loss requires labels in {-1, +1}")
        if not np.isfinite(self.lam) or self.lam < 0:
            raise NonPositiveParameter("lambda must be finite and >= 0")
        if not isinstance(self.penalty, Penalty):
            raise ValidationError("penalty must be a Penalty instance")
        self.penalty.validate_dim(self.p)
        object.__setattr__(self, "_validated", True)
        return self

    def objective(self, w):
        """Full objective ``f(w) + lam * Omega(w)``.

        For the l1-ball constraint the value is ``f(w)`` on the ball and
        ``+inf`` outside it (never NaN, so traces stay comparable).
        """
        w = np.asarray(w, dtype=float)
        if w.shape != (self.p,):
            raise DimensionMismatch(
                "w has shape %r, expected (%d,)" % (w.shape, self.p)
            )
        from .losses import loss_value_grad

        f = loss_value_grad(self, w, want_grad=False).value
        if self.penalty.is_constraint:
            return f if self.penalty.feasible(w) else math.inf
        if self.lam == 0.0:
            return f
        return f + self.lam * self.penalty.value(w)


def validate(problem):
    """Module-level alias for :meth:`Problem.validate`."""
    return problem.validate()


def objective(problem, w):
    """Module-level alias for :meth:`Problem.objective`."""
    return problem.objective(w)


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    elapsed_seconds: float
    objective: float
    duality_gap: float | None = None


@dataclass
class SolverTrace:
    """Per-iteration progress of a solver run plus its final iterate.

    ``records`` is sampled at the solver's gap-check cadence; iterations are
    strictly increasing and elapsed times nondecreasing. ``converged`` is
    True only when the solver met its stopping criterion (relative duality
    gap, or the documented substitute for constraint problems). ``meta``
    carries solver-specific extras (per-iteration step constants for the
    accelerated method, the hard-thresholded copy for the reweighted-l2
    scheme, working-set sizes, ...).
    """

    records: list
    final_w: np.ndarray
    converged: bool
    meta: dict = field(default_factory=dict)

    def append(self, iteration, elapsed, obj, gap=None):
        self.records.append(TraceRecord(iteration, elapsed, obj, gap))

    @property
    def iterations(self):
        return [r.iteration for r in self.records]

    @property
    def objectives(self):
        return [r.objective for r in self.records]

    @property
    def times(self):
        return [r.elapsed_seconds for r in self.records]

    @property
    def gaps(self):
        return [r.duality_gap for r in self.records]

    def check_invariants(self):
        it = self.iterations
        if any(b <= a for a, b in zip(it, it[1:])):
            raise ValidationError("trace iterations must be strictly increasing")
        ts = self.times
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise ValidationError("trace times must be nondecreasing")
        if not all(math.isfinite(o) or o == math.inf for o in self.objectives):
            raise ValidationError("trace objectives must not be NaN")
        return self
