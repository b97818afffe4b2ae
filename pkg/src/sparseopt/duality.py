"""Duality-gap certificates, the universal stopping criterion.

The gap is ``primal - dual`` where the dual value comes from the Fenchel
dual of the smooth part composed with the design matrix, evaluated at the
scaled-gradient dual candidate. It upper-bounds the true suboptimality, is
zero (to rounding) at any optimum for penalties with an exact dual norm
(l1, partition group norms), and is conservative for tree-structured
penalties whose exposed dual norm is only an upper bound. The elastic net
is handled by folding its quadratic term into the smooth part so the plain
l1 machinery applies; the l1-ball constraint has no gap here and callers
should use a projected-gradient fixed-point residual instead.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import UnsupportedPenalty
from .losses import conjugate_psi, grad_psi_scaled
from .penalties import ElasticNet, L1, L1Ball

_L1 = L1()


@dataclass(frozen=True)
class GapCertificate:
    primal: float
    dual: float

    @property
    def gap(self):
        return self.primal - self.dual


def duality_gap(problem, w, Xw=None, grad=None):
    """Certified duality gap at ``w``.

    Returns a :class:`GapCertificate` with ``gap >= 0`` up to rounding. A
    domain-infeasible dual candidate yields ``dual = -inf`` and hence
    ``gap = +inf``, never a negative value or NaN. ``Xw`` and ``grad``
    (the smooth-part gradient at ``w``) may be passed when already
    computed, saving the matrix-vector products.
    """
    if isinstance(problem.penalty, L1Ball):
        raise UnsupportedPenalty(
            "no duality gap for the l1-ball constraint; "
            "use a projected-gradient fixed-point residual"
        )
    w = np.asarray(w, dtype=float)
    primal = problem.objective(w)
    if Xw is None:
        Xw = problem.X @ w
    if isinstance(problem.penalty, ElasticNet):
        dual = _elastic_net_dual(problem, w, Xw, grad)
    else:
        dual = _norm_penalty_dual(problem, w, Xw, grad)
    if not math.isfinite(dual):
        dual = -math.inf
    return GapCertificate(primal, dual)


def _norm_penalty_dual(problem, w, Xw, grad):
    n = problem.n
    g = grad_psi_scaled(problem, Xw)
    if grad is None:
        grad = problem.X.T @ g
    dn = problem.penalty.dual_norm(grad)
    if problem.lam == 0.0:
        c = 0.0
    elif dn <= problem.lam or dn == 0.0:
        c = 1.0
    else:
        c = problem.lam / dn
    return -conjugate_psi(problem, (n * c) * g) / n


def _elastic_net_dual(problem, w, Xw, grad):
    """Gap route for l1 + (gamma/2)||.||^2: fold the quadratic into the loss.

    The augmented smooth part is ``f(w) + (lam*gamma/2)||w||^2`` with l1
    penalty ``lam``; its sample-space conjugate splits into the plain
    conjugate plus an explicit quadratic correction.
    """
    n = problem.n
    gamma = problem.penalty.gamma
    lam = problem.lam
    g = grad_psi_scaled(problem, Xw)
    if grad is None:
        grad = problem.X.T @ g
    full_grad = grad + (lam * gamma) * w
    dn = _L1.dual_norm(full_grad)
    if lam == 0.0:
        c = 0.0
    elif dn <= lam or dn == 0.0:
        c = 1.0
    else:
        c = lam / dn
    quad = 0.5 * lam * gamma * float(w @ w)
    return -conjugate_psi(problem, (n * c) * g) / n - c * c * quad


def relative_gap(problem, w, cert=None):
    """Scale-free gap ``gap / max(|primal|, 1)`` used for stopping."""
    if cert is None:
        cert = duality_gap(problem, w)
    return cert.gap / max(abs(cert.primal), 1.0)
