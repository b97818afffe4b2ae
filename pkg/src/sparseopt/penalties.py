"""Sparsity-inducing penalties: values, dual norms, and exact proximal maps.

Each penalty object evaluates its regularizer, exposes the dual norm where
one is available in closed form, and computes the proximal operator

    prox(u, mu) = argmin_w  0.5 * ||u - w||_2^2 + mu * Omega(w)

exactly. The l1-ball constraint is handled as a penalty whose prox is the
Euclidean projection onto the ball (the prox scale is ignored).

Closed forms implemented here:

* l1: componentwise soft-thresholding ``sign(u) * (|u| - mu)_+``.
* elastic net (l1 + (gamma/2) squared l2): scaled soft-thresholding
  ``soft(u, mu) / (1 + mu * gamma)``.
* group l1/l2 over a partition: blockwise shrinkage
  ``(1 - mu * d_g / ||u_g||_2)_+ u_g``.
* group l1/linf over a partition: per block, the residual of a projection
  onto an l1-ball of radius ``mu * d_g``.
* tree-structured (hierarchical) l1/l2 and l1/linf: composition of the
  per-group proximal maps applied in the stored order, children before the
  groups that contain them.
* l1-ball constraint: sort-based projection (quadratic continuous knapsack).

Dual norms: linf for l1; blockwise ``max_g ||z_g||_2 / d_g`` (l1/l2) and
``max_g ||z_g||_1 / d_g`` (l1/linf) for partitions. For tree structures only
a certified upper bound on the dual norm is exposed (the blockwise max
clipped by a weighted-l1 bound); it is exact when the tree happens to be a
partition and is safe for working-set monitoring and conservative gap
certificates, but it is not the exact overlapping dual norm.
"""

import numpy as np

from .exceptions import (
    NonPositiveParameter,
    UnsupportedForConstraint,
    UnsupportedPenalty,
)
from .groups import PARTITION, TREE, GroupStructure


def soft_threshold(u, mu):
    """Componentwise soft-thresholding, the prox of ``mu * ||.||_1``."""
    return np.sign(u) * np.maximum(np.abs(u) - mu, 0.0)


def project_l1_ball(u, radius):
    """Euclidean projection of ``u`` onto ``{w : ||w||_1 <= radius}``.

    Sort-based O(p log p) solution of the quadratic continuous knapsack
    problem. Ties are handled by a stable descending-magnitude sort with the
    threshold taken at the largest feasible index.
    """
    if radius <= 0:
        raise NonPositiveParameter("radius must be positive, got %r" % radius)
    u = np.asarray(u, dtype=float)
    a = np.abs(u)
    if a.sum() <= radius:
        return u.copy()
    s = np.sort(a, kind="stable")[::-1]
    css = np.cumsum(s)
    k = np.arange(1, a.size + 1)
    feasible = s > (css - radius) / k
    rho = int(np.flatnonzero(feasible)[-1])
    theta = (css[rho] - radius) / (rho + 1.0)
    return np.sign(u) * np.maximum(a - theta, 0.0)


def project_group_l2_ball(u, gs, radius):
    """Projection onto ``{w : sum_g d_g ||w_g||_2 <= radius}`` for a partition.

    Reduces to a projection of the vector of group norms onto the weighted
    simplex ``{z >= 0 : sum_g d_g z_g <= radius}``, after which each block of
    ``u`` is rescaled radially.
    """
    if radius <= 0:
        raise NonPositiveParameter("radius must be positive, got %r" % radius)
    if gs.kind != PARTITION:
        raise UnsupportedPenalty("group-ball projection requires a partition")
    u = np.asarray(u, dtype=float)
    d = np.array([g.weight for g in gs])
    norms = np.array([np.linalg.norm(u[g.index_array]) for g in gs])
    if float(d @ norms) <= radius:
        return u.copy()
    # weighted thresholding: z_g = (||u_g|| - theta * d_g)_+ with theta >= 0
    # solving sum_g d_g z_g = radius; breakpoints are ||u_g|| / d_g.
    bp = norms / d
    order = np.argsort(-bp, kind="stable")
    dn = (d * norms)[order]
    dd = (d * d)[order]
    cum_dn = np.cumsum(dn)
    cum_dd = np.cumsum(dd)
    theta = None
    for k in range(len(order)):
        t = (cum_dn[k] - radius) / cum_dd[k]
        nxt = bp[order[k + 1]] if k + 1 < len(order) else 0.0
        if bp[order[k]] >= t >= nxt:
            theta = t
            break
    if theta is None:  # numerical fallback: all groups active
        theta = (cum_dn[-1] - radius) / cum_dd[-1]
    w = np.zeros_like(u)
    for g, nrm in zip(gs, norms):
        z = max(nrm - theta * g.weight, 0.0)
        if z > 0 and nrm > 0:
            idx = g.index_array
            w[idx] = (z / nrm) * u[idx]
    return w


def _group_prox_l2(u_g, mu_g):
    """Blockwise shrinkage (1 - mu_g/||u_g||)_+ u_g with the 0/0 = 0 rule."""
    nrm = np.linalg.norm(u_g)
    if nrm <= mu_g or nrm == 0.0:
        return np.zeros_like(u_g)
    return (1.0 - mu_g / nrm) * u_g


def _group_prox_linf(u_g, mu_g):
    """Residual of the projection of u_g onto an l1-ball of radius mu_g."""
    if mu_g <= 0:
        return u_g.copy()
    return u_g - project_l1_ball(u_g, mu_g)


class Penalty:
    """Interface shared by every regularizer."""

    name = None
    #: True when the penalty is a hard constraint rather than a norm term.
    is_constraint = False

    def value(self, w):
        raise NotImplementedError

    def dual_norm(self, z):
        raise UnsupportedPenalty(
            "%s does not expose a dual norm" % type(self).__name__
        )

    def prox(self, u, mu):
        raise NotImplementedError

    def subgradient(self, w):
        raise UnsupportedPenalty(
            "%s does not expose a subgradient" % type(self).__name__
        )

    def _check_mu(self, mu):
        if mu < 0:
            raise NonPositiveParameter("prox scale mu must be >= 0")

    def validate_dim(self, p):
        """Hook for structure-carrying penalties; no-op by default."""


class L1(Penalty):
    """The l1 norm ``sum_j |w_j|``."""

    name = "l1"

    def value(self, w):
        return float(np.abs(w).sum())

    def dual_norm(self, z):
        return float(np.abs(z).max()) if np.size(z) else 0.0

    def prox(self, u, mu):
        self._check_mu(mu)
        return soft_threshold(np.asarray(u, dtype=float), mu)

    def subgradient(self, w):
        return np.sign(w)


class ElasticNet(Penalty):
    """l1 plus a squared l2 term: ``||w||_1 + (gamma/2) ||w||_2^2``."""

    name = "elastic_net"

    def __init__(self, gamma):
        gamma = float(gamma)
        if not np.isfinite(gamma) or gamma <= 0:
            raise NonPositiveParameter("elastic net gamma must be positive")
        self.gamma = gamma

    def value(self, w):
        w = np.asarray(w)
        return float(np.abs(w).sum() + 0.5 * self.gamma * (w @ w))

    def prox(self, u, mu):
        self._check_mu(mu)
        u = np.asarray(u, dtype=float)
        return soft_threshold(u, mu) / (mu * self.gamma + 1.0)

    def subgradient(self, w):
        return np.sign(w) + self.gamma * w


class _GroupPenalty(Penalty):
    """Common machinery for blockwise penalties over a group structure."""

    #: per-group norm exponent, 2 or inf
    q = None

    def __init__(self, structure):
        if not isinstance(structure, GroupStructure):
            raise UnsupportedPenalty("expected a GroupStructure")
        self.structure = structure

    def validate_dim(self, p):
        from .exceptions import DimensionMismatch

        if self.structure.p != p:
            raise DimensionMismatch(
                "group structure is over %d coordinates, problem has %d"
                % (self.structure.p, p)
            )

    def _block_norm(self, v):
        if self.q == 2:
            return np.linalg.norm(v)
        return float(np.abs(v).max()) if v.size else 0.0

    def _block_dual_norm(self, v):
        if self.q == 2:
            return np.linalg.norm(v)
        return float(np.abs(v).sum())

    def _block_prox(self, v, mu_g):
        if self.q == 2:
            return _group_prox_l2(v, mu_g)
        return _group_prox_linf(v, mu_g)

    def value(self, w):
        w = np.asarray(w)
        return float(
            sum(g.weight * self._block_norm(w[g.index_array]) for g in self.structure)
        )

    def prox(self, u, mu):
        self._check_mu(mu)
        w = np.array(u, dtype=float)
        for g in self.structure:
            idx = g.index_array
            w[idx] = self._block_prox(w[idx], mu * g.weight)
        return w


class _PartitionGroupPenalty(_GroupPenalty):
    def __init__(self, structure):
        super().__init__(structure)
        if structure.kind != PARTITION:
            raise UnsupportedPenalty(
                "%s requires a partition structure" % type(self).__name__
            )

    def dual_norm(self, z):
        z = np.asarray(z)
        return float(
            max(
                self._block_dual_norm(z[g.index_array]) / g.weight
                for g in self.structure
            )
        )

    def subgradient(self, w):
        w = np.asarray(w)
        s = np.zeros_like(w, dtype=float)
        for g in self.structure:
            idx = g.index_array
            s[idx] += g.weight * self._block_norm_subgradient(w[idx])
        return s

    def _block_norm_subgradient(self, v):
        if self.q == 2:
            nrm = np.linalg.norm(v)
            return v / nrm if nrm > 0 else np.zeros_like(v)
        g = np.zeros_like(v)
        if v.size:
            j = int(np.argmax(np.abs(v)))
            if v[j] != 0:
                g[j] = np.sign(v[j])
        return g


class GroupL1L2(_PartitionGroupPenalty):
    """Weighted sum of per-group l2 norms over a partition."""

    name = "group_l1l2"
    q = 2


class GroupL1Linf(_PartitionGroupPenalty):
    """Weighted sum of per-group linf norms over a partition."""

    name = "group_l1linf"
    q = np.inf


class _TreeGroupPenalty(_GroupPenalty):
    def __init__(self, structure):
        super().__init__(structure)
        if structure.kind != TREE:
            raise UnsupportedPenalty(
                "%s requires a tree structure" % type(self).__name__
            )
        self._kappa = np.zeros(structure.p)
        for g in structure:
            idx = g.index_array
            np.maximum.at(self._kappa, idx, g.weight)

    # prox: inherited composition Pi_{g_m} o ... o Pi_{g_1} in stored order,
    # valid because contained groups precede the groups containing them.

    def dual_norm(self, z):
        """Certified upper bound on the overlapping dual norm.

        Minimum of two valid over-estimates: the blockwise max (exact for
        partitions) and the dual of the weighted-linf lower bound
        ``Omega(w) >= max_j kappa_j |w_j|`` with ``kappa_j`` the largest
        weight among groups containing ``j``. Coordinates outside every
        group are unpenalized, so any mass there makes the dual norm
        infinite.
        """
        z = np.asarray(z, dtype=float)
        uncovered = self._kappa == 0
        if np.any(uncovered & (z != 0)):
            return float("inf")
        blockwise = max(
            self._block_dual_norm(z[g.index_array]) / g.weight
            for g in self.structure
        )
        covered = ~uncovered
        weighted_l1 = float(np.sum(np.abs(z[covered]) / self._kappa[covered]))
        return float(min(blockwise, weighted_l1))

    def subgradient(self, w):
        w = np.asarray(w)
        s = np.zeros_like(w, dtype=float)
        for g in self.structure:
            idx = g.index_array
            v = w[idx]
            if self.q == 2:
                nrm = np.linalg.norm(v)
                if nrm > 0:
                    s[idx] += g.weight * v / nrm
            else:
                if v.size:
                    j = int(np.argmax(np.abs(v)))
                    if v[j] != 0:
                        s[idx[j]] += g.weight * np.sign(v[j])
        return s


class HierL1L2(_TreeGroupPenalty):
    """Tree-structured sum of per-group l2 norms."""

    name = "hier_l1l2"
    q = 2


class HierL1Linf(_TreeGroupPenalty):
    """Tree-structured sum of per-group linf norms."""

    name = "hier_l1linf"
    q = np.inf


class L1Ball(Penalty):
    """Hard constraint ``||w||_1 <= radius``; prox is the projection."""

    name = "l1_ball"
    is_constraint = True

    def __init__(self, radius):
        radius = float(radius)
        if not np.isfinite(radius) or radius <= 0:
            raise NonPositiveParameter("l1-ball radius must be positive")
        self.radius = radius

    def value(self, w):
        raise UnsupportedForConstraint(
            "the l1-ball constraint has no finite norm value"
        )

    def feasible(self, w, slack=1e-12):
        return float(np.abs(w).sum()) <= self.radius * (1.0 + slack)

    def prox(self, u, mu):
        # mu is irrelevant for an indicator function
        return project_l1_ball(np.asarray(u, dtype=float), self.radius)


# -- module-level operation wrappers -----------------------------------------


def norm_value(penalty, w):
    """Penalty value Omega(w); raises for constraint-form penalties."""
    return penalty.value(w)


def dual_norm_value(penalty, z):
    """Dual norm Omega*(z) where exposed (see class docstrings)."""
    return penalty.dual_norm(z)


def prox(penalty, u, mu):
    """Proximal operator of ``mu * Omega`` evaluated at ``u``."""
    return penalty.prox(u, mu)
