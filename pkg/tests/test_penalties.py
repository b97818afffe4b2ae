"""Penalty values, dual norms, proximal maps, and projections."""

import math

import numpy as np
import pytest
import scipy.optimize

import sparseopt as so
from oracles import l1ball_qp_oracle

PART = so.GroupStructure(
    (so.Group((0, 1)), so.Group((2,))), so.PARTITION, 3
)


class TestNormValue:
    def test_l1(self):
        assert so.norm_value(so.L1(), np.array([1.0, -2.0, 0.0])) == 3.0

    def test_group_l1l2(self):
        pen = so.GroupL1L2(PART)
        assert so.norm_value(pen, np.array([3.0, 4.0, -5.0])) == pytest.approx(10.0)

    def test_elastic_net(self):
        pen = so.ElasticNet(2.0)
        assert so.norm_value(pen, np.array([1.0, 1.0])) == pytest.approx(4.0)

    def test_l1ball_has_no_value(self):
        with pytest.raises(so.UnsupportedForConstraint):
            so.norm_value(so.L1Ball(1.0), np.zeros(2))


class TestDualNorm:
    def test_l1(self):
        assert so.dual_norm_value(so.L1(), np.array([1.0, -3.0, 2.0])) == 3.0

    def test_group_l1l2(self):
        pen = so.GroupL1L2(PART)
        assert so.dual_norm_value(pen, np.array([3.0, 4.0, 1.0])) == pytest.approx(5.0)

    def test_group_l1linf(self):
        gs = so.GroupStructure((so.Group((0, 1)),), so.PARTITION, 2)
        pen = so.GroupL1Linf(gs)
        assert so.dual_norm_value(pen, np.array([1.0, 2.0])) == pytest.approx(3.0)

    def test_unsupported(self):
        with pytest.raises(so.UnsupportedPenalty):
            so.dual_norm_value(so.ElasticNet(1.0), np.zeros(2))
        with pytest.raises(so.UnsupportedPenalty):
            so.dual_norm_value(so.L1Ball(1.0), np.zeros(2))

    def test_tree_bound_upper_bounds_partition_exact(self):
        # a tree that happens to be a partition has an exact dual norm
        gs = so.GroupStructure(
            (so.Group((0, 1), 1.2), so.Group((2,), 0.5)), so.TREE, 3
        )
        pen = so.HierL1L2(gs)
        z = np.array([3.0, 4.0, 1.0])
        assert pen.dual_norm(z) == pytest.approx(5.0 / 1.2)

    def test_tree_uncovered_coordinate(self):
        gs = so.GroupStructure((so.Group((0,)),), so.TREE, 2)
        pen = so.HierL1L2(gs)
        assert pen.dual_norm(np.array([0.0, 1.0])) == math.inf
        assert math.isfinite(pen.dual_norm(np.array([1.0, 0.0])))


class TestProx:
    def test_l1_shrinks_to_zero(self):
        assert so.prox(so.L1(), np.array([0.5]), 1.0) == pytest.approx([0.0])

    def test_l1_shift(self):
        got = so.prox(so.L1(), np.array([2.0, -3.0]), 0.5)
        assert got == pytest.approx([1.5, -2.5])

    def test_group_l2_scaling(self):
        gs = so.GroupStructure((so.Group((0, 1)),), so.PARTITION, 2)
        got = so.prox(so.GroupL1L2(gs), np.array([3.0, 4.0]), 2.5)
        assert got == pytest.approx([1.5, 2.0])

    def test_hier_composition(self):
        gs = so.GroupStructure((so.Group((1,)), so.Group((0, 1))), so.TREE, 2)
        got = so.prox(so.HierL1L2(gs), np.array([0.0, 2.0]), 1.0)
        assert got == pytest.approx([0.0, 0.0], abs=1e-15)

    def test_elastic_net_closed_form(self):
        pen = so.ElasticNet(2.0)
        u = np.array([2.0, -0.2])
        got = so.prox(pen, u, 0.5)
        expected = so.soft_threshold(u, 0.5) / (0.5 * 2.0 + 1.0)
        assert got == pytest.approx(expected)

    @pytest.mark.parametrize("pen_idx", range(7))
    def test_mu_zero_is_identity(self, pen_idx):
        from test_core import _all_penalties

        pen = _all_penalties()[pen_idx]
        rng = np.random.default_rng(pen_idx)
        u = rng.standard_normal(9)
        if pen.is_constraint:
            u = pen.prox(u, 0.0)  # identity only inside the ball
        assert pen.prox(u, 0.0) == pytest.approx(u, abs=1e-15)

    def test_negative_mu_rejected(self):
        with pytest.raises(so.NonPositiveParameter):
            so.prox(so.L1(), np.zeros(2), -1.0)


class TestProjectL1Ball:
    def test_already_feasible(self):
        u = np.array([0.5, 0.3])
        assert so.project_l1_ball(u, 1.0) == pytest.approx(u)

    def test_axis_case(self):
        assert so.project_l1_ball(np.array([2.0, 0.0]), 1.0) == pytest.approx([1.0, 0.0])

    def test_symmetry(self):
        assert so.project_l1_ball(np.array([1.0, 1.0]), 1.0) == pytest.approx([0.5, 0.5])

    def test_against_qp_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            p = int(rng.integers(1, 9))
            u = rng.uniform(-2.0, 2.0, p)
            radius = float(rng.uniform(0.2, 2.0))
            got = so.project_l1_ball(u, radius)
            want = l1ball_qp_oracle(u, radius)
            assert np.abs(got - want).max() < 1e-8


class TestProjectGroupL2Ball:
    GS = so.GroupStructure(
        (so.Group((0, 1, 2), 1.4), so.Group((3, 4, 5), 0.8)), so.PARTITION, 6
    )

    @staticmethod
    def _constraint_value(gs, w):
        return sum(g.weight * np.linalg.norm(w[g.index_array]) for g in gs)

    def test_feasible_unchanged(self):
        u = np.full(6, 0.05)
        got = so.project_group_l2_ball(u, self.GS, 1.0)
        assert got == pytest.approx(u)

    def test_single_group_is_l2_ball(self):
        gs = so.GroupStructure((so.Group(tuple(range(4))),), so.PARTITION, 4)
        u = np.array([3.0, 0.0, 4.0, 0.0])
        got = so.project_group_l2_ball(u, gs, 1.0)
        assert got == pytest.approx(u / 5.0)

    def test_against_slsqp_and_bisection_oracles(self):
        rng = np.random.default_rng(11)
        gs = self.GS
        for _ in range(25):
            u = rng.uniform(-2.0, 2.0, 6)
            radius = float(rng.uniform(0.3, 2.0))
            got = so.project_group_l2_ball(u, gs, radius)
            cons = self._constraint_value(gs, got)
            assert cons <= radius * (1.0 + 1e-9)
            # oracle 1: general-purpose constrained solver from a feasible
            # start (the constraint is nonsmooth at zero groups, so only
            # successful runs are compared)
            w_start = u * min(1.0, radius / self._constraint_value(gs, u))
            res = scipy.optimize.minimize(
                lambda w: 0.5 * np.sum((w - u) ** 2),
                w_start,
                jac=lambda w: w - u,
                constraints=[{
                    "type": "ineq",
                    "fun": lambda w: radius - self._constraint_value(gs, w),
                }],
                method="SLSQP",
                options={"maxiter": 1000, "ftol": 1e-14},
            )
            if res.success:
                assert np.abs(got - res.x).max() < 1e-5
            # oracle 2: bisection on the prox scale until the penalized
            # solution sits on the boundary
            if self._constraint_value(gs, u) > radius:
                pen = so.GroupL1L2(gs)
                lo, hi = 0.0, 10.0
                for _ in range(200):
                    mid = 0.5 * (lo + hi)
                    if self._constraint_value(gs, pen.prox(u, mid)) > radius:
                        lo = mid
                    else:
                        hi = mid
                assert np.abs(got - pen.prox(u, hi)).max() < 1e-6


def _exact_dual_penalties():
    part = so.GroupStructure(
        (so.Group((0, 1, 2), 1.1), so.Group((3, 4), 0.8), so.Group((5, 6, 7, 8))),
        so.PARTITION, 9,
    )
    return [so.L1(), so.GroupL1L2(part), so.GroupL1Linf(part)]


class TestProxCertificates:
    """(u - w*) / mu must be a subgradient of Omega at w*."""

    @pytest.mark.parametrize("pen_idx", range(3))
    def test_certificate(self, pen_idx):
        pen = _exact_dual_penalties()[pen_idx]
        rng = np.random.default_rng(300 + pen_idx)
        for _ in range(200):
            u = rng.uniform(-2.0, 2.0, 9)
            mu = float(rng.uniform(0.05, 2.0))
            w = pen.prox(u, mu)
            z = (u - w) / mu
            if np.any(w):
                assert pen.dual_norm(z) <= 1.0 + 1e-8
                assert float(z @ w) >= pen.value(w) - 1e-8
            else:
                assert pen.dual_norm(u / mu) <= 1.0 + 1e-8

    def test_elastic_net_certificate(self):
        pen = so.ElasticNet(1.7)
        rng = np.random.default_rng(303)
        for _ in range(200):
            u = rng.uniform(-2.0, 2.0, 9)
            mu = float(rng.uniform(0.05, 2.0))
            w = pen.prox(u, mu)
            z = (u - w) / mu - pen.gamma * w
            assert np.abs(z).max() <= 1.0 + 1e-8
            assert float(z @ w) >= np.abs(w).sum() - 1e-8


@pytest.mark.parametrize("pen_idx", range(7))
def test_prox_nonexpansive(pen_idx):
    from test_core import _all_penalties

    pen = _all_penalties()[pen_idx]
    rng = np.random.default_rng(400 + pen_idx)
    for _ in range(100):
        u1 = rng.uniform(-3.0, 3.0, 9)
        u2 = rng.uniform(-3.0, 3.0, 9)
        mu = float(rng.uniform(0.0, 2.0))
        d_in = np.linalg.norm(u1 - u2)
        d_out = np.linalg.norm(pen.prox(u1, mu) - pen.prox(u2, mu))
        assert d_out <= d_in + 1e-12


def test_partition_shaped_tree_matches_group_prox_exactly():
    groups = (so.Group((0, 1), 1.3), so.Group((2, 3, 4), 0.6), so.Group((5,)))
    tree = so.GroupStructure(groups, so.TREE, 6)
    part = so.GroupStructure(groups, so.PARTITION, 6)
    hier = so.HierL1L2(tree)
    grp = so.GroupL1L2(part)
    rng = np.random.default_rng(9)
    for _ in range(50):
        u = rng.uniform(-3.0, 3.0, 6)
        mu = float(rng.uniform(0.0, 2.0))
        a = hier.prox(u, mu)
        b = grp.prox(u, mu)
        assert np.array_equal(a, b)  # identical code path, bit-for-bit


class TestDualNormDuality:
    """sup of w @ z over the unit ball matches the dual norm value."""

    def _maximizer(self, pen, z):
        if isinstance(pen, so.L1):
            j = int(np.argmax(np.abs(z)))
            w = np.zeros_like(z)
            w[j] = np.sign(z[j])
            return w
        best, best_val = None, -math.inf
        for g in pen.structure:
            idx = g.index_array
            zg = z[idx]
            w = np.zeros_like(z)
            if isinstance(pen, so.GroupL1L2):
                nrm = np.linalg.norm(zg)
                if nrm == 0:
                    continue
                w[idx] = zg / (nrm * g.weight)
                val = nrm / g.weight
            else:
                w[idx] = np.sign(zg) / g.weight
                val = np.abs(zg).sum() / g.weight
            if val > best_val:
                best, best_val = w, val
        return best

    @pytest.mark.parametrize("pen_idx", range(3))
    def test_duality(self, pen_idx):
        pen = _exact_dual_penalties()[pen_idx]
        rng = np.random.default_rng(500 + pen_idx)
        z = rng.uniform(-2.0, 2.0, 9)
        dn = pen.dual_norm(z)
        best = -math.inf
        for _ in range(10_000):
            w = rng.uniform(-2.0, 2.0, 9)
            nv = pen.value(w)
            if nv > 0:
                best = max(best, float(w @ z) / nv)
        assert best <= dn + 1e-8
        w_star = self._maximizer(pen, z)
        assert pen.value(w_star) <= 1.0 + 1e-12
        assert float(w_star @ z) == pytest.approx(dn, rel=1e-12)
