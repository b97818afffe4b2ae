"""Solver behavior: degenerate cases, monotonicity, agreement, stopping."""

import math

import numpy as np
import pytest

import sparseopt as so
from sparseopt.solvers import ArmijoParams, EpsilonSchedule, SolverConfig


def _lasso(rng, n=30, p=15, lam=0.2, invertible=False):
    X = rng.standard_normal((n, p))
    if invertible:
        X += 0.5 * np.eye(n, p)
    y = rng.standard_normal(n)
    return so.Problem(so.SQUARE, X, y, lam, so.L1()).validate()


def _orthonormal_design(rng, n=12):
    # X^T X = n I
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * math.sqrt(n)


class TestIsta:
    def test_lambda_zero_matches_least_squares(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((10, 10)) + 2 * np.eye(10)
        y = rng.standard_normal(10)
        prob = so.Problem(so.SQUARE, X, y, 0.0, so.L1()).validate()
        tr = so.solve_ista(prob, SolverConfig(tol=1e-12))
        w_ls = np.linalg.solve(X, y)
        assert np.abs(tr.final_w - w_ls).max() < 1e-8

    def test_orthonormal_one_step_is_exact(self):
        rng = np.random.default_rng(1)
        X = _orthonormal_design(rng, 10)
        y = rng.standard_normal(10)
        lam = 0.15
        prob = so.Problem(so.SQUARE, X, y, lam, so.L1()).validate()
        tr = so.solve_ista(prob, SolverConfig(tol=1e-12, max_iter=3))
        c = X.T @ y / 10
        exact = np.sign(c) * np.maximum(np.abs(c) - lam, 0.0)
        assert np.abs(tr.final_w - exact).max() < 1e-12
        assert tr.converged

    def test_objective_monotone(self):
        rng = np.random.default_rng(2)
        prob = _lasso(rng)
        tr = so.solve_ista(prob, SolverConfig(tol=1e-10))
        objs = tr.objectives
        assert all(b <= a + 1e-12 for a, b in zip(objs, objs[1:]))
        assert tr.converged

    def test_backtracking_bounded(self):
        rng = np.random.default_rng(3)
        prob = _lasso(rng)
        cfg = SolverConfig(tol=1e-8, line_search_factor=2.0)
        tr = so.solve_ista(prob, cfg)
        L_true = so.lipschitz_bound(prob)
        # final L stays within one doubling of the true constant
        assert tr.meta["final_L"] <= cfg.line_search_factor * L_true * (1 + 1e-9)


class TestFista:
    def test_agrees_with_ista_on_strongly_convex(self):
        rng = np.random.default_rng(4)
        prob = _lasso(rng, n=25, p=12, invertible=False)
        cfg = SolverConfig(tol=1e-10)
        w1 = so.solve_fista(prob, cfg).final_w
        w2 = so.solve_ista(prob, cfg).final_w
        assert np.abs(w1 - w2).max() < 1e-5

    def test_faster_than_ista_on_quadratic(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((40, 20))
        y = rng.standard_normal(40)
        prob = so.Problem(so.SQUARE, X, y, 0.0, so.L1()).validate()
        cfg = SolverConfig(tol=1e-9)
        t_ista = so.solve_ista(prob, cfg)
        t_fista = so.solve_fista(prob, cfg)
        assert t_fista.converged and t_ista.converged
        assert t_fista.records[-1].iteration < t_ista.records[-1].iteration

    def test_rate_certificate(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((30, 20))
        y = rng.standard_normal(30)
        lam = 0.1
        prob = so.Problem(so.SQUARE, X, y, lam, so.L1()).validate()
        path = so.lasso_path(X, y, lambda_min=0.9 * lam)
        w_star = so.path_solution_at(path, lam)
        f_star = prob.objective(w_star)
        r0_sq = float(w_star @ w_star)  # w0 = 0
        tr = so.solve_fista(prob, SolverConfig(tol=1e-12))
        L_by_iter = tr.meta["L_by_iter"]
        for rec in tr.records:
            t = rec.iteration
            if t == 0:
                continue
            bound = 2.0 * L_by_iter[t - 1] * r0_sq / (t + 1) ** 2
            assert rec.objective - f_star <= bound + 1e-9


class TestCd:
    def test_single_coordinate_one_update(self):
        rng = np.random.default_rng(7)
        X = rng.standard_normal((10, 1))
        y = rng.standard_normal(10)
        lam = 0.1
        prob = so.Problem(so.SQUARE, X, y, lam, so.L1()).validate()
        tr = so.solve_cd(prob, SolverConfig(tol=1e-12))
        q = float(X[:, 0] @ X[:, 0]) / 10
        z = float(X[:, 0] @ y) / 10
        exact = np.sign(z) * max(abs(z) - lam, 0.0) / q
        assert tr.final_w[0] == pytest.approx(exact, abs=1e-14)
        assert tr.records[-1].iteration <= 2

    def test_orthonormal_converges_in_one_cycle(self):
        rng = np.random.default_rng(8)
        X = _orthonormal_design(rng, 10)
        y = rng.standard_normal(10)
        lam = 0.12
        prob = so.Problem(so.SQUARE, X, y, lam, so.L1()).validate()
        tr = so.solve_cd(prob, SolverConfig(tol=1e-12))
        path = so.lasso_path(X, y, lambda_min=0.9 * lam)
        assert np.abs(tr.final_w - so.path_solution_at(path, lam)).max() < 1e-10
        assert tr.converged and tr.records[-1].iteration <= 2

    def test_agreement_with_fista(self):
        rng = np.random.default_rng(9)
        prob = _lasso(rng, n=40, p=25)
        cfg = SolverConfig(tol=1e-8)
        w_cd = so.solve_cd(prob, cfg).final_w
        w_f = so.solve_fista(prob, cfg).final_w
        assert np.abs(w_cd - w_f).max() < 1e-5

    def test_elastic_net(self):
        rng = np.random.default_rng(10)
        X = rng.standard_normal((30, 18))
        y = rng.standard_normal(30)
        prob = so.Problem(so.SQUARE, X, y, 0.15, so.ElasticNet(1.2)).validate()
        cfg = SolverConfig(tol=1e-9)
        w_cd = so.solve_cd(prob, cfg).final_w
        w_f = so.solve_fista(prob, cfg).final_w
        assert np.abs(w_cd - w_f).max() < 1e-5

    def test_gram_and_residual_modes_agree(self):
        rng = np.random.default_rng(11)
        prob = _lasso(rng, n=25, p=14)
        cfg_gram = SolverConfig(tol=1e-10, cd_gram_limit=4096)
        cfg_resid = SolverConfig(tol=1e-10, cd_gram_limit=1)
        w1 = so.solve_cd(prob, cfg_gram).final_w
        w2 = so.solve_cd(prob, cfg_resid).final_w
        assert np.abs(w1 - w2).max() < 1e-10

    def test_rejects_logistic(self):
        rng = np.random.default_rng(12)
        X = rng.standard_normal((10, 4))
        y = np.sign(rng.standard_normal(10))
        y[y == 0] = 1.0
        prob = so.Problem(so.LOGISTIC, X, y, 0.1, so.L1())
        with pytest.raises(so.UnsupportedLoss):
            so.solve_cd(prob)


class TestCdSmooth:
    def _logistic(self, rng, n=40, p=20, lam=0.05):
        X = rng.standard_normal((n, p))
        y = np.sign(X @ rng.standard_normal(p) + 0.3 * rng.standard_normal(n))
        y[y == 0] = 1.0
        return so.Problem(so.LOGISTIC, X, y, lam, so.L1()).validate()

    def test_kkt_satisfied_coordinate_skipped(self):
        rng = np.random.default_rng(13)
        prob = self._logistic(rng, lam=10.0)  # lam above lambda_max: w stays 0
        tr = so.solve_cd_smooth(prob, SolverConfig(tol=1e-10))
        assert np.count_nonzero(tr.final_w) == 0
        assert tr.converged

    def test_agreement_with_fista(self):
        rng = np.random.default_rng(14)
        prob = self._logistic(rng)
        cfg = SolverConfig(tol=1e-8)
        w_cd = so.solve_cd_smooth(prob, cfg).final_w
        w_f = so.solve_fista(prob, cfg).final_w
        assert np.abs(w_cd - w_f).max() < 1e-4

    def test_armijo_terminates(self):
        rng = np.random.default_rng(15)
        prob = self._logistic(rng)
        tr = so.solve_cd_smooth(prob, SolverConfig(tol=1e-8))
        assert tr.meta["max_backtracks"] <= 60

    def test_objective_monotone(self):
        rng = np.random.default_rng(16)
        prob = self._logistic(rng)
        objs = so.solve_cd_smooth(prob, SolverConfig(tol=1e-9)).objectives
        assert all(b <= a + 1e-12 for a, b in zip(objs, objs[1:]))


class TestBcd:
    def _group_problem(self, rng, q=2, n=30, p=12, lam=0.2, loss=so.SQUARE):
        gs = so.GroupStructure(
            (so.Group((0, 1, 2), 1.1), so.Group((3, 4, 5)),
             so.Group((6, 7), 0.7), so.Group((8, 9, 10, 11))),
            so.PARTITION, p,
        )
        pen = so.GroupL1L2(gs) if q == 2 else so.GroupL1Linf(gs)
        X = rng.standard_normal((n, p))
        if loss == so.LOGISTIC:
            y = np.sign(rng.standard_normal(n))
            y[y == 0] = 1.0
        else:
            y = rng.standard_normal(n)
        return so.Problem(loss, X, y, lam, pen).validate()

    def test_singleton_groups_match_cd(self):
        rng = np.random.default_rng(17)
        X = rng.standard_normal((25, 8))
        y = rng.standard_normal(25)
        lam = 0.15
        gs = so.singleton_structure(8)
        prob_g = so.Problem(so.SQUARE, X, y, lam, so.GroupL1L2(gs)).validate()
        prob_l = so.Problem(so.SQUARE, X, y, lam, so.L1()).validate()
        cfg = SolverConfig(tol=1e-10)
        tr_b = so.solve_bcd(prob_g, cfg)
        tr_c = so.solve_cd(prob_l, cfg)
        assert np.abs(tr_b.final_w - tr_c.final_w).max() < 1e-12
        assert tr_b.records[-1].iteration == tr_c.records[-1].iteration

    def test_group_kkt_zero_group_stays_zero(self):
        rng = np.random.default_rng(18)
        prob = self._group_problem(rng, lam=10.0)
        tr = so.solve_bcd(prob, SolverConfig(tol=1e-10))
        assert np.count_nonzero(tr.final_w) == 0

    @pytest.mark.parametrize("q", [2, math.inf])
    def test_agreement_with_fista(self, q):
        rng = np.random.default_rng(19)
        prob = self._group_problem(rng, q=q)
        cfg = SolverConfig(tol=1e-8)
        w_b = so.solve_bcd(prob, cfg).final_w
        w_f = so.solve_fista(prob, cfg).final_w
        assert np.abs(w_b - w_f).max() < 1e-4

    def test_logistic_groups(self):
        rng = np.random.default_rng(20)
        prob = self._group_problem(rng, loss=so.LOGISTIC, lam=0.05)
        cfg = SolverConfig(tol=1e-8)
        w_b = so.solve_bcd(prob, cfg).final_w
        w_f = so.solve_fista(prob, cfg).final_w
        assert np.abs(w_b - w_f).max() < 1e-4


class TestSubgradient:
    def test_quadratic_descends(self):
        rng = np.random.default_rng(21)
        X = rng.standard_normal((20, 10))
        y = rng.standard_normal(20)
        prob = so.Problem(so.SQUARE, X, y, 0.0, so.L1()).validate()
        f0 = prob.objective(np.zeros(10))
        cfg = SolverConfig(tol=0.0, max_iter=100, sg_a=0.2, sg_b=0.0, sg_beta=0.5)
        tr = so.solve_subgradient(prob, cfg)
        assert tr.objectives[-1] < f0

    def test_lasso_loose_gap(self):
        rng = np.random.default_rng(22)
        prob = _lasso(rng, n=50, p=50, lam=0.1)
        cfg = SolverConfig(
            tol=1e-2, max_iter=10_000, sg_a=1.0, sg_b=100.0, sg_beta=1.0
        )
        tr = so.solve_subgradient(prob, cfg)
        assert tr.converged
        # best-so-far objective is monotone by construction
        objs = tr.objectives
        assert all(b <= a + 1e-15 for a, b in zip(objs, objs[1:]))


class TestReweightedL2:
    def test_lambda_zero_is_ols(self):
        rng = np.random.default_rng(23)
        X = rng.standard_normal((20, 8))
        y = rng.standard_normal(20)
        prob = so.Problem(so.SQUARE, X, y, 0.0, so.L1()).validate()
        tr = so.solve_reweighted_l2(prob)
        w_ls, *_ = np.linalg.lstsq(X, y, rcond=None)
        assert np.abs(tr.final_w - w_ls).max() < 1e-10

    def test_smoothed_objective_monotone(self):
        rng = np.random.default_rng(24)
        prob = _lasso(rng, n=30, p=15, lam=0.15)
        tr = so.solve_reweighted_l2(prob, SolverConfig(tol=1e-10))
        # the recorded (true-penalty) objective may wiggle at rounding level,
        # but the smoothed objective it bounds must not increase
        objs = tr.objectives
        assert objs[-1] <= objs[0]
        assert all(b <= a + 1e-9 for a, b in zip(objs, objs[1:]))

    def test_lasso_objective_agreement(self):
        rng = np.random.default_rng(25)
        prob = _lasso(rng, n=30, p=15, lam=0.15)
        cfg = SolverConfig(
            tol=1e-9, epsilon_schedule=EpsilonSchedule(floor=1e-18)
        )
        tr = so.solve_reweighted_l2(prob, cfg)
        obj_f = so.solve_fista(prob, SolverConfig(tol=1e-12)).objectives[-1]
        assert abs(tr.objectives[-1] - obj_f) <= 1e-5 * abs(obj_f)
        assert tr.converged

    def test_thresholded_copy_reported(self):
        rng = np.random.default_rng(26)
        prob = _lasso(rng, n=30, p=15, lam=0.2)
        tr = so.solve_reweighted_l2(prob, SolverConfig(tol=1e-8))
        ws = tr.meta["final_w_sparse"]
        thresh = math.sqrt(tr.meta["epsilon_final"])
        assert np.all((ws == 0.0) | (np.abs(ws) > thresh))

    def test_group_variant(self):
        rng = np.random.default_rng(27)
        gs = so.GroupStructure(
            (so.Group((0, 1, 2)), so.Group((3, 4, 5), 1.3), so.Group((6, 7))),
            so.PARTITION, 8,
        )
        X = rng.standard_normal((30, 8))
        y = rng.standard_normal(30)
        prob = so.Problem(so.SQUARE, X, y, 0.2, so.GroupL1L2(gs)).validate()
        cfg = SolverConfig(tol=1e-8, epsilon_schedule=EpsilonSchedule(floor=1e-18))
        tr = so.solve_reweighted_l2(prob, cfg)
        obj_f = so.solve_fista(prob, SolverConfig(tol=1e-12)).objectives[-1]
        assert abs(tr.objectives[-1] - obj_f) <= 1e-5 * abs(obj_f)


class TestWorkingSet:
    def test_lambda_above_max_terminates_immediately(self):
        rng = np.random.default_rng(28)
        X = rng.standard_normal((20, 10))
        y = rng.standard_normal(20)
        lam = float(np.abs(X.T @ y).max()) / 20 * 1.5
        prob = so.Problem(so.SQUARE, X, y, lam, so.L1()).validate()
        tr = so.solve_working_set(prob)
        assert tr.converged
        assert np.count_nonzero(tr.final_w) == 0
        assert tr.meta["working_set_sizes"] == [0]

    def test_final_gap_below_tol(self):
        rng = np.random.default_rng(29)
        prob = _lasso(rng, n=40, p=30, lam=0.1)
        cfg = SolverConfig(tol=1e-8)
        tr = so.solve_working_set(prob, cfg)
        assert tr.converged
        cert = so.duality_gap(prob, tr.final_w)
        assert cert.gap <= 1e-8 * max(abs(cert.primal), 1.0)

    def test_sparse_ground_truth_small_working_set(self):
        rng = np.random.default_rng(30)
        n, p, s = 100, 400, 5
        X = rng.standard_normal((n, p)) / math.sqrt(n)
        w_true = np.zeros(p)
        w_true[rng.choice(p, s, replace=False)] = rng.uniform(0.5, 1.0, s)
        y = X @ w_true + 0.01 * rng.standard_normal(n)
        lam = 0.3 * float(np.abs(X.T @ y).max()) / n
        prob = so.Problem(so.SQUARE, X, y, lam, so.L1()).validate()
        tr = so.solve_working_set(prob, SolverConfig(tol=1e-6))
        assert tr.converged
        ref_nnz = np.count_nonzero(tr.final_w)
        assert tr.meta["working_set_sizes"][-1] <= 5 * max(ref_nnz, 1)

    def test_restricted_kkt_on_admitted_coordinates(self):
        rng = np.random.default_rng(31)
        prob = _lasso(rng, n=30, p=20, lam=0.15)
        tr = so.solve_working_set(prob, SolverConfig(tol=1e-8))
        w = tr.final_w
        grad = so.loss_value_grad(prob, w).gradient
        act = w != 0
        # active coordinates satisfy the stationarity equation tightly
        resid = np.abs(grad[act] + prob.lam * np.sign(w[act]))
        assert resid.max(initial=0.0) <= prob.lam * 1e-6

    def test_group_working_set(self):
        rng = np.random.default_rng(32)
        gs = so.GroupStructure(
            tuple(so.Group(tuple(range(3 * k, 3 * k + 3))) for k in range(6)),
            so.PARTITION, 18,
        )
        X = rng.standard_normal((40, 18))
        y = rng.standard_normal(40)
        prob = so.Problem(so.SQUARE, X, y, 0.15, so.GroupL1L2(gs)).validate()
        tr = so.solve_working_set(prob, SolverConfig(tol=1e-8))
        assert tr.converged
        w_f = so.solve_fista(prob, SolverConfig(tol=1e-10)).final_w
        assert np.abs(tr.final_w - w_f).max() < 1e-5


def test_all_gap_solvers_agree_on_strongly_convex_lasso():
    rng = np.random.default_rng(33)
    n = p = 25
    X = rng.standard_normal((n, p)) + 0.8 * np.eye(n)
    y = rng.standard_normal(n)
    prob = so.Problem(so.SQUARE, X, y, 0.2, so.L1()).validate()
    cfg = SolverConfig(tol=1e-10, epsilon_schedule=EpsilonSchedule(floor=1e-20))
    sols = {
        "ista": so.solve_ista(prob, cfg).final_w,
        "fista": so.solve_fista(prob, cfg).final_w,
        "cd": so.solve_cd(prob, cfg).final_w,
        "rel2": so.solve_reweighted_l2(prob, cfg).final_w,
        "ws": so.solve_working_set(prob, cfg).final_w,
        "homotopy": so.solve_homotopy(prob, cfg).final_w,
    }
    names = list(sols)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            assert np.abs(sols[a] - sols[b]).max() < 1e-5, (a, b)


def test_l1ball_projected_gradient():
    rng = np.random.default_rng(34)
    X = rng.standard_normal((30, 10))
    y = rng.standard_normal(30)
    radius = 0.8
    prob = so.Problem(so.SQUARE, X, y, 0.0, so.L1Ball(radius)).validate()
    tr = so.solve_fista(prob, SolverConfig(tol=1e-10))
    assert tr.converged
    assert np.abs(tr.final_w).sum() <= radius * (1 + 1e-9)
    # fixed point of the projected-gradient map
    grad = so.loss_value_grad(prob, tr.final_w).gradient
    L = so.lipschitz_bound(prob)
    step = prob.penalty.prox(tr.final_w - grad / L, 0.0)
    assert np.abs(step - tr.final_w).max() < 1e-8


def test_hierarchical_penalty_via_fista_matches_long_ista():
    rng = np.random.default_rng(35)
    tree = so.GroupStructure(
        (so.Group((1, 2), 0.9), so.Group((0, 1, 2)), so.Group((4, 5)),
         so.Group((3, 4, 5), 1.1)),
        so.TREE, 6,
    )
    X = rng.standard_normal((25, 6))
    y = rng.standard_normal(25)
    prob = so.Problem(so.SQUARE, X, y, 0.2, so.HierL1L2(tree)).validate()
    cfg = SolverConfig(tol=0.0, max_iter=30_000)
    w1 = so.solve_fista(prob, cfg).final_w
    w2 = so.solve_ista(prob, cfg).final_w
    assert np.abs(w1 - w2).max() < 1e-6


def test_unknown_solver():
    with pytest.raises(so.UnknownSolver):
        so.get_solver("nope")


def test_config_defaults_match_contract():
    cfg = SolverConfig()
    assert cfg.tol == 1e-6
    assert cfg.max_iter == 100_000
    assert cfg.max_seconds == 600.0
    assert cfg.line_search_factor == 2.0
    assert cfg.armijo == ArmijoParams(0.1, 0.5, 0.5, 1.0)
    assert cfg.epsilon_schedule == EpsilonSchedule(1e-2, 0.1, 1e-8)
