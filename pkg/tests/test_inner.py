import numpy as np
import pytest

from bvseg.energies import ModelParams
from bvseg.primal_dual import InnerProblem, gap_bv, gap_h1, solve_inner

from oracles import fenchel_gap_bv, fenchel_gap_h1, jacobi_box_qp


def make_problem(model, vbar, s=0.4, gamma=1.0, eps=0.5, h=1.0):
    params = ModelParams(alpha=1.0, beta=1.0, gamma=gamma, epsilon=eps, h=h, model=model)
    return InnerProblem(vbar=np.asarray(vbar, dtype=float), s=s, params=params)


def feasible_dual(rng, shape, radius):
    q = rng.standard_normal((2,) + shape)
    mag = np.hypot(q[0], q[1])
    return q / np.maximum(1.0, mag / radius) * 0.9


class TestInnerProblem:
    def test_anchor_bv(self):
        prob = make_problem("bv", np.full((2, 2), 0.25), s=0.4, gamma=1.0, eps=0.5)
        np.testing.assert_allclose(prob.anchor, 0.25 + 0.4 / (2 * 0.5))

    def test_anchor_and_mu_h1(self):
        prob = make_problem("h1", np.full((2, 2), 0.25), s=0.4, gamma=1.0, eps=0.5, h=0.5)
        want = (2 * 0.5 * 0.25 + 0.4) / (2 * 0.5 + 0.4)
        np.testing.assert_allclose(prob.anchor, want)
        assert prob.mu == pytest.approx(4 * 1.0 * 0.25 * 0.4 / (0.25 * (1.0 + 0.4)))

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError):
            make_problem("bv", np.zeros((2, 2)), s=0.0)


class TestSolveInner:
    def test_constant_data_bv_closed_form(self):
        # with constant data the TV term vanishes at the minimizer, which is
        # the clamped anchor
        for c, s in ((0.3, 0.4), (0.9, 1.5), (-0.2, 0.7)):
            prob = make_problem("bv", np.full((6, 6), c), s=s)
            expected = np.clip(c + prob.params.gamma * s / (2 * prob.params.epsilon), 0, 1)
            v, state = solve_inner(prob, tol2=1e-13, max_inner=50_000, p0=np.full((6, 6), 0.5))
            np.testing.assert_allclose(v, expected, atol=1e-6)
            assert state.converged

    def test_constant_data_h1_closed_form(self):
        prob = make_problem("h1", np.full((5, 5), 0.3), s=0.8)
        v, state = solve_inner(prob, tol2=1e-12, max_inner=50_000, p0=np.full((5, 5), 0.1))
        np.testing.assert_allclose(v, prob.anchor, atol=1e-6)
        assert state.converged

    def test_h1_matches_projected_jacobi(self):
        rng = np.random.default_rng(21)
        for trial in range(3):
            vbar = rng.uniform(-0.3, 1.2, (8, 8))
            prob = make_problem("h1", vbar, s=float(rng.uniform(0.3, 1.5)))
            v, state = solve_inner(prob, tol2=1e-13, max_inner=100_000)
            want = jacobi_box_qp(prob.anchor, prob.mu)
            assert np.max(np.abs(v - want)) < 1e-5, f"trial {trial}"

    def test_primal_iterates_stay_in_unit_box(self):
        rng = np.random.default_rng(22)
        prob = make_problem("bv", rng.uniform(-1, 2, (7, 7)), s=0.9)
        v, state = solve_inner(prob, tol2=1e-8, max_inner=20_000)
        assert np.all(v >= 0.0) and np.all(v <= 1.0)
        assert np.all(state.p >= 0.0) and np.all(state.p <= 1.0)

    def test_gap_history_decreases_below_tol(self):
        rng = np.random.default_rng(23)
        prob = make_problem("bv", rng.uniform(-0.3, 1.0, (8, 8)), s=0.4)
        _, state = solve_inner(prob, tol2=1e-8, max_inner=100_000)
        assert state.converged
        sampled = state.gap_history[::10] + [state.gap_history[-1]]
        assert sampled[-1] <= 1e-8

    def test_tau_constraint_boundary(self):
        prob = make_problem("bv", np.full((3, 3), 0.5))
        solve_inner(prob, tol2=1e-3, max_inner=10, tau=1.0 / np.sqrt(8.0))  # tau^2 = 1/8 ok
        with pytest.raises(ValueError):
            solve_inner(prob, tol2=1e-3, max_inner=10, tau=0.36)  # tau^2 > 1/8

    def test_exhaustion_reported_not_fatal(self):
        rng = np.random.default_rng(24)
        prob = make_problem("bv", rng.uniform(0, 1, (8, 8)), s=0.5)
        v, state = solve_inner(prob, tol2=1e-14, max_inner=5)
        assert not state.converged
        assert state.iters == 5
        assert v.shape == (8, 8)

    def test_deterministic(self):
        rng = np.random.default_rng(25)
        vbar = rng.uniform(-0.5, 1.5, (9, 9))
        q0 = rng.standard_normal((2, 9, 9)) * 0.1
        prob = make_problem("bv", vbar, s=0.7)
        v1, s1 = solve_inner(prob, tol2=1e-9, max_inner=30_000, q0=q0)
        v2, s2 = solve_inner(prob, tol2=1e-9, max_inner=30_000, q0=q0)
        assert np.array_equal(v1, v2)
        assert np.array_equal(s1.q, s2.q)
        assert s1.iters == s2.iters and s1.gap == s2.gap

    def test_warm_start_preserves_solution(self):
        rng = np.random.default_rng(26)
        prob = make_problem("bv", rng.uniform(0, 1, (6, 6)), s=0.5)
        v_cold, _ = solve_inner(prob, tol2=1e-11, max_inner=100_000)
        q_warm = feasible_dual(rng, (6, 6), prob.tv_weight)
        v_warm, _ = solve_inner(prob, tol2=1e-11, max_inner=100_000, q0=q_warm)
        np.testing.assert_allclose(v_cold, v_warm, atol=1e-5)


class TestGapBv:
    def test_zero_at_constant_saddle(self):
        prob = make_problem("bv", np.full((6, 6), 0.3), s=0.4)
        v, state = solve_inner(prob, tol2=1e-12, max_inner=100_000)
        gap, moved = gap_bv(v, state.q, prob)
        assert gap <= 1e-10
        assert not moved

    def test_reduces_to_tv_when_p_equals_aux(self):
        rng = np.random.default_rng(27)
        p = rng.uniform(0.1, 0.9, (5, 5))
        # choose vbar so the anchor equals p exactly; with q = 0 the last
        # three gap terms cancel and only the weighted TV survives
        s, gamma, eps = 0.4, 1.0, 0.5
        prob = make_problem("bv", p - gamma * s / (2 * eps), s=s, gamma=gamma, eps=eps)
        np.testing.assert_allclose(prob.anchor, p, atol=1e-15)
        gap, _ = gap_bv(p, np.zeros((2, 5, 5)), prob)
        from bvseg.fields import grad, norm1, pointwise_norm
        want = prob.tv_weight * norm1(pointwise_norm(grad(p, 1.0)))
        assert gap == pytest.approx(want, rel=1e-9, abs=1e-12)

    def test_matches_fenchel_oracle_and_nonnegative(self):
        rng = np.random.default_rng(28)
        for _ in range(20):
            vbar = rng.uniform(-0.5, 1.5, (4, 4))
            prob = make_problem("bv", vbar, s=float(rng.uniform(0.2, 1.2)))
            p = rng.uniform(0, 1, (4, 4))
            q = feasible_dual(rng, (4, 4), prob.tv_weight)
            gap, moved = gap_bv(p, q, prob)
            assert not moved
            assert gap >= -1e-10
            assert gap == pytest.approx(fenchel_gap_bv(p, q, prob), abs=1e-8)

    def test_infeasible_dual_projected_and_flagged(self):
        prob = make_problem("bv", np.full((3, 3), 0.5), s=0.4)
        q = np.full((2, 3, 3), 10.0)  # way outside the ball
        gap, moved = gap_bv(np.full((3, 3), 0.5), q, prob)
        assert moved
        assert np.isfinite(gap)


class TestGapH1:
    def test_small_at_constant_saddle(self):
        prob = make_problem("h1", np.full((6, 6), 0.3), s=0.8)
        v, state = solve_inner(prob, tol2=1e-12, max_inner=100_000)
        assert gap_h1(v, state.q, prob) <= 1e-10

    def test_reduces_to_dirichlet_when_p_equals_aux(self):
        rng = np.random.default_rng(29)
        p = rng.uniform(0.1, 0.9, (5, 5))
        # choose vbar so that the anchor equals p exactly, then q = 0
        prob0 = make_problem("h1", p, s=0.4)
        par = prob0.params
        gs = par.gamma * 0.4
        vbar = ((2 * par.epsilon + gs) * p - gs) / (2 * par.epsilon)
        prob = make_problem("h1", vbar, s=0.4)
        np.testing.assert_allclose(prob.anchor, p, atol=1e-12)
        gap = gap_h1(p, np.zeros((2, 5, 5)), prob)
        from bvseg.fields import grad
        gp = grad(p, 1.0)
        want = 0.5 * prob.mu * float(np.sum(gp[0] ** 2 + gp[1] ** 2))
        assert gap == pytest.approx(want, rel=1e-9)

    def test_matches_fenchel_oracle_and_nonnegative(self):
        rng = np.random.default_rng(30)
        for _ in range(20):
            vbar = rng.uniform(-0.5, 1.5, (4, 4))
            prob = make_problem("h1", vbar, s=float(rng.uniform(0.2, 1.2)))
            p = rng.uniform(0, 1, (4, 4))
            q = rng.standard_normal((2, 4, 4))
            gap = gap_h1(p, q, prob)
            assert gap >= -1e-10
            assert gap == pytest.approx(fenchel_gap_h1(p, q, prob), abs=1e-8)
