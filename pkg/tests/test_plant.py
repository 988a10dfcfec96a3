import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from petreg import matops
from petreg.errors import InvalidInputError, NoSolutionError
from petreg.plant import (
    FollowerModel,
    LeaderModel,
    adaptive_regulator_step,
    follower_derivative,
    leader_flow,
    measurement,
    pack_chi,
    regulation_error,
    regulator_operator,
    regulator_residuals,
    regulator_rhs,
    solve_regulator_direct,
    unpack_chi,
)

S = np.array([[0.0, 1.0], [-1.0, 0.0]])


def follower(delta=-0.3, **kw):
    base = dict(
        a=[[0, 1], [0, delta]], b=[[0], [1]], c=[[1, 0]], d=[[0]], e=np.zeros((2, 2)),
        f=[[-1, 0]], c_m=[[1, 0]], d_m=[[0]], f_m=[[0, 0]], x0=[0.2, 0.3],
    )
    base.update(kw)
    return FollowerModel(**base)


vec2 = arrays(np.float64, 2, elements=st.floats(-10, 10))


class TestLeader:
    def test_rejects_non_skew(self):
        with pytest.raises(InvalidInputError):
            LeaderModel([[0, 1], [0, 0]], [1, 0])

    def test_rejects_bad_v0(self):
        with pytest.raises(InvalidInputError):
            LeaderModel(S, [1, 0, 0])

    def test_constant_leader(self):
        m = LeaderModel(np.zeros((2, 2)), [0.9, -0.5])
        np.testing.assert_array_equal(leader_flow(m, 7.3), [0.9, -0.5])

    def test_quarter_turn(self):
        m = LeaderModel(S, [0.9, -0.5])
        # exp(S t) = [[cos t, sin t], [-sin t, cos t]]
        np.testing.assert_allclose(leader_flow(m, np.pi / 2), [-0.5, -0.9], atol=1e-14)

    def test_negative_time(self):
        with pytest.raises(InvalidInputError):
            leader_flow(LeaderModel(S, [1, 0]), -1)

    @settings(max_examples=100)
    @given(vec2, st.floats(0, 50), st.floats(0, 50))
    def test_norm_and_semigroup(self, v0, t, s):
        m = LeaderModel(S, v0)
        vt = leader_flow(m, t)
        assert np.linalg.norm(vt) == pytest.approx(np.linalg.norm(v0), rel=1e-10, abs=1e-12)
        np.testing.assert_allclose(leader_flow(m, t + s), matops.mat_exp(S * s) @ vt, atol=1e-10 * max(1, np.linalg.norm(v0)))


class TestFollower:
    def test_dimension_check(self):
        with pytest.raises(InvalidInputError):
            follower(b=[[0, 1], [1, 0], [0, 0]])

    def test_derivative_examples(self):
        m = follower()
        np.testing.assert_array_equal(follower_derivative(m, [0, 0], [0], [0, 0]), [0, 0])
        np.testing.assert_allclose(follower_derivative(m, [0, 1], [0], [0, 0]), [1, -0.3])

    def test_error_examples(self):
        m = follower()
        np.testing.assert_allclose(regulation_error(m, [1, 0], [0], [1, 0]), [0])
        np.testing.assert_allclose(regulation_error(m, [0.2, 0.3], [0], [0.9, -0.5]), [-0.7])
        np.testing.assert_array_equal(measurement(m, [0, 0], [0], [0, 0]), [0])

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            follower_derivative(follower(), [0, 0, 0], [0], [0, 0])

    @settings(max_examples=100)
    @given(vec2, vec2, st.floats(-5, 5), st.floats(-5, 5), vec2, vec2)
    def test_superposition(self, x1, x2, u1, u2, v1, v2):
        m = follower(e=[[0.5, 0], [0, -1]])
        lhs = follower_derivative(m, x1 + x2, [u1 + u2], v1 + v2)
        rhs = follower_derivative(m, x1, [u1], v1) + follower_derivative(m, x2, [u2], v2)
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def regulator_oracle(m, s):
    """Dense solve of the six-unknown system written out row by row.

    Unknowns ``x11 x12 x21 x22 u1 u2``.  Rows: ``X S - A X - B U = E`` (4),
    ``C X + F = 0`` (2), for ``A = [[0,1],[0,a22]]``, ``B = [0;1]``, ``C = [1,0]``.
    """
    a22 = m.a[1, 1]
    s11, s12, s21, s22 = s.ravel()
    rows = [
        [s11, s21, -1, 0, 0, 0],                    # (XS - AX - BU)_11
        [s12, s22, 0, -1, 0, 0],                    # (XS - AX - BU)_12
        [0, 0, s11 - a22, s21, -1, 0],              # (XS - AX - BU)_21
        [0, 0, s12, s22 - a22, 0, -1],              # (XS - AX - BU)_22
        [1, 0, 0, 0, 0, 0],                         # (CX)_1
        [0, 1, 0, 0, 0, 0],                         # (CX)_2
    ]
    rhs = list(m.e.ravel()) + list(-m.f.ravel())
    z = np.linalg.solve(np.array(rows, float), rhs)
    return z[:4].reshape(2, 2), z[4:].reshape(1, 2)


class TestRegulator:
    def test_four_followers_follower(self):
        m = follower(-0.3)
        sol = solve_regulator_direct(m, S)
        x_ref, u_ref = regulator_oracle(m, S)
        np.testing.assert_allclose(x_ref, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(u_ref, [[-1, 0.3]], atol=1e-12)
        np.testing.assert_allclose(sol.x_sol, np.eye(2), atol=1e-9)
        np.testing.assert_allclose(sol.u_sol, [[-1, 0.3]], atol=1e-9)
        assert max(regulator_residuals(m, S, sol)) <= 1e-9

    @pytest.mark.parametrize("delta", [-0.3, -0.4, -0.5])
    def test_against_hand_oracle(self, delta):
        m = follower(delta)
        sol = solve_regulator_direct(m, S)
        x_ref, u_ref = regulator_oracle(m, S)
        np.testing.assert_allclose(sol.x_sol, x_ref, atol=1e-12)
        np.testing.assert_allclose(sol.u_sol, u_ref, atol=1e-12)

    def test_constant_leader(self):
        sol = solve_regulator_direct(follower(), np.zeros((2, 2)))
        np.testing.assert_allclose(sol.x_sol, [[1, 0], [0, 0]], atol=1e-12)
        np.testing.assert_allclose(sol.u_sol, [[0, 0]], atol=1e-12)

    def test_homogeneous(self):
        sol = solve_regulator_direct(follower(f=np.zeros((1, 2))), S)
        np.testing.assert_allclose(sol.x_sol, 0, atol=1e-14)
        np.testing.assert_allclose(sol.u_sol, 0, atol=1e-14)

    def test_singular(self):
        # a leader mode that is a transmission zero of the plant: C = [0, 1] blocks constant signals
        m = follower(c=[[0, 1]], a=[[0, 0], [0, -1]])
        with pytest.raises(NoSolutionError):
            solve_regulator_direct(m, np.zeros((2, 2)))

    @settings(max_examples=100)
    @given(st.randoms(use_true_random=False))
    def test_backed_out_instances(self, rnd):
        rng = np.random.default_rng(rnd.randint(0, 2**32 - 1))
        n, nu, nv = 3, 2, 2
        w = rng.uniform(0.2, 3)
        s = np.array([[0, w], [-w, 0]])
        a, b = rng.normal(size=(n, n)), rng.normal(size=(n, nu))
        c, d = rng.normal(size=(nu, n)), rng.normal(size=(nu, nu))
        x_true, u_true = rng.normal(size=(n, nv)), rng.normal(size=(nu, nv))
        e = x_true @ s - a @ x_true - b @ u_true
        f = -(c @ x_true + d @ u_true)
        m = FollowerModel(a, b, c, d, e, f, c, d, np.zeros((nu, nv)), np.zeros(n))
        op = regulator_operator(m, s)
        if np.linalg.cond(op) > 1e8:
            return
        sol = solve_regulator_direct(m, s)
        np.testing.assert_allclose(sol.x_sol, x_true, atol=1e-7)
        np.testing.assert_allclose(sol.u_sol, u_true, atol=1e-7)

    def test_pack_unpack(self):
        x, u = np.arange(4.0).reshape(2, 2), np.array([[7.0, 8.0]])
        chi = pack_chi(x, u)
        x2, u2 = unpack_chi(chi, follower())
        np.testing.assert_array_equal(x2, x)
        np.testing.assert_array_equal(u2, u)

    def test_operator_matches_definition(self):
        m = follower()
        sol = solve_regulator_direct(m, S)
        np.testing.assert_allclose(regulator_operator(m, S) @ pack_chi(sol.x_sol, sol.u_sol), regulator_rhs(m), atol=1e-12)


class TestAdaptive:
    def test_fixed_point(self):
        m = follower()
        sol = solve_regulator_direct(m, S)
        np.testing.assert_allclose(adaptive_regulator_step(pack_chi(sol.x_sol, sol.u_sol), S, m, 30), 0, atol=1e-12)

    def test_linear_in_kappa(self):
        m = follower()
        chi = np.linspace(-1, 1, 6)
        np.testing.assert_allclose(adaptive_regulator_step(chi, S, m, 60), 2 * adaptive_regulator_step(chi, S, m, 30))

    def test_rejects_kappa(self):
        with pytest.raises(InvalidInputError):
            adaptive_regulator_step(np.zeros(6), S, follower(), 0)

    def _integrate(self, s_of_t, t_end, h=1e-3, kappa=30.0):
        m = follower()
        chi = np.zeros(6)
        t = 0.0
        for _ in range(int(round(t_end / h))):
            k1 = adaptive_regulator_step(chi, s_of_t(t), m, kappa)
            k2 = adaptive_regulator_step(chi + h / 2 * k1, s_of_t(t + h / 2), m, kappa)
            k3 = adaptive_regulator_step(chi + h / 2 * k2, s_of_t(t + h / 2), m, kappa)
            k4 = adaptive_regulator_step(chi + h * k3, s_of_t(t + h), m, kappa)
            chi = chi + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        sol = solve_regulator_direct(m, S)
        return np.linalg.norm(chi - pack_chi(sol.x_sol, sol.u_sol))

    def test_converges_with_exact_s(self):
        assert self._integrate(lambda t: S, 5.0) < 1e-4

    def test_tracks_decaying_s_error(self):
        pert = np.array([[0.3, -0.5], [0.2, 0.1]])
        assert self._integrate(lambda t: S + np.exp(-2 * t) * pert, 10.0) < 1e-4
