import numpy as np
import pytest

from collodyn import (
    AssumptionViolatedError,
    ConfigState,
    Gains,
    IntegralState,
    PSatIDController,
    ReferenceSchedule,
    ThetaView,
    build_chart,
    equilibrium_config,
    equilibrium_unactuated,
    integrate,
    p_sat_i_d,
    pd_plus_feedforward,
    pd_plus_q_space,
)
from collodyn import numdiff


def pcc_chart(pcc):
    return build_chart(
        pcc.actuation, q0=np.array([0.8, 0.3, 0.0, 0.6, -0.5, 0.0]), rows=(0, 1, 2)
    )


class TestGains:
    def test_defaults_carry_reference_values(self):
        g = Gains.defaults(3)
        assert np.allclose(g.K_P, 2.5e3 * np.eye(3))
        assert np.allclose(g.K_D, 10.0 * np.eye(3))
        assert np.allclose(g.K_I, 2.0e3 * np.eye(3))
        assert g.gamma == 1.0

    def test_positive_definiteness_enforced(self):
        with pytest.raises(ValueError):
            Gains(K_P=-np.eye(2), K_D=np.eye(2), K_I=np.eye(2))
        with pytest.raises(ValueError):
            Gains(K_P=np.eye(2), K_D=np.eye(2), K_I=np.eye(2), gamma=0.0)
        with pytest.raises(ValueError):
            Gains(K_P=np.array([[1.0, 0.5], [0.0, 1.0]]),
                  K_D=np.eye(2), K_I=np.eye(2))


class TestPSatID:
    def test_zero_error_gives_pure_derivative_action(self):
        gains = Gains.defaults(2)
        state = IntegralState.zeros(2)
        thetadot = np.array([0.4, -0.2])
        u = p_sat_i_d([1.0, 2.0], thetadot, [1.0, 2.0], gains, state, dt=1e-3)
        assert np.allclose(u, -gains.K_D @ thetadot)

    def test_integral_grows_linearly_under_constant_error(self):
        gains = Gains(K_P=np.eye(2), K_D=np.eye(2), K_I=np.eye(2), gamma=1.0)
        state = IntegralState.zeros(2)
        e = np.array([0.3, -0.8])
        for _ in range(100):
            p_sat_i_d(np.zeros(2), np.zeros(2), e, gains, state, dt=1e-2)
        assert np.allclose(state.accumulator, np.tanh(e) * 1.0, atol=1e-12)

    def test_left_rectangle_rule(self):
        # u is computed before the integral advances
        gains = Gains(K_P=np.eye(1), K_D=np.eye(1), K_I=np.eye(1), gamma=1.0)
        state = IntegralState.zeros(1)
        u0 = p_sat_i_d([0.0], [0.0], [1.0], gains, state, dt=0.1)
        assert u0[0] == pytest.approx(1.0)  # K_P e only; integral was empty
        u1 = p_sat_i_d([0.0], [0.0], [1.0], gains, state, dt=0.1)
        assert u1[0] == pytest.approx(1.0 + 0.1 * np.tanh(1.0))

    def test_increment_bound(self):
        # each step adds at most dt * |K_I/gamma| * sqrt(m) to the integral force
        gains = Gains.defaults(3)
        state = IntegralState.zeros(3)
        rng = np.random.default_rng(0)
        prev = (gains.K_I / gains.gamma) @ state.accumulator
        for _ in range(50):
            e = 10.0 * rng.standard_normal(3)
            state.advance(e, dt=1e-3)
            cur = (gains.K_I / gains.gamma) @ state.accumulator
            bound = 1e-3 * np.linalg.norm(gains.K_I / gains.gamma, 2) * np.sqrt(3)
            assert np.linalg.norm(cur - prev) <= bound + 1e-12
            prev = cur


class TestPDFeedforward:
    def test_zero_potential_zero_error_gives_zero(self, spring2r):
        act = spring2r.actuation
        chart = build_chart(act, q0=np.array([1.0, 0.7]))
        view = ThetaView(spring2r, act, chart)
        theta_ad = chart.h(np.array([1.1, 0.8]))
        u = pd_plus_feedforward(theta_ad, np.zeros(2), theta_ad, np.zeros(0),
                                view, Gains.defaults(2))
        assert np.allclose(u, 0.0, atol=1e-12)

    def test_error_along_eigenvector(self, spring2r):
        act = spring2r.actuation
        chart = build_chart(act, q0=np.array([1.0, 0.7]))
        view = ThetaView(spring2r, act, chart)
        K_P = np.array([[30.0, 10.0], [10.0, 20.0]])
        lam, vecs = np.linalg.eigh(K_P)
        gains = Gains(K_P=K_P, K_D=np.eye(2), K_I=np.eye(2))
        theta_ad = chart.h(np.array([1.1, 0.8]))
        v = vecs[:, 0]
        u = pd_plus_feedforward(theta_ad - v, np.zeros(2), theta_ad, np.zeros(0),
                                view, gains)
        assert np.allclose(u, lam[0] * v, atol=1e-10)

    def test_feedforward_matches_chain_rule_oracle(self, spring2r_grav):
        # independent oracle: finite differences of U(h^-1(theta))
        model = spring2r_grav
        act = model.actuation
        chart = build_chart(act, q0=np.array([1.0, 0.7]))
        view = ThetaView(model, act, chart)
        q_d = np.array([1.2, 0.5])
        theta_ad = chart.h(q_d)
        u = pd_plus_feedforward(theta_ad, np.zeros(2), theta_ad, np.zeros(0),
                                view, Gains.defaults(2))

        def U_theta(theta):
            return model.potential(chart.inverse(theta, guess=q_d))

        oracle = numdiff.gradient(U_theta, theta_ad, h=1e-7)
        assert np.allclose(u, oracle, atol=1e-6)


class TestQSpacePD:
    def test_square_actuation_exact_compensation(self, spring2r_grav):
        model = spring2r_grav
        act = model.actuation
        q_d = np.array([1.0, 0.6])
        gains = Gains.defaults(2)
        u = pd_plus_q_space(q_d, np.zeros(2), q_d, act, model, gains)
        expected = np.linalg.solve(act(q_d), model.potential_gradient(q_d))
        assert np.allclose(u, expected, atol=1e-10)

    def test_pseudoinverse_consistency(self, pcc, finger):
        # tall full-rank: A+ A = I_m; wide full-rank: A A+ = I_n
        q = np.array([0.5, 0.4, 0.01, -0.7, 1.0, 0.02])
        A_tall = pcc.actuation(q)
        assert np.allclose(np.linalg.pinv(A_tall) @ A_tall, np.eye(3), atol=1e-10)
        A_wide = finger.actuation(np.array([0.9]))
        assert np.allclose(A_wide @ np.linalg.pinv(A_wide), np.eye(1), atol=1e-10)

    def test_rank_deficient_target_rejected(self, pcc):
        with pytest.raises(np.linalg.LinAlgError):
            pd_plus_q_space(np.zeros(6), np.zeros(6), np.zeros(6),
                            pcc.actuation, pcc, Gains.defaults(3))


class TestEquilibriumUnactuated:
    def test_elastic_rest_without_gravity(self, pcc):
        from collodyn.models import Pcc2Model

        weightless = Pcc2Model(gravity=(0.0, 0.0, 0.0))
        act = weightless.actuation
        q_eq = np.array([0.8, 0.3, 0.0, 0.6, -0.5, 0.0])
        chart = build_chart(act, q0=q_eq, rows=(0, 1, 2))
        view = ThetaView(weightless, act, chart)
        # target theta_a of a bent shape; the unactuated equilibrium must
        # zero the unactuated gradient
        theta_ad = act.closed_form_g(q_eq)
        theta_ud = equilibrium_unactuated(view, theta_ad, chart.h(q_eq)[3:])
        res = view.unactuated_gradient(theta_ad, theta_ud)
        assert np.linalg.norm(res) < 1e-9

    def test_pcc_under_gravity(self, pcc):
        act = pcc.actuation
        u_ss = np.array([20.0, 2.0, 4.0])
        q_eq = equilibrium_config(pcc, act, u_ss, pcc.bend_guess(u_ss))
        chart = build_chart(act, q0=q_eq, rows=(0, 1, 2))
        view = ThetaView(pcc, act, chart)
        theta_ad = act.closed_form_g(q_eq)
        theta_ud = equilibrium_unactuated(view, theta_ad, chart.h(q_eq)[3:])
        assert np.linalg.norm(view.unactuated_gradient(theta_ad, theta_ud)) < 1e-9
        # gradient-norm oracle: the solved point is a strict local minimum
        H = numdiff.jacobian(
            lambda tu: view.unactuated_gradient(theta_ad, tu), theta_ud, h=1e-6
        )
        assert np.linalg.eigvalsh(0.5 * (H + H.T))[0] > 0.0

    def test_requires_underactuated_chart(self, spring2r):
        act = spring2r.actuation
        chart = build_chart(act, q0=np.array([1.0, 0.7]))
        view = ThetaView(spring2r, act, chart)
        with pytest.raises(ValueError):
            equilibrium_unactuated(view, chart.h(np.array([1.0, 0.7])), None)

    def test_nonconvex_guess_rejected(self):
        # a top-heavy inverted arm has a buckling (concave) potential in
        # the unactuated coordinates near the upright shape
        from collodyn.models import Pcc2Model

        heavy = Pcc2Model(seg_mass=2.0, gravity=(0.0, 0.0, -9.81))
        act = heavy.actuation
        q0 = np.array([0.3, 0.2, 0.0, 0.25, 0.1, 0.0])
        chart = build_chart(act, q0=q0, rows=(0, 1, 2))
        view = ThetaView(heavy, act, chart)
        view._guess = q0.copy()
        theta_ad = act.closed_form_g(q0)
        with pytest.raises(AssumptionViolatedError):
            equilibrium_unactuated(view, theta_ad, chart.h(q0)[3:])


class TestClosedLoopRegulation:
    def _single_setpoint_error(self, model, chart, channels, gains, q0, q_target):
        ref = chart.h(q_target)
        sched = ReferenceSchedule(times=(0.0,), values=(ref,))
        ctl = PSatIDController(gains, channels, chart)
        traj = integrate(
            model, model.actuation, ctl, sched, t_final=2.0, dt=1e-3,
            state0=ConfigState.rest(q0), chart=chart,
        )
        assert not traj.failed
        return np.linalg.norm(traj.theta[-1][: len(ref)] - ref)

    def test_p_sat_i_d_spring2r_ten_targets(self):
        # 10 random reachable setpoints, each reached to 1e-3 within 2 s
        from collodyn.models import SpringMechanism2R

        model = SpringMechanism2R(gravity=2.0, viscous=1.0)
        q0 = np.array([0.7, 0.4])
        chart = build_chart(model.actuation, q0=q0)
        gains = Gains(K_P=800 * np.eye(2), K_D=100 * np.eye(2), K_I=4000 * np.eye(2))
        rng = np.random.default_rng(33)
        for _ in range(10):
            q_t = q0 + rng.uniform(-0.15, 0.15, size=2)
            err = self._single_setpoint_error(model, chart, 2, gains, q0, q_t)
            assert err < 1e-3

    def test_p_sat_i_d_finger_ten_targets(self, finger):
        q0 = np.array([0.8])
        chart = build_chart(finger.actuation, q0=q0, columns=(0,))
        gains = Gains.defaults(1, scale=0.01)
        rng = np.random.default_rng(34)
        for _ in range(10):
            q_t = q0 + rng.uniform(-0.4, 0.4, size=1)
            err = self._single_setpoint_error(finger, chart, 1, gains, q0, q_t)
            assert err < 1e-3

    def test_storage_nonincreasing_near_convergence(self):
        # sampled passivity bookkeeping: once the error is small the
        # Hamiltonian plus controller storage stops growing between steps
        from collodyn.models import SpringMechanism2R

        model = SpringMechanism2R(gravity=2.0, viscous=1.0)
        act = model.actuation
        q0 = np.array([0.7, 0.4])
        chart = build_chart(act, q0=q0)
        ref = chart.h(np.array([0.8, 0.5]))
        sched = ReferenceSchedule(times=(0.0,), values=(ref,))
        gains = Gains(K_P=800 * np.eye(2), K_D=100 * np.eye(2), K_I=4000 * np.eye(2))
        ctl = PSatIDController(gains, 2, chart)
        traj = integrate(
            model, act, ctl, sched, t_final=4.0, dt=1e-3,
            state0=ConfigState.rest(q0), chart=chart,
        )
        errs = np.linalg.norm(traj.theta[:, :2] - ref, axis=1)
        settled = np.where(errs < 5e-4)[0]
        assert settled.size > 0
        k0 = settled[0]
        e = ref - traj.theta[:, :2]
        storage = traj.H.copy()
        for k in range(len(storage)):
            storage[k] += 0.5 * e[k] @ (gains.K_P @ e[k])
        tail = storage[k0:]
        assert tail[-1] <= tail[0] + 1e-8
