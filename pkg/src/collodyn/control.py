"""Regulators for damped collocated systems, posed in actuation coordinates.

Three laws are provided:

  - PD+ with feedforward, u = dU/dtheta_a at the target equilibrium plus
    proportional-derivative action on the actuated coordinates;
  - P-satI-D, proportional-derivative action plus a tanh-saturated
    integral term (no model knowledge beyond theta_a);
  - a PD+ regulator posed directly in q space for comparison, which
    compensates the potential through the actuation pseudoinverse and
    generally keeps a steady-state error on underactuated systems.

The target of the unactuated coordinates is not commanded; it is the
solution of dU/dtheta_u = 0 at the commanded theta_a, unique under the
convexity assumption, and is solved for by Newton iteration.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import numdiff
from .charts import OVERACTUATED, UNDERACTUATED, CoordinateChart
from .core import ActuationModel, MechanicalModel
from .errors import AssumptionViolatedError, DivergedError


def _check_spd(name: str, M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square")
    if not np.allclose(M, M.T, rtol=1e-10, atol=1e-12):
        raise ValueError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(M)[0] <= 0.0:
        raise ValueError(f"{name} must be positive definite")
    return M


@dataclass(frozen=True)
class Gains:
    """Controller gains; the matrix gains must be symmetric positive definite."""

    K_P: np.ndarray
    K_D: np.ndarray
    K_I: np.ndarray
    gamma: float = 1.0
    k_P: float = 2.5e3
    k_D: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "K_P", _check_spd("K_P", self.K_P))
        object.__setattr__(self, "K_D", _check_spd("K_D", self.K_D))
        object.__setattr__(self, "K_I", _check_spd("K_I", self.K_I))
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")

    @classmethod
    def defaults(cls, m: int, scale: float = 1.0) -> "Gains":
        """K_P = 2.5e3 I, K_D = 10 I, K_I = 2e3 I, gamma = 1, all scaled by
        a single per-model knob."""
        eye = np.eye(m)
        return cls(
            K_P=2.5e3 * scale * eye,
            K_D=10.0 * scale * eye,
            K_I=2.0e3 * scale * eye,
            gamma=1.0,
            k_P=2.5e3 * scale,
            k_D=10.0 * scale,
        )


@dataclass
class IntegralState:
    """Accumulator of tanh-saturated errors; single-owner mutable state."""

    accumulator: np.ndarray

    @classmethod
    def zeros(cls, m: int) -> "IntegralState":
        return cls(np.zeros(m))

    def advance(self, error, dt: float) -> None:
        self.accumulator = self.accumulator + dt * np.tanh(error)

    def reset(self) -> None:
        self.accumulator = np.zeros_like(self.accumulator)


def p_sat_i_d(theta_a, thetadot_a, theta_ad, gains: Gains, state: IntegralState, dt: float):
    """u = K_P e - K_D thetad_a + (K_I/gamma) * integral of tanh(e).

    Left-rectangle integral: u is computed with the current accumulator,
    which is then advanced by dt*tanh(e).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    e = np.asarray(theta_ad, dtype=float) - np.asarray(theta_a, dtype=float)
    u = (
        gains.K_P @ e
        - gains.K_D @ np.asarray(thetadot_a, dtype=float)
        + (gains.K_I / gains.gamma) @ state.accumulator
    )
    state.advance(e, dt)
    return u


def pd_plus_feedforward(theta_a, thetadot_a, theta_ad, theta_ud, view, gains: Gains):
    """u = dU/dtheta_a at (theta_ad, theta_ud) + K_P e - K_D thetad_a."""
    ff = view.potential_gradient_theta(np.concatenate([theta_ad, theta_ud]))[
        : len(theta_ad)
    ]
    e = np.asarray(theta_ad, dtype=float) - np.asarray(theta_a, dtype=float)
    return ff + gains.K_P @ e - gains.K_D @ np.asarray(thetadot_a, dtype=float)


def pd_plus_q_space(
    q,
    qdot,
    q_d,
    act: ActuationModel,
    model: MechanicalModel,
    gains: Gains,
    rank_rtol: float = 1e-10,
):
    """u = A(q_d)^+ dU/dq(q_d) + A(q)^T [k_P (q_d - q) - k_D qd].

    The comparison regulator posed in the original coordinates; requires
    A(q_d) full rank for the pseudoinverse.
    """
    q_d = np.asarray(q_d, dtype=float)
    A_d = act(q_d)
    sv = np.linalg.svd(A_d, compute_uv=False)
    if sv[-1] <= rank_rtol * sv[0]:
        raise np.linalg.LinAlgError("A(q_d) is rank deficient")
    u_ff = np.linalg.pinv(A_d) @ model.potential_gradient(q_d)
    e = q_d - np.asarray(q, dtype=float)
    return u_ff + act(q).T @ (gains.k_P * e - gains.k_D * np.asarray(qdot, dtype=float))


class ThetaView:
    """The mechanical model expressed in chart coordinates.

    Provides the potential gradient dU_theta/dtheta = J_h^-T dU/dq at
    q = h^-1(theta), with a warm-started Newton inverse so repeated nearby
    queries stay cheap.
    """

    def __init__(self, model: MechanicalModel, act: ActuationModel, chart: CoordinateChart):
        self.model = model
        self.act = act
        self.chart = chart
        self._guess = (
            np.asarray(chart.base_point, dtype=float).copy()
            if chart.base_point is not None
            else np.zeros(model.dof)
        )

    def to_config(self, theta, guess=None) -> np.ndarray:
        q = self.chart.inverse(theta, self._guess if guess is None else guess)
        self._guess = q
        return q

    def potential_gradient_theta(self, theta, guess=None) -> np.ndarray:
        q = self.to_config(theta, guess)
        return self.chart.inverse_transpose_jacobian(q) @ self.model.potential_gradient(q)

    def unactuated_gradient(self, theta_a, theta_u) -> np.ndarray:
        m = len(theta_a)
        return self.potential_gradient_theta(np.concatenate([theta_a, theta_u]))[m:]

    def theta_u_of_guess(self) -> np.ndarray:
        """Unactuated coordinates at the current warm-start configuration."""
        return self.chart.h(self._guess)[self.chart.m:]


def equilibrium_unactuated(
    view: ThetaView,
    theta_ad,
    guess_theta_u=None,
    tol: float = 1e-9,
    max_iter: int = 100,
    fd_step: float = 1e-6,
):
    """Solve dU_theta/dtheta_u = 0 at fixed theta_a = theta_ad.

    Newton iteration with a finite-difference Hessian.  The Hessian must
    be positive definite at the initial guess and at the solution
    (convexity of the potential in the unactuated coordinates); otherwise
    AssumptionViolatedError is raised.
    """
    theta_ad = np.asarray(theta_ad, dtype=float)
    n_u = view.chart.n - view.chart.m
    if n_u <= 0:
        raise ValueError("equilibrium_unactuated requires an underactuated chart")
    theta_u = (
        np.zeros(n_u)
        if guess_theta_u is None
        else np.asarray(guess_theta_u, dtype=float).copy()
    )

    def grad(tu):
        return view.unactuated_gradient(theta_ad, tu)

    def hessian(tu):
        return numdiff.jacobian(grad, tu, h=fd_step)

    H0 = hessian(theta_u)
    if np.linalg.eigvalsh(0.5 * (H0 + H0.T))[0] <= 0.0:
        raise AssumptionViolatedError(
            "potential not convex in the unactuated coordinates at the guess"
        )

    g = grad(theta_u)
    for _ in range(max_iter):
        if np.linalg.norm(g) <= tol:
            H = hessian(theta_u)
            if np.linalg.eigvalsh(0.5 * (H + H.T))[0] <= 0.0:
                raise AssumptionViolatedError(
                    "unactuated Hessian not positive definite at the solution"
                )
            return theta_u
        H = hessian(theta_u)
        step = np.linalg.solve(H, -g)
        alpha = 1.0
        gnorm = np.linalg.norm(g)
        while alpha > 1e-6:
            candidate = theta_u + alpha * step
            g_new = grad(candidate)
            if np.linalg.norm(g_new) < gnorm:
                theta_u, g = candidate, g_new
                break
            alpha *= 0.5
        else:
            raise DivergedError("equilibrium Newton stalled")
    raise DivergedError(f"no equilibrium within {max_iter} Newton iterations")


def equilibrium_config(
    model: MechanicalModel,
    act: ActuationModel,
    u_ss,
    guess_q,
    tol: float = 1e-10,
    max_iter: int = 100,
    continuation_steps: int = 8,
):
    """Static configuration with dU/dq = A(q) u_ss, by damped Newton.

    Falls back to continuation in the input magnitude when the direct
    solve stalls.  Used to generate reachable references for the
    regulation experiments.
    """
    u_ss = np.asarray(u_ss, dtype=float)
    guess_q = np.asarray(guess_q, dtype=float)
    try:
        return _statics_newton(model, act, u_ss, guess_q, tol, max_iter)
    except DivergedError:
        q = guess_q
        for frac in np.linspace(1.0 / continuation_steps, 1.0, continuation_steps):
            q = _statics_newton(model, act, frac * u_ss, q, tol, max_iter)
        return q


def _statics_newton(model, act, u_ss, guess_q, tol, max_iter):
    q = np.asarray(guess_q, dtype=float).copy()

    def residual(qk):
        return model.potential_gradient(qk) - act(qk) @ u_ss

    r = residual(q)
    for _ in range(max_iter):
        if np.linalg.norm(r) <= tol:
            return q
        Jr = numdiff.jacobian(residual, q, h=1e-6)
        step = np.linalg.solve(Jr, -r)
        alpha = 1.0
        rnorm = np.linalg.norm(r)
        while alpha > 1e-8:
            q_try = q + alpha * step
            r_try = residual(q_try)
            if np.linalg.norm(r_try) < rnorm:
                q, r = q_try, r_try
                break
            alpha *= 0.5
        else:
            raise DivergedError("statics Newton stalled")
    raise DivergedError(f"no static equilibrium within {max_iter} iterations")


def _embed_columns(u_reduced, m: int, columns) -> np.ndarray:
    u = np.zeros(m)
    u[list(columns)] = u_reduced
    return u


class PSatIDController:
    """Closed-loop wrapper around :func:`p_sat_i_d` with integral state."""

    name = "p_sat_i_d"

    def __init__(self, gains: Gains, channels: int, chart: Optional[CoordinateChart] = None):
        self.gains = gains
        self.state = IntegralState.zeros(channels)
        self.chart = chart

    def step(self, inputs, dt: float) -> np.ndarray:
        u = p_sat_i_d(
            inputs.theta_a, inputs.thetadot_a, inputs.reference,
            self.gains, self.state, dt,
        )
        if self.chart is not None and self.chart.regime == OVERACTUATED:
            return _embed_columns(u, self.chart.m, self.chart.columns)
        return u


class PDFeedforwardController:
    """PD+ with feedforward; the unactuated target is solved per reference."""

    name = "pd_plus_feedforward"

    def __init__(self, gains: Gains, view: ThetaView):
        self.gains = gains
        self.view = view
        self._cache: dict = {}

    def prepare(self, theta_ad, guess_theta_u, guess_q=None) -> np.ndarray:
        """Precompute the unactuated target for one reference step.

        ``guess_q`` seeds the chart inversion; pass the configuration the
        reference was generated from to stay on the right chart branch.
        """
        if guess_q is not None:
            self.view._guess = np.asarray(guess_q, dtype=float).copy()
        theta_ud = equilibrium_unactuated(self.view, theta_ad, guess_theta_u)
        self._cache[np.asarray(theta_ad, dtype=float).tobytes()] = theta_ud
        return theta_ud

    def theta_ud(self, theta_ad) -> np.ndarray:
        if self.view.chart.regime != UNDERACTUATED:
            return np.zeros(0)
        key = np.asarray(theta_ad, dtype=float).tobytes()
        if key not in self._cache:
            guess = self.view.theta_u_of_guess()
            self._cache[key] = equilibrium_unactuated(self.view, theta_ad, guess)
        return self._cache[key]

    def step(self, inputs, dt: float) -> np.ndarray:
        theta_ud = self.theta_ud(inputs.reference)
        u = pd_plus_feedforward(
            inputs.theta_a, inputs.thetadot_a, inputs.reference, theta_ud,
            self.view, self.gains,
        )
        chart = self.view.chart
        if chart.regime == OVERACTUATED:
            return _embed_columns(u, chart.m, chart.columns)
        return u


class QSpacePDController:
    """Comparison PD+ posed in the original generalized coordinates."""

    name = "pd_plus_q_space"

    def __init__(self, gains: Gains, model: MechanicalModel, act: ActuationModel):
        self.gains = gains
        self.model = model
        self.act = act

    def step(self, inputs, dt: float) -> np.ndarray:
        return pd_plus_q_space(
            inputs.q, inputs.qdot, inputs.reference, self.act, self.model, self.gains
        )
