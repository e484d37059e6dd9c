"""Integrability testing and input-decoupling coordinate charts.

The passive output yd = A(q)^T qd of an input-affine Lagrangian system is
integrable exactly when every column of A has a symmetric Jacobian
(dA_ji/dq_k = dA_ki/dq_j for all j, k).  When it is, the integral
y = g(q) defines actuation coordinates in which the generalized force
becomes [I; 0] u; this module tests the condition numerically and builds
the corresponding charts for fully actuated, overactuated, and
underactuated systems.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.stats import qmc

from .core import ActuationModel
from .errors import (
    DivergedError,
    NotCollocatedError,
    SingularConfigurationError,
)

INTEGRABLE = "integrable"
NON_INTEGRABLE = "non_integrable"
INCONCLUSIVE = "inconclusive"

FULLY_ACTUATED = "fully_actuated"
OVERACTUATED = "overactuated"
UNDERACTUATED = "underactuated"

DEFAULT_TOL = 1e-4
DEFAULT_SAMPLES = 512
_FD_SCALE = 1e-5


@dataclass(frozen=True)
class IntegrabilityReport:
    """Per-column verdicts of the mixed-partial symmetry test."""

    verdicts: tuple
    worst_residuals: tuple
    samples_used: int
    samples_skipped: int
    tolerance: float
    seed: int
    model: str = "actuation"

    @property
    def all_integrable(self) -> bool:
        return all(v == INTEGRABLE for v in self.verdicts)

    @property
    def any_non_integrable(self) -> bool:
        return any(v == NON_INTEGRABLE for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "verdicts": list(self.verdicts),
            "worst_residuals": [float(r) for r in self.worst_residuals],
            "samples_used": self.samples_used,
            "samples_skipped": self.samples_skipped,
            "tolerance": self.tolerance,
            "seed": self.seed,
        }


def _classify(residual: float, tol: float) -> str:
    if residual <= tol:
        return INTEGRABLE
    if residual > 10.0 * tol:
        return NON_INTEGRABLE
    return INCONCLUSIVE


def check_integrability(
    act: ActuationModel,
    box,
    tol: float = DEFAULT_TOL,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    fd_step: float = _FD_SCALE,
) -> IntegrabilityReport:
    """Test dA_ji/dq_k = dA_ki/dq_j per column over a sampled box.

    Central differences with step fd_step*(1+|q_k|); low-discrepancy
    samples with a fixed, reported seed.  Samples on declared
    singularities are skipped and counted.
    """
    box = np.asarray(box, dtype=float)
    if box.ndim != 2 or box.shape != (act.n, 2):
        raise ValueError(f"box must have shape ({act.n}, 2), got {box.shape}")
    if np.any(box[:, 1] <= box[:, 0]):
        raise ValueError("empty domain: box bounds must satisfy lo < hi")
    if tol <= 0:
        raise ValueError("tolerance must be positive")

    sampler = qmc.Sobol(d=act.n, scramble=True, seed=seed)
    points = box[:, 0] + sampler.random(samples) * (box[:, 1] - box[:, 0])

    worst = np.zeros(act.m)
    used = 0
    skipped = 0
    for q in points:
        if act.is_singular(q):
            skipped += 1
            continue
        used += 1
        dA = np.empty((act.n, act.m, act.n))
        for k in range(act.n):
            h = fd_step * (1.0 + abs(q[k]))
            qp = q.copy()
            qm = q.copy()
            qp[k] += h
            qm[k] -= h
            dA[:, :, k] = (act(qp) - act(qm)) / (2.0 * h)
        asym = np.abs(dA - dA.transpose(2, 1, 0)).max(axis=(0, 2))
        worst = np.maximum(worst, asym)
    if used == 0:
        raise ValueError("all samples were skipped as singular; adjust the box")

    return IntegrabilityReport(
        verdicts=tuple(_classify(r, tol) for r in worst),
        worst_residuals=tuple(float(r) for r in worst),
        samples_used=used,
        samples_skipped=skipped,
        tolerance=tol,
        seed=seed,
        model=act.name,
    )


class PathIntegrator:
    """Trapezoidal accumulator for y' = A(q)^T dq along a configuration path.

    Actuation coordinates are defined up to a constant, so ``reset`` zeroes
    the accumulator at the current base point.  Single-owner mutable state:
    not shareable across threads.
    """

    scheme = "trapezoidal"

    def __init__(self, act: ActuationModel, q0):
        self._act = act
        self.last_q = np.asarray(q0, dtype=float).copy()
        self._last_At = act(self.last_q).T
        self.accumulated_y = np.zeros(act.m)

    def reset(self, q0=None):
        if q0 is not None:
            self.last_q = np.asarray(q0, dtype=float).copy()
            self._last_At = self._act(self.last_q).T
        self.accumulated_y = np.zeros(self._act.m)

    def advance(self, q_new) -> np.ndarray:
        """Accumulate 0.5 (A(q_old) + A(q_new))^T (q_new - q_old)."""
        q_new = np.asarray(q_new, dtype=float)
        At_new = self._act(q_new).T
        self.accumulated_y = self.accumulated_y + 0.5 * (
            (self._last_At + At_new) @ (q_new - self.last_q)
        )
        self.last_q = q_new.copy()
        self._last_At = At_new
        return self.accumulated_y


def integrate_passive_output(
    integrator: PathIntegrator,
    act: ActuationModel,
    times,
    configs,
) -> np.ndarray:
    """Integrate y' = A^T qd over a timestamped configuration path.

    The q-space trapezoid rule is exact for A constant; for integrable A,
    the result depends on the endpoints only, to O(dt^2).
    """
    times = np.asarray(times, dtype=float)
    configs = np.atleast_2d(np.asarray(configs, dtype=float))
    if times.ndim != 1 or times.size != configs.shape[0]:
        raise ValueError("times and configs must have matching lengths")
    if np.any(np.diff(times) <= 0):
        raise ValueError("path timestamps must be strictly increasing")
    integrator.reset(configs[0])
    for q in configs[1:]:
        integrator.advance(q)
    return integrator.accumulated_y


def select_rows_greedy(A: np.ndarray, count: int) -> tuple:
    """Greedily pick ``count`` rows maximizing the smallest singular value.

    Ties (within a relative margin) break toward lower row indices.
    """
    n = A.shape[0]
    selected: list = []
    for _ in range(count):
        best_idx = -1
        best_sv = -1.0
        for r in range(n):
            if r in selected:
                continue
            block = A[selected + [r], :]
            sv = np.linalg.svd(block, compute_uv=False)[-1]
            if sv > best_sv * (1.0 + 1e-12) + 1e-300:
                best_sv = sv
                best_idx = r
        selected.append(best_idx)
    return tuple(sorted(selected))


def numeric_actuation_integral(act: ActuationModel, q_ref, order: int = 48):
    """Line-integral evaluation of g(q) from a reference point.

    g(q) = integral_0^1 A(q_ref + s (q - q_ref))^T (q - q_ref) ds by fixed
    Gauss-Legendre quadrature.  Well defined (path independent) whenever
    the integrability condition holds on the segment.
    """
    q_ref = np.asarray(q_ref, dtype=float).copy()
    nodes, weights = leggauss(order)
    s = 0.5 * (nodes + 1.0)
    w = 0.5 * weights

    def g(q):
        q = np.asarray(q, dtype=float)
        dq = q - q_ref
        out = np.zeros(act.m)
        for si, wi in zip(s, w):
            out += wi * (act(q_ref + si * dq).T @ dq)
        return out

    return g


@dataclass(frozen=True)
class CoordinateChart:
    """Diffeomorphism theta = h(q) that decouples the input channels.

    For fully actuated and underactuated systems the transformed force is
    [u; 0]; for overactuated systems it is [I  A_a^-1 A_o] u.  The first r
    rows of the Jacobian are A^T blocks; the remaining rows are the
    unactuated complement (identity selector rows by default).
    """

    regime: str
    act: ActuationModel
    actuated_rows: tuple
    unactuated_rows: tuple = ()
    columns: tuple = ()
    g: Callable[[np.ndarray], np.ndarray] = None
    theta_u_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    theta_u_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    base_point: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.act.n

    @property
    def m(self) -> int:
        return self.act.m

    @property
    def r(self) -> int:
        return min(self.n, self.m)

    def h(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.regime == UNDERACTUATED:
            theta_a = self.g(q)
            if self.theta_u_fn is not None:
                theta_u = np.asarray(self.theta_u_fn(q), dtype=float)
            else:
                theta_u = q[list(self.unactuated_rows)]
            return np.concatenate([theta_a, theta_u])
        if self.regime == OVERACTUATED:
            return self.g(q)[list(self.columns)]
        return self.g(q)

    def jacobian(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        A = self.act(q)
        if self.regime == UNDERACTUATED:
            J = np.zeros((self.n, self.n))
            J[: self.m, :] = A.T
            if self.theta_u_jacobian is not None:
                J[self.m:, :] = np.asarray(self.theta_u_jacobian(q), dtype=float)
            else:
                for i, row in enumerate(self.unactuated_rows):
                    J[self.m + i, row] = 1.0
            return J
        if self.regime == OVERACTUATED:
            return A[:, list(self.columns)].T
        return A.T

    def inverse_transpose_jacobian(self, q) -> np.ndarray:
        J = self.jacobian(q)
        try:
            return np.linalg.solve(J.T, np.eye(self.n))
        except np.linalg.LinAlgError as exc:
            raise SingularConfigurationError(
                f"chart singular at q={np.asarray(q).tolist()}"
            ) from exc

    def theta_dot(self, q, qdot) -> np.ndarray:
        return self.jacobian(q) @ np.asarray(qdot, dtype=float)

    def inverse(self, theta, guess, tol: float = 1e-10, max_iter: int = 50):
        """Damped Newton solve of h(q) = theta, seeded at ``guess``.

        One full polishing step after the residual meets tol: quadratic
        convergence then leaves the configuration error near roundoff even
        when the Jacobian is poorly scaled.
        """
        theta = np.asarray(theta, dtype=float)
        q = np.asarray(guess, dtype=float).copy()
        r = theta - self.h(q)
        rnorm = np.linalg.norm(r)
        for _ in range(max_iter):
            if rnorm <= tol:
                q = q + np.linalg.solve(self.jacobian(q), r)
                return q
            try:
                step = np.linalg.solve(self.jacobian(q), r)
            except np.linalg.LinAlgError as exc:
                raise SingularConfigurationError(
                    "chart Jacobian singular during inversion"
                ) from exc
            alpha = 1.0
            while alpha > 1e-6:
                q_try = q + alpha * step
                r_try = theta - self.h(q_try)
                if np.linalg.norm(r_try) < rnorm:
                    q, r, rnorm = q_try, r_try, np.linalg.norm(r_try)
                    break
                alpha *= 0.5
            else:
                raise DivergedError("chart inversion stalled")
        if rnorm <= tol:
            return q
        raise DivergedError(
            f"chart inversion did not reach tol={tol:g} in {max_iter} iterations"
        )


def infer_regime(act: ActuationModel) -> str:
    if act.m == act.n:
        return FULLY_ACTUATED
    if act.m > act.n:
        return OVERACTUATED
    return UNDERACTUATED


def build_chart(
    act: ActuationModel,
    regime: Optional[str] = None,
    q0=None,
    rows: Optional[Sequence[int]] = None,
    columns: Optional[Sequence[int]] = None,
    theta_u: Optional[Callable] = None,
    theta_u_jacobian: Optional[Callable] = None,
    check: bool = True,
    check_box=None,
    check_samples: int = 128,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
) -> CoordinateChart:
    """Construct the decoupling chart for an integrable actuation model.

    Underactuated systems need a nonsingular m x m row block of A at q0;
    rows are picked greedily by smallest singular value unless given.
    Overactuated systems pick n independent columns the same way (or as
    given), producing one chart per admissible column choice.
    """
    if regime is None:
        regime = infer_regime(act)
    expected = infer_regime(act)
    if regime != expected:
        raise ValueError(f"regime {regime!r} inconsistent with (n={act.n}, m={act.m})")
    q0 = np.zeros(act.n) if q0 is None else np.asarray(q0, dtype=float)

    if check and act.closed_form_g is None:
        box = np.asarray(
            check_box if check_box is not None else [(x - 0.3, x + 0.3) for x in q0],
            dtype=float,
        )
        report = check_integrability(act, box, tol=tol, samples=check_samples, seed=seed)
        cols_to_check = (
            list(columns) if (regime == OVERACTUATED and columns is not None)
            else range(act.m)
        )
        if any(report.verdicts[i] != INTEGRABLE for i in cols_to_check):
            raise NotCollocatedError(report)

    g = act.closed_form_g or numeric_actuation_integral(act, q0)

    if regime == FULLY_ACTUATED:
        return CoordinateChart(
            regime=regime,
            act=act,
            actuated_rows=tuple(range(act.n)),
            g=g,
            base_point=q0,
        )

    if regime == OVERACTUATED:
        A0 = act(q0)
        if columns is None:
            if np.linalg.matrix_rank(A0) < act.n:
                raise SingularConfigurationError(
                    "actuation matrix is rank deficient at q0"
                )
            columns = select_rows_greedy(A0.T, act.n)
        columns = tuple(int(c) for c in columns)
        block = A0[:, list(columns)]
        if np.linalg.svd(block, compute_uv=False)[-1] < 1e-12:
            raise SingularConfigurationError(
                f"selected columns {columns} are singular at q0"
            )
        return CoordinateChart(
            regime=regime,
            act=act,
            actuated_rows=tuple(range(act.n)),
            columns=columns,
            g=g,
            base_point=q0,
        )

    # underactuated
    A0 = act(q0)
    if np.linalg.matrix_rank(A0) < act.m:
        raise SingularConfigurationError(
            "all m x m row blocks are singular at q0 (rank deficiency)"
        )
    if rows is None:
        rows = select_rows_greedy(A0, act.m)
    rows = tuple(int(r) for r in rows)
    block = A0[list(rows), :]
    if np.linalg.svd(block, compute_uv=False)[-1] < 1e-12:
        raise SingularConfigurationError(f"selected rows {rows} are singular at q0")
    unactuated = tuple(i for i in range(act.n) if i not in rows)
    return CoordinateChart(
        regime=regime,
        act=act,
        actuated_rows=rows,
        unactuated_rows=unactuated,
        g=g,
        theta_u_fn=theta_u,
        theta_u_jacobian=theta_u_jacobian,
        base_point=q0,
    )


def transform_force(chart: CoordinateChart, act: ActuationModel, q, u) -> np.ndarray:
    """Generalized force in chart coordinates: J_h^-T A(q) u.

    Equals [u; 0] for collocated fully/underactuated systems and
    [I  A_a^-1 A_o] u for overactuated ones.
    """
    q = np.asarray(q, dtype=float)
    u = np.asarray(u, dtype=float)
    J = chart.jacobian(q)
    rhs = act(q) @ u
    try:
        tau = np.linalg.solve(J.T, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularConfigurationError(
            f"chart singular at q={q.tolist()}"
        ) from exc
    tau += np.linalg.solve(J.T, rhs - J.T @ tau)
    return tau


def verify_power_invariance(
    chart: CoordinateChart, act: ActuationModel, q, qdot, u
) -> float:
    """|thetad^T tau_theta - qd^T A u|: power must not depend on coordinates."""
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    u = np.asarray(u, dtype=float)
    tau_theta = transform_force(chart, act, q, u)
    theta_dot = chart.theta_dot(q, qdot)
    return float(abs(theta_dot @ tau_theta - qdot @ (act(q) @ u)))
