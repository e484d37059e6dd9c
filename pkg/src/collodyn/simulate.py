"""Fixed-step closed-loop integration with trajectory recording.

Explicit RK4 on (q, qd); the controller is sampled once per macro step
(continuous-control idealization at small dt).  Every record carries the
actuation coordinates, the Hamiltonian, and the input/damping powers so
energy bookkeeping can be audited after the fact.
"""

import csv
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .charts import CoordinateChart, PathIntegrator, OVERACTUATED
from .core import ActuationModel, ConfigState, MechanicalModel, forward_dynamics, hamiltonian

CSV_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ReferenceSchedule:
    """Step references: value k applies for times[k] <= t < times[k+1]."""

    times: tuple
    values: tuple
    kind: str = "theta"  # interpreted by the controller ('theta' or 'q')

    def __post_init__(self):
        if len(self.times) != len(self.values) or len(self.times) == 0:
            raise ValueError("schedule needs one value per start time")
        t = np.asarray(self.times, dtype=float)
        if np.any(np.diff(t) <= 0):
            raise ValueError("schedule steps must be ordered and non-overlapping")
        object.__setattr__(self, "times", tuple(float(x) for x in t))
        object.__setattr__(
            self, "values", tuple(np.asarray(v, dtype=float) for v in self.values)
        )

    @property
    def t_end_required(self) -> float:
        return self.times[-1]

    def active(self, t: float) -> np.ndarray:
        idx = int(np.searchsorted(self.times, t + 1e-12) - 1)
        return self.values[max(idx, 0)]


@dataclass(frozen=True)
class ControlInputs:
    """Feedback quantities handed to a controller at one macro step."""

    t: float
    q: np.ndarray
    qdot: np.ndarray
    theta_a: np.ndarray
    thetadot_a: np.ndarray
    reference: Optional[np.ndarray]


@dataclass
class Trajectory:
    """Uniformly sampled closed-loop (or open-loop) run."""

    t: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    theta: np.ndarray
    thetadot: np.ndarray
    u: np.ndarray
    H: np.ndarray
    input_power: np.ndarray
    damping_power: np.ndarray
    metadata: dict = field(default_factory=dict)
    failed: bool = False
    failure_reason: str = ""

    def __post_init__(self):
        lengths = {
            len(self.t), len(self.q), len(self.qdot), len(self.theta),
            len(self.thetadot), len(self.u), len(self.H),
            len(self.input_power), len(self.damping_power),
        }
        if len(lengths) != 1:
            raise ValueError("trajectory record arrays must have equal length")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("trajectory timestamps must be strictly increasing")

    @property
    def n(self) -> int:
        return self.q.shape[1]

    @property
    def m(self) -> int:
        return self.u.shape[1]

    def sample_at(self, t: float) -> int:
        return int(np.argmin(np.abs(self.t - t)))

    def energy_residual(self) -> float:
        """|trapz(P_in - P_damp) - dH| normalized by the power throughput."""
        net = np.trapezoid(self.input_power - self.damping_power, self.t)
        dH = self.H[-1] - self.H[0]
        scale = 1.0 + abs(dH) + np.trapezoid(
            np.abs(self.input_power) + np.abs(self.damping_power), self.t
        )
        return float(abs(net - dH) / scale)


class _ThetaTracker:
    """Maps recorded states to (theta, thetadot) of length n.

    Uses the chart when given; otherwise the closed-form actuation
    coordinates; otherwise an online trapezoidal path integral.  The
    unactuated slots default to the untouched tail coordinates.
    """

    def __init__(self, act: ActuationModel, chart: Optional[CoordinateChart], q0):
        self.act = act
        self.chart = chart
        self.integrator = None
        if chart is None and act.closed_form_g is None:
            self.integrator = PathIntegrator(act, q0)
        self.r = act.n if act.m >= act.n else act.m

    def theta_full(self, q, qdot):
        n = self.act.n
        if self.chart is not None:
            return self.chart.h(q), self.chart.theta_dot(q, qdot)
        theta = np.zeros(n)
        thetadot = np.zeros(n)
        if self.integrator is not None:
            y = self.integrator.advance(q)
        else:
            y = self.act.closed_form_g(q)
        ydot = self.act(q).T @ qdot
        r = self.r
        theta[:r] = y[:r]
        thetadot[:r] = ydot[:r]
        theta[r:] = q[self.act.m:] if self.act.m < n else 0.0
        thetadot[r:] = qdot[self.act.m:] if self.act.m < n else 0.0
        return theta, thetadot

    def actuated(self, q, qdot, theta, thetadot):
        if self.chart is not None and self.chart.regime == OVERACTUATED:
            return theta, thetadot
        r = min(self.act.m, self.act.n)
        return theta[:r], thetadot[:r]


def integrate(
    model: MechanicalModel,
    act: ActuationModel,
    controller,
    schedule: Optional[ReferenceSchedule],
    t_final: float,
    dt: float,
    state0: ConfigState,
    chart: Optional[CoordinateChart] = None,
    divergence_bound: float = 1e6,
    metadata: Optional[dict] = None,
) -> Trajectory:
    """Explicit RK4 integration of the closed loop with per-step records.

    ``controller`` may be None (zero input) or expose
    ``step(ControlInputs, dt) -> u``; it is sampled once per macro step and
    held during the substeps.  A diverging state (norm beyond
    ``divergence_bound``) aborts the run with the failure flag set.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    steps = int(round(t_final / dt))
    if abs(steps * dt - t_final) > 1e-9 * max(1.0, t_final):
        raise ValueError("t_final must be an integer multiple of dt")
    if schedule is not None and schedule.t_end_required > t_final:
        raise ValueError("schedule extends beyond t_final")

    n, m = model.dof, act.m
    q = state0.q.copy()
    qd = state0.qdot.copy()
    tracker = _ThetaTracker(act, chart, q)

    rec = {
        "t": np.zeros(steps + 1),
        "q": np.zeros((steps + 1, n)),
        "qdot": np.zeros((steps + 1, n)),
        "theta": np.zeros((steps + 1, n)),
        "thetadot": np.zeros((steps + 1, n)),
        "u": np.zeros((steps + 1, m)),
        "H": np.zeros(steps + 1),
        "input_power": np.zeros(steps + 1),
        "damping_power": np.zeros(steps + 1),
    }
    failed = False
    reason = ""
    count = 0

    def accel(qk, qdk, u):
        return forward_dynamics(model, act, ConfigState(qk, qdk), u)

    for k in range(steps + 1):
        t = k * dt
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(qd))) or (
            np.linalg.norm(qd) > divergence_bound
            or np.linalg.norm(q) > divergence_bound
        ):
            failed = True
            reason = f"state diverged at t={t:.6g}"
            break

        theta, thetadot = tracker.theta_full(q, qd)
        if controller is None:
            u = np.zeros(m)
        else:
            ref = schedule.active(t) if schedule is not None else None
            theta_a, thetadot_a = tracker.actuated(q, qd, theta, thetadot)
            u = np.asarray(
                controller.step(
                    ControlInputs(t, q.copy(), qd.copy(), theta_a, thetadot_a, ref),
                    dt,
                ),
                dtype=float,
            )

        # stage 1 before the record: complex-step models cache their
        # kinematics at q, which the H record below then reuses
        k1v = accel(q, qd, u) if k < steps else None

        state = ConfigState(q, qd)
        rec["t"][count] = t
        rec["q"][count] = q
        rec["qdot"][count] = qd
        rec["theta"][count] = theta
        rec["thetadot"][count] = thetadot
        rec["u"][count] = u
        rec["H"][count] = hamiltonian(model, state)
        rec["input_power"][count] = qd @ (act(q) @ u)
        rec["damping_power"][count] = qd @ model.damping(q, qd)
        count += 1
        if k == steps:
            break

        # remaining RK4 stages with u held over the step
        k1q = qd
        k2q, k2v = qd + 0.5 * dt * k1v, accel(q + 0.5 * dt * k1q, qd + 0.5 * dt * k1v, u)
        k3q, k3v = qd + 0.5 * dt * k2v, accel(q + 0.5 * dt * k2q, qd + 0.5 * dt * k2v, u)
        k4q, k4v = qd + dt * k3v, accel(q + dt * k3q, qd + dt * k3v, u)
        q = q + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        qd = qd + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)

    meta = {
        "schema": CSV_SCHEMA_VERSION,
        "model": act.name,
        "controller": getattr(controller, "name", "none"),
        "dt": dt,
        "t_final": t_final,
        "seed": None,
        "n": n,
        "m": m,
    }
    if metadata:
        meta.update(metadata)
    traj = Trajectory(
        t=rec["t"][:count],
        q=rec["q"][:count],
        qdot=rec["qdot"][:count],
        theta=rec["theta"][:count],
        thetadot=rec["thetadot"][:count],
        u=rec["u"][:count],
        H=rec["H"][:count],
        input_power=rec["input_power"][:count],
        damping_power=rec["damping_power"][:count],
        metadata=meta,
        failed=failed,
        failure_reason=reason,
    )
    traj.metadata["energy_residual"] = traj.energy_residual() if count > 1 else 0.0
    traj.metadata["failed"] = failed
    return traj


def online_theta(act: ActuationModel, traj: Trajectory):
    """Recover theta_a(t), thetadot_a(t) from a recorded trajectory.

    thetadot is A(q)^T qd exactly; theta uses the closed form when the
    model has one and the online trapezoidal path integral otherwise
    (starting from zero at the first sample).
    """
    S = len(traj.t)
    theta = np.zeros((S, act.m))
    thetadot = np.zeros((S, act.m))
    integrator = None
    if act.closed_form_g is None:
        integrator = PathIntegrator(act, traj.q[0])
    for k in range(S):
        qk, qdk = traj.q[k], traj.qdot[k]
        thetadot[k] = act(qk).T @ qdk
        if integrator is None:
            theta[k] = act.closed_form_g(qk)
        else:
            theta[k] = integrator.advance(qk) if k else integrator.accumulated_y
    return theta, thetadot


def csv_columns(n: int, m: int) -> list:
    cols = ["t"]
    cols += [f"q{i+1}" for i in range(n)]
    cols += [f"qd{i+1}" for i in range(n)]
    cols += [f"theta{i+1}" for i in range(n)]
    cols += [f"u{i+1}" for i in range(m)]
    cols += ["H", "P_in", "P_damp"]
    return cols


def export_csv(traj: Trajectory, csv_path, meta_path=None) -> None:
    """Write the fixed-column CSV and its JSON metadata sidecar.

    Byte-stable: values are formatted with repr-faithful precision and no
    environment-dependent content enters the file.
    """
    n, m = traj.n, traj.m
    with open(csv_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(csv_columns(n, m))
        for k in range(len(traj.t)):
            row = (
                [traj.t[k]]
                + list(traj.q[k])
                + list(traj.qdot[k])
                + list(traj.theta[k])
                + list(traj.u[k])
                + [traj.H[k], traj.input_power[k], traj.damping_power[k]]
            )
            writer.writerow([f"{x:.17g}" for x in row])
    if meta_path is not None:
        with open(meta_path, "w") as handle:
            json.dump(traj.metadata, handle, indent=2, sort_keys=True, default=str)
            handle.write("\n")


def load_csv(csv_path):
    """Read a trajectory CSV back into (columns, data array)."""
    with open(csv_path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        data = np.array([[float(x) for x in row] for row in reader])
    return header, data
