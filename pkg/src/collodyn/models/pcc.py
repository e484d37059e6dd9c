"""Two-body constant-curvature soft arm driven by three base-to-tip tendons.

Configuration q = (kappa1, phi1, dL1, kappa2, phi2, dL2): per body, the
total bend angle (rad), the bending-plane azimuth (rad), and the
elongation (m).  Tendons sit at distance d from the backbone, 120 degrees
apart, which gives the n=6, m=3 actuation matrix

    A[0, i] = -d cos(q2 - psi_i)        A[3, i] = -d cos(q5 - psi_i)
    A[1, i] = d q1 sin(q2 - psi_i)      A[4, i] = d q4 sin(q5 - psi_i)
    A[2, i] = 1                         A[5, i] = 1

with psi = (0, 120, 240) degrees.  A loses rank exactly at the straight
configurations q1 = q4 = 0 with q2 = q5 + k pi.  The passive output
integrates in closed form to the tendon length changes

    g_i(q) = q3 + q6 - d [q1 cos(q2 - psi_i) + q4 cos(q5 - psi_i)].

Inertia comes from a 3-point lumped-mass approximation per body; the
Coriolis force is assembled from exact (complex-step) point Jacobians, so
the model conserves energy to integrator accuracy.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..core import ActuationModel, MechanicalModel

_PSI = np.array([0.0, 2.0 * np.pi / 3.0, 4.0 * np.pi / 3.0])
_SIGMAS = np.array([1.0 / 6.0, 0.5, 5.0 / 6.0])
_CS_STEP = 1e-200


def _sinc_sq(x):
    """sin(sqrt(x))/sqrt(x) elementwise, analytic in x (complex-safe)."""
    x = np.asarray(x)
    out = np.empty(x.shape, dtype=x.dtype)
    small = np.abs(x) < 1e-6
    xs = x[small]
    out[small] = 1.0 - xs / 6.0 + xs * xs / 120.0 - xs ** 3 / 5040.0
    s = np.sqrt(x[~small])
    out[~small] = np.sin(s) / s
    return out


def _cosc_sq(x):
    """(1 - cos(sqrt(x)))/x elementwise, analytic in x (complex-safe)."""
    x = np.asarray(x)
    out = np.empty(x.shape, dtype=x.dtype)
    small = np.abs(x) < 1e-6
    xs = x[small]
    out[small] = 0.5 - xs / 24.0 + xs * xs / 720.0 - xs ** 3 / 40320.0
    out[~small] = (1.0 - np.cos(np.sqrt(x[~small]))) / x[~small]
    return out


def _arc_points(theta, phi, s, sigmas):
    """Points along a constant-curvature arc, in the segment base frame.

    sigmas are arclength fractions; the arc has bend angle theta toward
    azimuth phi and current length s.  Complex-safe; theta/phi/s may
    carry a leading batch axis, giving output (..., len(sigmas), 3).
    """
    theta, phi, s = np.asarray(theta), np.asarray(phi), np.asarray(s)
    alpha = theta[..., None] * np.asarray(sigmas)
    a2 = alpha * alpha
    radial = s[..., None] * sigmas * alpha * _cosc_sq(a2)
    z = s[..., None] * sigmas * _sinc_sq(a2)
    cp, sp = np.cos(phi)[..., None], np.sin(phi)[..., None]
    return np.stack([cp * radial, sp * radial, z], axis=-1)


def _arc_tip_rotation(theta, phi):
    """Tip rotation Rz(phi) Ry(theta) Rz(-phi); batched, complex-safe."""
    theta, phi = np.asarray(theta), np.asarray(phi)
    dtype = np.result_type(theta, phi, float)
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    R = np.empty(theta.shape + (3, 3), dtype=dtype)
    R[..., 0, 0] = cp * cp * ct + sp * sp
    R[..., 0, 1] = cp * sp * ct - cp * sp
    R[..., 0, 2] = cp * st
    R[..., 1, 0] = cp * sp * ct - cp * sp
    R[..., 1, 1] = sp * sp * ct + cp * cp
    R[..., 1, 2] = sp * st
    R[..., 2, 0] = -cp * st
    R[..., 2, 1] = -sp * st
    R[..., 2, 2] = ct
    return R


@dataclass(frozen=True)
class Pcc2Model(MechanicalModel):
    """Two constant-curvature bodies with three lumped masses each.

    Gravity points along +z by default, i.e. the arm hangs from its base
    in its rest direction.  Diagonal elasticity acts on the bend angles
    and elongations; diagonal viscous damping acts on all coordinates.
    """

    tendon_offset: float = 0.02
    seg_length: float = 0.2
    seg_mass: float = 0.2
    bend_stiffness: float = 0.55
    axial_stiffness: float = 1100.0
    azimuth_stiffness: float = 0.005
    azimuth_inertia: float = 2e-4
    damping_bend: float = 0.02
    damping_azimuth: float = 0.01
    damping_axial: float = 2.0
    gravity: tuple = (0.0, 0.0, 9.81)
    singular_margin: float = 1e-3

    @property
    def dof(self) -> int:
        return 6

    def _points_batch(self, qs):
        """Lumped-mass positions for a batch of configurations (B, 6) -> (B, 6, 3)."""
        s1 = self.seg_length + qs[:, 2]
        s2 = self.seg_length + qs[:, 5]
        pts1 = _arc_points(qs[:, 0], qs[:, 1], s1, _SIGMAS)
        tip1 = _arc_points(qs[:, 0], qs[:, 1], s1, np.array([1.0]))
        R1 = _arc_tip_rotation(qs[:, 0], qs[:, 1])
        local2 = _arc_points(qs[:, 3], qs[:, 4], s2, _SIGMAS)
        pts2 = tip1 + np.einsum("bij,bpj->bpi", R1, local2)
        return np.concatenate([pts1, pts2], axis=1)

    def lumped_points(self, q):
        """The six lumped-mass positions for configuration q (complex-safe)."""
        return self._points_batch(np.asarray(q)[None, :])[0]

    def backbone(self, q, samples_per_segment: int = 20) -> np.ndarray:
        """Sampled 3D centerline, base to tip, for snapshot rendering."""
        q = np.asarray(q, dtype=float)
        fr = np.linspace(0.0, 1.0, samples_per_segment)
        s1 = self.seg_length + q[2]
        s2 = self.seg_length + q[5]
        pts1 = _arc_points(q[0], q[1], s1, fr)
        tip1 = pts1[-1]
        R1 = _arc_tip_rotation(q[0], q[1])
        pts2 = tip1 + (_arc_points(q[3], q[4], s2, fr) @ R1.T)
        return np.concatenate([pts1, pts2[1:]], axis=0)

    def _jacobian_batch(self, qs) -> np.ndarray:
        """Exact (B, 6 points, 3, 6) position Jacobians via complex-step."""
        B = qs.shape[0]
        qc = np.repeat(qs.astype(complex), 6, axis=0)
        qc[np.arange(6 * B), np.tile(np.arange(6), B)] += 1j * _CS_STEP
        pts = self._points_batch(qc).imag / _CS_STEP   # (6B, 6, 3)
        return pts.reshape(B, 6, 6, 3).transpose(0, 2, 3, 1)

    def point_jacobian(self, q) -> np.ndarray:
        """Exact (6 points, 3, 6) position Jacobian via complex-step."""
        q = np.asarray(q, dtype=float)
        key = q.tobytes()
        cache = self._jac_cache
        if key not in cache:
            if len(cache) > 8:
                cache.clear()
            cache[key] = self._jacobian_batch(q[None, :])[0]
        return cache[key]

    @cached_property
    def _jac_cache(self) -> dict:
        return {}

    @property
    def point_mass(self) -> float:
        return self.seg_mass / 3.0

    def inertia(self, q):
        J = self.point_jacobian(q)
        M = self.point_mass * np.einsum("pai,paj->ij", J, J)
        # constant rotor-like inertia on the bending azimuths regularizes
        # the straight configuration (the point-mass inertia vanishes in
        # phi as kappa -> 0); being constant it leaves the Coriolis
        # forces untouched
        M[1, 1] += self.azimuth_inertia
        M[4, 4] += self.azimuth_inertia
        return M

    def velocity_forces(self, q, qdot):
        q = np.asarray(q, dtype=float)
        qdot = np.asarray(qdot, dtype=float)
        speed = np.linalg.norm(qdot)
        if speed == 0.0:
            return np.zeros(6)
        eps = 1e-6 / max(1.0, speed)
        J2 = self._jacobian_batch(np.stack([q + eps * qdot, q - eps * qdot]))
        Jdot = (J2[0] - J2[1]) / (2.0 * eps)
        Jmid = 0.5 * (J2[0] + J2[1])
        vel = Jdot @ qdot                       # (6 points, 3)
        c = np.einsum("pak,pa->k", Jmid, vel)
        return self.point_mass * c

    def _elastic_diag(self) -> np.ndarray:
        # the small azimuth spring anchors the bending-plane angle, which
        # is a gauge direction at zero curvature; without it the potential
        # is not convex in the unactuated coordinates of a hanging arm
        kb, kp, ka = self.bend_stiffness, self.azimuth_stiffness, self.axial_stiffness
        return np.array([kb, kp, ka, kb, kp, ka])

    def potential(self, q):
        q = np.asarray(q, dtype=float)
        elastic = 0.5 * self._elastic_diag() @ (q * q)
        gvec = np.asarray(self.gravity)
        grav = -self.point_mass * float(np.sum(self.lumped_points(q) @ gvec))
        return elastic + grav

    def potential_gradient(self, q):
        q = np.asarray(q, dtype=float)
        J = self.point_jacobian(q)
        gvec = np.asarray(self.gravity)
        return self._elastic_diag() * q - self.point_mass * np.einsum(
            "a,pak->k", gvec, J
        )

    def damping(self, q, qdot):
        return self._damping_diag * np.asarray(qdot)

    @cached_property
    def _damping_diag(self) -> np.ndarray:
        db, dp, da = self.damping_bend, self.damping_azimuth, self.damping_axial
        return np.array([db, dp, da, db, dp, da])

    @property
    def strictly_damped(self) -> bool:
        return bool(np.all(self._damping_diag > 0.0))

    def default_box(self):
        return [
            (-1.5, 1.5), (-np.pi, np.pi), (-0.05, 0.05),
            (-1.5, 1.5), (-np.pi, np.pi), (-0.05, 0.05),
        ]

    def bend_guess(self, u) -> np.ndarray:
        """Initial configuration guess for the statics under tensions u.

        Balances the elastic bending torque against the tension moment per
        segment, giving a seed on the physically bent branch (the statics
        in these polar-like bending coordinates has spurious near-straight
        solutions that plain Newton otherwise falls into).
        """
        u = np.asarray(u, dtype=float)
        mx = -self.tendon_offset * float(u @ np.cos(_PSI))
        my = -self.tendon_offset * float(u @ np.sin(_PSI))
        kappa = np.hypot(mx, my) / self.bend_stiffness
        phi = np.arctan2(my, mx)
        dl = float(np.sum(u)) / self.axial_stiffness
        return np.array([kappa, phi, dl, kappa, phi, dl])

    def example_theta_u(self, q) -> np.ndarray:
        """Tendon length changes inside the first body only.

        A valid alternative unactuated complement: any choice keeping the
        chart Jacobian nonsingular leaves the decoupled force unchanged.
        """
        q = np.asarray(q, dtype=float)
        d = self.tendon_offset
        return q[2] - d * q[0] * np.cos(q[1] - _PSI)

    def example_theta_u_jacobian(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        d = self.tendon_offset
        J = np.zeros((3, 6))
        J[:, 0] = -d * np.cos(q[1] - _PSI)
        J[:, 1] = d * q[0] * np.sin(q[1] - _PSI)
        J[:, 2] = 1.0
        return J

    @cached_property
    def actuation(self) -> ActuationModel:
        d = self.tendon_offset
        margin = self.singular_margin

        def matrix(q):
            A = np.empty((6, 3))
            A[0] = -d * np.cos(q[1] - _PSI)
            A[1] = d * q[0] * np.sin(q[1] - _PSI)
            A[2] = 1.0
            A[3] = -d * np.cos(q[4] - _PSI)
            A[4] = d * q[3] * np.sin(q[4] - _PSI)
            A[5] = 1.0
            return A

        def g(q):
            bend = q[0] * np.cos(q[1] - _PSI) + q[3] * np.cos(q[4] - _PSI)
            return q[2] + q[5] - d * bend

        def singular(q):
            return bool(
                abs(q[0]) < margin
                and abs(q[3]) < margin
                and abs(np.sin(q[1] - q[4])) < margin
            )

        return ActuationModel(
            n=6,
            m=3,
            matrix=matrix,
            closed_form_g=g,
            singularity_predicate=singular,
            name="pcc2",
            box=self.default_box(),
        )
