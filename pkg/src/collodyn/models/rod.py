"""Discretized variable-strain rod driven by routed tendons.

The strain field xi(X, q) = Phi(X) q + xi_star is a linear combination of
an actuation-adapted block Sigma^-1 Phi_a(X, q_rest) (one column per
tendon) and a block of Legendre polynomials for the bending/torsion
deformations the tendons do not excite.  Strains are 6-vectors ordered
(angular, linear) with rest strain (0, 0, 0, 0, 0, 1): a straight rod
along its local z axis.

Tendon columns of the actuation matrix are

    A_i(q) = integral_0^Xend_i  Phi(X)^T [d_i x t_i; t_i] dX,

with t_i the unit tangent of the routed cable, evaluated by fixed
Gauss-Legendre quadrature; the cable length L_ci uses the same rule, so
dL_ci/dq = A_i holds exactly for the discretized model and the passive
output integrates to the tendon elongations.

Dynamics is a lumped-slice approximation: the rod is sampled on a uniform
grid, frames and geometric Jacobians are propagated with exact
interval exponentials (piecewise-constant strain at midpoints), and each
node carries the slice inertia of the local cross section.  Jacobian time
derivatives come from a complex step, so the Coriolis force is exact for
the discrete model and energy bookkeeping closes to machine precision.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial.legendre import leggauss

from ..core import ActuationModel, MechanicalModel
from ..se3 import (
    big_adjoint_inverse_batch,
    exp_se3_batch,
    tangent_operator_batch,
)

_CS_STEP = 1e-200
_TANGENT_EPS = 1e-9


@dataclass(frozen=True)
class TendonRouting:
    """Path of one tendon in the cross-section frame.

    kinds:
      - 'parallel': constant offset at a fixed azimuth,
      - 'oblique':  offset shrinking linearly to taper*offset at x_end,
      - 'helical':  constant offset wrapping at 1/pitch radians per meter.
    """

    kind: str
    azimuth: float
    offset: float
    x_end: float
    taper: float = 1.0
    pitch: float = 0.0

    def __post_init__(self):
        if self.kind not in ("parallel", "oblique", "helical"):
            raise ValueError(f"unknown routing kind {self.kind!r}")
        if self.offset <= 0.0:
            raise ValueError("degenerate routing: tendon offset must be positive")
        if self.x_end <= 0.0:
            raise ValueError("tendon termination must be positive")
        if self.kind == "helical" and self.pitch <= 0.0:
            raise ValueError("helical routing needs a positive pitch")

    def path(self, X):
        """d(X) and d'(X), vectorized over X (within [0, x_end])."""
        X = np.asarray(X, dtype=float)
        ca, sa = np.cos(self.azimuth), np.sin(self.azimuth)
        if self.kind == "parallel":
            d = self.offset * np.stack(
                [np.full_like(X, ca), np.full_like(X, sa), np.zeros_like(X)], axis=-1
            )
            return d, np.zeros_like(d)
        if self.kind == "oblique":
            r = self.offset * (1.0 + (self.taper - 1.0) * X / self.x_end)
            rp = self.offset * (self.taper - 1.0) / self.x_end
            d = np.stack([r * ca, r * sa, np.zeros_like(X)], axis=-1)
            dp = np.stack(
                [np.full_like(X, rp * ca), np.full_like(X, rp * sa), np.zeros_like(X)],
                axis=-1,
            )
            return d, dp
        chi = self.azimuth + X / self.pitch
        d = self.offset * np.stack([np.cos(chi), np.sin(chi), np.zeros_like(X)], axis=-1)
        dp = (self.offset / self.pitch) * np.stack(
            [-np.sin(chi), np.cos(chi), np.zeros_like(X)], axis=-1
        )
        return d, dp


def _composite_gauss(breakpoints, order):
    """Gauss-Legendre nodes/weights on each subinterval, concatenated."""
    nodes, weights = leggauss(order)
    xs, ws = [], []
    for a, b in zip(breakpoints[:-1], breakpoints[1:]):
        half = 0.5 * (b - a)
        xs.append(a + half * (nodes + 1.0))
        ws.append(half * weights)
    return np.concatenate(xs), np.concatenate(ws)


@dataclass(frozen=True)
class GvsRod(MechanicalModel):
    """Tapered visco-elastic rod with tendon actuation.

    Gravity points along +z by default and the rod extends along +z from
    a clamped base, i.e. it hangs.  ``legendre_counts`` gives the number
    of polynomial modes (starting from degree zero, up to three) on each
    angular strain axis.
    """

    length: float = 0.4
    base_radius: float = 0.02
    tip_radius: float = 0.008
    density: float = 680.0
    young_modulus: float = 8.88e5
    poisson: float = 0.5
    material_damping: float = 1e4
    tendons: tuple = ()
    legendre_counts: tuple = (2, 2, 1)
    grid_nodes: int = 21
    quad_order: int = 16
    gravity: tuple = (0.0, 0.0, 9.81)

    def __post_init__(self):
        if not self.tendons:
            raise ValueError("at least one tendon routing is required")
        for t in self.tendons:
            if t.x_end > self.length + 1e-12:
                raise ValueError("tendon terminates beyond the rod tip")
        if len(self.legendre_counts) != 3 or any(
            not (0 <= c <= 3) for c in self.legendre_counts
        ):
            raise ValueError("legendre_counts must be three values in 0..3")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def reduced(cls, **overrides) -> "GvsRod":
        """Desk-scale configuration: 4 tendons, 5 unactuated modes (n=9, m=4)."""
        L = overrides.pop("length", 0.4)
        tendons = tuple(
            TendonRouting("oblique", az, 0.006, L, taper=0.4)
            for az in np.deg2rad([0.0, 120.0, 240.0])
        ) + (TendonRouting("helical", 0.0, 0.006, L, pitch=L / (2.0 * np.pi)),)
        return cls(length=L, tendons=tendons, legendre_counts=(2, 2, 1), **overrides)

    @classmethod
    def paper_default(cls, **overrides) -> "GvsRod":
        """Eight-tendon routing: six oblique at 60 degree spacing (three of
        them terminating at midspan) plus two opposed helical tendons."""
        L = overrides.pop("length", 0.4)
        oblique = []
        for k, az in enumerate(np.deg2rad(np.arange(0.0, 360.0, 60.0))):
            if k % 2 == 0:
                oblique.append(TendonRouting("oblique", az, 0.0016, L, taper=0.4))
            else:
                oblique.append(
                    TendonRouting("oblique", az, 0.0016, L / 2.0, taper=0.7)
                )
        helical = [
            TendonRouting("helical", 0.0, 0.006, L, pitch=L / (2.0 * np.pi)),
            TendonRouting("helical", np.pi, 0.006, L, pitch=L / (2.0 * np.pi)),
        ]
        return cls(
            length=L,
            tendons=tuple(oblique + helical),
            legendre_counts=(3, 3, 1),
            **overrides,
        )

    # -- geometry and material ------------------------------------------------

    @property
    def m(self) -> int:
        return len(self.tendons)

    @property
    def dof(self) -> int:
        return self.m + int(sum(self.legendre_counts))

    def radius(self, X):
        return self.base_radius + (self.tip_radius - self.base_radius) * (
            np.asarray(X, dtype=float) / self.length
        )

    def _section(self, X):
        """Per-X cross-section constants (Ix, Iy, Jz, Area)."""
        r = self.radius(X)
        I = np.pi * r ** 4 / 4.0
        return I, I, 2.0 * I, np.pi * r ** 2

    def stiffness_diag(self, X):
        """Diagonal of Sigma(X): (E Ix, E Iy, G Jz, G A, G A, E A)."""
        Ix, Iy, Jz, A = self._section(X)
        E = self.young_modulus
        G = E / (2.0 * (1.0 + self.poisson))
        return np.stack(
            [E * Ix, E * Iy, G * Jz, G * A, G * A, E * A], axis=-1
        )

    @property
    def rest_strain(self) -> np.ndarray:
        return np.array([0.0, 0.0, 0.0, 0.0, 0.0, 1.0])

    # -- strain basis ----------------------------------------------------------

    def _rest_tangent_column(self, routing: TendonRouting, X):
        """Spatial actuation column (d x t; t) at the stress-free strain."""
        d, dp = routing.path(X)
        v = dp + np.array([0.0, 0.0, 1.0])  # hat(xi*) d + d' at k*=0, p*=e_z
        norm = np.linalg.norm(v, axis=-1, keepdims=True)
        t = v / norm
        return np.concatenate([np.cross(d, t), t], axis=-1)

    def strain_basis(self, X) -> np.ndarray:
        """Phi(X) of shape (len(X), 6, n)."""
        X = np.atleast_1d(np.asarray(X, dtype=float))
        n = self.dof
        out = np.zeros((X.size, 6, n))
        for i, routing in enumerate(self.tendons):
            active = X <= routing.x_end + 1e-12
            if np.any(active):
                cols = self._rest_tangent_column(routing, X[active])
                out[active, :, i] = cols / self.stiffness_diag(X[active])
        s = X / self.length
        polys = [np.ones_like(s), 2.0 * s - 1.0, 6.0 * s ** 2 - 6.0 * s + 1.0]
        col = self.m
        for axis, count in enumerate(self.legendre_counts):
            for p in range(count):
                out[:, axis, col] = polys[p]
                col += 1
        return out

    # -- quadrature caches -----------------------------------------------------

    @cached_property
    def _breakpoints(self) -> np.ndarray:
        pts = {0.0, self.length}
        pts.update(t.x_end for t in self.tendons if t.x_end < self.length)
        return np.array(sorted(pts))

    @cached_property
    def _tendon_quadrature(self) -> tuple:
        """Per tendon: (weights, Phi at nodes, d, d_prime), same rule for
        the actuation column and the cable length."""
        cache = []
        for routing in self.tendons:
            inner = self._breakpoints[self._breakpoints < routing.x_end - 1e-12]
            bpts = np.concatenate([inner, [routing.x_end]])
            xs, ws = _composite_gauss(bpts, self.quad_order)
            d, dp = routing.path(xs)
            cache.append((xs, ws, self.strain_basis(xs), d, dp))
        return tuple(cache)

    @cached_property
    def _tendon_groups(self) -> tuple:
        """Tendons stacked by shared quadrature rule for batched evaluation."""
        groups: dict = {}
        for i, (xs, ws, phi, d, dp) in enumerate(self._tendon_quadrature):
            key = xs.tobytes()
            groups.setdefault(key, []).append((i, ws, phi, d, dp))
        out = []
        for members in groups.values():
            idx = [m[0] for m in members]
            ws = members[0][1]
            phi = np.stack([m[2] for m in members])
            d = np.stack([m[3] for m in members])
            dp = np.stack([m[4] for m in members])
            out.append((idx, ws, phi, d, dp))
        return tuple(out)

    @cached_property
    def _grid(self) -> dict:
        K = self.grid_nodes
        X = np.linspace(0.0, self.length, K)
        delta = X[1] - X[0]
        w = np.full(K, delta)
        w[0] = w[-1] = delta / 2.0
        mids = 0.5 * (X[:-1] + X[1:])
        Ix, Iy, Jz, A = self._section(X)
        slice_inertia = self.density * np.stack([Ix, Iy, Jz, A, A, A], axis=-1)
        return {
            "X": X,
            "w": w,
            "delta": delta,
            "phi_mid": self.strain_basis(mids),
            "slice_inertia": slice_inertia,
            "mass_density": self.density * A,
        }

    @cached_property
    def elastic_matrix(self) -> np.ndarray:
        xs, ws = _composite_gauss(self._breakpoints, self.quad_order)
        phi = self.strain_basis(xs)
        sig = self.stiffness_diag(xs)
        return np.einsum("kai,ka,kaj->ij", phi, ws[:, None] * sig, phi)

    @cached_property
    def damping_matrix(self) -> np.ndarray:
        return (self.material_damping / self.young_modulus) * self.elastic_matrix

    @cached_property
    def _rest_cable_lengths(self) -> np.ndarray:
        return self.cable_lengths(np.zeros(self.dof))

    # -- tendon kinetics ---------------------------------------------------------

    def _tendon_tangents(self, idx: int, q):
        xs, ws, phi, d, dp = self._tendon_quadrature[idx]
        xi = phi @ np.asarray(q, dtype=float) + self.rest_strain
        v = _cross_rows(xi[:, :3], d) + xi[:, 3:] + dp
        norms = np.sqrt(np.einsum("ki,ki->k", v, v))
        if np.any(norms < _TANGENT_EPS):
            raise ValueError(f"degenerate tangent at a node of tendon {idx}")
        return ws, phi, d, v, norms

    def cable_length(self, idx: int, q) -> float:
        """Length of tendon ``idx`` at configuration q (Gauss-Legendre)."""
        ws, _, _, _, norms = self._tendon_tangents(idx, q)
        return float(ws @ norms)

    def _group_tangents(self, group, q):
        idx, ws, phi, d, dp = group
        xi = phi @ q + self.rest_strain            # (T, nj, 6)
        v = _cross_rows(xi[..., :3], d) + xi[..., 3:] + dp
        norms = np.sqrt(np.einsum("tka,tka->tk", v, v))
        if np.any(norms < _TANGENT_EPS):
            raise ValueError("degenerate tangent at a quadrature node")
        return idx, ws, phi, d, v, norms

    def cable_lengths(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        out = np.empty(self.m)
        for group in self._tendon_groups:
            idx, ws, _, _, _, norms = self._group_tangents(group, q)
            out[idx] = norms @ ws
        return out

    def actuation_matrix(self, q) -> np.ndarray:
        """A(q): column i couples tension i into the strain coordinates."""
        q = np.asarray(q, dtype=float)
        key = q.tobytes()
        cache = self._actuation_cache
        if key in cache:
            return cache[key]
        A = np.empty((self.dof, self.m))
        for group in self._tendon_groups:
            idx, ws, phi, d, v, norms = self._group_tangents(group, q)
            t = v / norms[..., None]
            spatial = np.concatenate([_cross_rows(d, t), t], axis=-1)
            A[:, idx] = np.einsum("k,tkan,tka->nt", ws, phi, spatial)
        if len(cache) > 8:
            cache.clear()
        cache[key] = A
        return A

    @cached_property
    def _actuation_cache(self) -> dict:
        return {}

    @cached_property
    def actuation(self) -> ActuationModel:
        rest = self._rest_cable_lengths

        def g(q):
            return self.cable_lengths(q) - rest

        return ActuationModel(
            n=self.dof,
            m=self.m,
            matrix=self.actuation_matrix,
            closed_form_g=g,
            name="gvs",
            box=self.default_box(),
        )

    def default_box(self):
        # strain coordinates are stiffness-scaled; bending coordinates of
        # the actuation block reach O(10) for moderate tip deflection
        return [(-5.0, 5.0)] * self.m + [(-0.5, 0.5)] * (self.dof - self.m)

    # -- kinematics --------------------------------------------------------------

    def _assemble(self, q):
        """Frames and geometric Jacobians at the grid nodes.

        Complex q is supported; feeding q + 1j*h*qd yields the Jacobian
        time derivative in the imaginary part.  Per-interval exponentials
        and tangent operators are evaluated batched; only the short chain
        accumulation is sequential.
        """
        grid = self._grid
        phi_mid = grid["phi_mid"]
        delta = grid["delta"]
        K = self.grid_nodes
        n = self.dof
        dtype = np.result_type(q.dtype, float)

        x = delta * (phi_mid @ q + self.rest_strain)       # (K-1, 6)
        E_R, E_t = exp_se3_batch(x)
        adinv = big_adjoint_inverse_batch(E_R, E_t)
        step = delta * (tangent_operator_batch(x) @ phi_mid)

        R = np.empty((K, 3, 3), dtype=dtype)
        p = np.empty((K, 3), dtype=dtype)
        J = np.empty((K, 6, n), dtype=dtype)
        R[0] = np.eye(3)
        p[0] = 0.0
        J[0] = 0.0
        for k in range(K - 1):
            J[k + 1] = adinv[k] @ J[k] + step[k]
            p[k + 1] = p[k] + R[k] @ E_t[k]
            R[k + 1] = R[k] @ E_R[k]
        return R, p, J

    def _assembly_cached(self, q):
        q = np.asarray(q, dtype=float)
        key = q.tobytes()
        cache = self._assembly_cache
        if key not in cache:
            if len(cache) > 8:
                cache.clear()
            cache[key] = self._assemble(q)
        return cache[key]

    @cached_property
    def _assembly_cache(self) -> dict:
        return {}

    def backbone(self, q, samples_per_segment: int = 0) -> np.ndarray:
        """World positions of the grid nodes, base to tip."""
        _, p, _ = self._assembly_cached(q)
        return p.copy()

    # -- mechanics -----------------------------------------------------------------

    def inertia(self, q):
        _, _, J = self._assembly_cached(q)
        grid = self._grid
        wM = grid["w"][:, None] * grid["slice_inertia"]
        return np.einsum("kai,ka,kaj->ij", J, wM, J)

    def velocity_forces(self, q, qdot):
        q = np.asarray(q, dtype=float)
        qdot = np.asarray(qdot, dtype=float)
        if not np.any(qdot):
            return np.zeros(self.dof)
        qc = q.astype(complex) + 1j * _CS_STEP * qdot
        Rc, pc, Jc = self._assemble(qc)
        J = Jc.real
        Jdot = Jc.imag / _CS_STEP
        # the real parts are exactly the real assembly; share them
        cache = self._assembly_cache
        if len(cache) > 8:
            cache.clear()
        cache[q.tobytes()] = (Rc.real, pc.real, J)
        grid = self._grid
        w = grid["w"]
        Mdiag = grid["slice_inertia"]
        eta = J @ qdot          # (K, 6) body twists
        acc = Jdot @ qdot       # (K, 6)
        mom = Mdiag * eta       # (K, 6) slice momenta
        wrench = Mdiag * acc - _coadjoint_apply(eta, mom)
        return np.einsum("k,kai,ka->i", w, J, wrench)

    def potential(self, q):
        q = np.asarray(q, dtype=float)
        _, p, _ = self._assembly_cached(q)
        grid = self._grid
        grav = -np.sum(grid["w"] * grid["mass_density"] * (p @ np.asarray(self.gravity)))
        return 0.5 * q @ (self.elastic_matrix @ q) + grav

    def potential_gradient(self, q):
        q = np.asarray(q, dtype=float)
        R, _, J = self._assembly_cached(q)
        grid = self._grid
        gvec = np.asarray(self.gravity)
        scale = grid["w"] * grid["mass_density"]
        # dp_k/dq = R_k J_k[linear rows]
        gdir = np.einsum("a,kab->kb", gvec, R)
        grav = -np.einsum("k,kb,kbi->i", scale, gdir, J[:, 3:, :])
        return self.elastic_matrix @ q + grav

    def damping(self, q, qdot):
        return self.damping_matrix @ np.asarray(qdot)

    @property
    def strictly_damped(self) -> bool:
        return bool(np.linalg.eigvalsh(self.damping_matrix)[0] > 0.0)


def _cross_rows(a, b):
    """Rowwise cross product without np.cross's axis bookkeeping."""
    out = np.empty(np.broadcast(a, b).shape, dtype=np.result_type(a, b))
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


def _coadjoint_apply(eta, mom):
    """Rowwise ad_eta^T applied to momenta: (mk x w + mv x v; mv x w)
    for eta = (w, v), mom = (mk, mv).

    The Euler-Lagrange expansion of T = 0.5 eta^T Mbar eta with
    eta = J(q) qd gives the inertial force M qdd + J^T (Mbar Jdot qd
    - ad_eta^T Mbar eta); the gyroscopic term enters with a minus sign.
    """
    w, v = eta[:, :3], eta[:, 3:]
    mk, mv = mom[:, :3], mom[:, 3:]
    top = _cross_rows(mk, w) + _cross_rows(mv, v)
    bottom = _cross_rows(mv, w)
    return np.concatenate([top, bottom], axis=-1)
