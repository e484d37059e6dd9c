"""Rigid-body example systems: satellite, spring mechanism, tendon finger.

The actuation matrices are the defining feature of these systems; the
inertial terms are standard point-mass dynamics supplied so the models can
be simulated and controlled.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..core import ActuationModel, MechanicalModel


@dataclass(frozen=True)
class Satellite(MechanicalModel):
    """Planar body in polar coordinates q = (radius, angle).

    Driven by a normal force u1 and a tangential force u2, so
    A(q) = [[1, 0], [0, q1]].  The tangential column is not integrable:
    dA12/dq2 = 0 while dA22/dq1 = 1, hence no collocated form exists.
    """

    mass: float = 1.0
    gravity_parameter: float = 0.0  # mu in U = -mu * mass / q1
    viscous: float = 0.0

    @property
    def dof(self) -> int:
        return 2

    def inertia(self, q):
        return np.diag([self.mass, self.mass * q[0] ** 2])

    def velocity_forces(self, q, qdot):
        m = self.mass
        return np.array(
            [-m * q[0] * qdot[1] ** 2, 2.0 * m * q[0] * qdot[0] * qdot[1]]
        )

    def potential(self, q):
        if self.gravity_parameter == 0.0:
            return 0.0
        return -self.gravity_parameter * self.mass / q[0]

    def potential_gradient(self, q):
        if self.gravity_parameter == 0.0:
            return np.zeros(2)
        return np.array([self.gravity_parameter * self.mass / q[0] ** 2, 0.0])

    def damping(self, q, qdot):
        return self.viscous * np.asarray(qdot)

    @property
    def strictly_damped(self) -> bool:
        return self.viscous > 0.0

    def default_box(self):
        return [(0.5, 2.0), (-np.pi, np.pi)]

    @cached_property
    def actuation(self) -> ActuationModel:
        def matrix(q):
            return np.array([[1.0, 0.0], [0.0, q[0]]])

        return ActuationModel(
            n=2,
            m=2,
            matrix=matrix,
            name="satellite",
            box=self.default_box(),
        )


@dataclass(frozen=True)
class SpringMechanism2R(MechanicalModel):
    """Two-revolute planar mechanism driven through linear springs on carts.

    Cart dynamics is negligible, so the forces act on the joints through

        A(q) = [[-l1 s1, l1 c1 + l2 c12], [0, l2 c12]],

    singular at q1 in {0, pi} and q1 + q2 in {+-pi/2}.  The actuation
    coordinates are the Cartesian spring-end positions
    y = (l1 c1, l1 s1 + l2 s12).

    Point masses at the link tips; optional vertical-plane gravity and
    viscous joint damping (both zero by default: horizontal plane).
    """

    l1: float = 0.5
    l2: float = 0.4
    m1: float = 1.0
    m2: float = 0.8
    gravity: float = 0.0
    viscous: float = 0.0
    singular_margin: float = 1e-3

    @property
    def dof(self) -> int:
        return 2

    def inertia(self, q):
        c2 = np.cos(q[1])
        l1, l2, m1, m2 = self.l1, self.l2, self.m1, self.m2
        m11 = (m1 + m2) * l1 ** 2 + m2 * l2 ** 2 + 2.0 * m2 * l1 * l2 * c2
        m12 = m2 * l2 ** 2 + m2 * l1 * l2 * c2
        return np.array([[m11, m12], [m12, m2 * l2 ** 2]])

    def velocity_forces(self, q, qdot):
        s2 = np.sin(q[1])
        h = self.m2 * self.l1 * self.l2 * s2
        return np.array(
            [-h * (2.0 * qdot[0] * qdot[1] + qdot[1] ** 2), h * qdot[0] ** 2]
        )

    def potential(self, q):
        if self.gravity == 0.0:
            return 0.0
        s1, s12 = np.sin(q[0]), np.sin(q[0] + q[1])
        return self.gravity * (
            (self.m1 + self.m2) * self.l1 * s1 + self.m2 * self.l2 * s12
        )

    def potential_gradient(self, q):
        if self.gravity == 0.0:
            return np.zeros(2)
        c1, c12 = np.cos(q[0]), np.cos(q[0] + q[1])
        g1 = (self.m1 + self.m2) * self.l1 * c1 + self.m2 * self.l2 * c12
        return self.gravity * np.array([g1, self.m2 * self.l2 * c12])

    def damping(self, q, qdot):
        return self.viscous * np.asarray(qdot)

    @property
    def strictly_damped(self) -> bool:
        return self.viscous > 0.0

    def default_box(self):
        return [(0.1, np.pi - 0.1), (0.1, np.pi - 0.1)]

    @cached_property
    def actuation(self) -> ActuationModel:
        l1, l2 = self.l1, self.l2
        margin = self.singular_margin

        def matrix(q):
            s1, c1 = np.sin(q[0]), np.cos(q[0])
            c12 = np.cos(q[0] + q[1])
            return np.array([[-l1 * s1, l1 * c1 + l2 * c12], [0.0, l2 * c12]])

        def g(q):
            return np.array(
                [l1 * np.cos(q[0]), l1 * np.sin(q[0]) + l2 * np.sin(q[0] + q[1])]
            )

        def singular(q):
            return bool(
                abs(np.sin(q[0])) < margin or abs(np.cos(q[0] + q[1])) < margin
            )

        return ActuationModel(
            n=2,
            m=2,
            matrix=matrix,
            closed_form_g=g,
            singularity_predicate=singular,
            name="spring2r",
            box=self.default_box(),
        )


@dataclass(frozen=True)
class TendonFinger(MechanicalModel):
    """Single revolute joint pulled by two tendons (overactuated, n=1, m=2).

    A(q) = [sqrt(a^2+b^2) sin(atan(a/b) + q/2), -R]; the first column
    vanishes at q = -2 atan(a/b).  The actuation coordinates are the tendon
    displacements g(q) = (-2 sqrt(a^2+b^2) cos(atan(a/b) + q/2), -R q).
    """

    a: float = 0.02
    b: float = 0.04
    radius: float = 0.015
    joint_inertia: float = 2e-4
    viscous: float = 0.0
    singular_margin: float = 1e-3

    @property
    def dof(self) -> int:
        return 1

    @property
    def hypot(self) -> float:
        return float(np.hypot(self.a, self.b))

    @property
    def beta(self) -> float:
        return float(np.arctan2(self.a, self.b))

    def inertia(self, q):
        return np.array([[self.joint_inertia]])

    def velocity_forces(self, q, qdot):
        return np.zeros(1)

    def potential(self, q):
        return 0.0

    def potential_gradient(self, q):
        return np.zeros(1)

    def damping(self, q, qdot):
        return self.viscous * np.asarray(qdot)

    @property
    def strictly_damped(self) -> bool:
        return self.viscous > 0.0

    def default_box(self):
        return [(0.05, 2.0)]

    @cached_property
    def actuation(self) -> ActuationModel:
        k, beta, R = self.hypot, self.beta, self.radius
        margin = self.singular_margin

        def matrix(q):
            return np.array([[k * np.sin(beta + q[0] / 2.0), -R]])

        def g(q):
            return np.array([-2.0 * k * np.cos(beta + q[0] / 2.0), -R * q[0]])

        def singular(q):
            return bool(abs(np.sin(beta + q[0] / 2.0)) < margin)

        return ActuationModel(
            n=1,
            m=2,
            matrix=matrix,
            closed_form_g=g,
            singularity_predicate=singular,
            name="finger",
            box=self.default_box(),
        )
