"""Volumetric (chamber) actuation: A_i is the gradient of the chamber volume.

The work done by chamber pressure u_i is u_i * (V_i(q) - V_i*), so by
virtual work the actuation column is dV_i/dq and the actuation coordinate
is the volume variation dV_i = V_i(q) - V_i*.  Gradient fields are exact,
hence these systems always pass the integrability test.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from .. import numdiff
from ..core import ActuationModel


@dataclass(frozen=True)
class VolumetricActuation:
    """Chamber volume functions V_i(q) with reference volumes V_i*."""

    n: int
    volumes: tuple
    reference_volumes: tuple
    fd_step: float = 1e-6
    name: str = "volumetric"
    box: Optional[Sequence] = None

    def __post_init__(self):
        if len(self.volumes) != len(self.reference_volumes):
            raise ValueError("one reference volume per chamber is required")

    @property
    def m(self) -> int:
        return len(self.volumes)

    def volume(self, i: int, q) -> float:
        return float(self.volumes[i](np.asarray(q, dtype=float)))

    def matrix(self, q) -> np.ndarray:
        """A(q) with column i the central-difference gradient of V_i."""
        q = np.asarray(q, dtype=float)
        A = np.zeros((self.n, self.m))
        for i, V in enumerate(self.volumes):
            A[:, i] = numdiff.gradient(V, q, h=self.fd_step)
        return A

    @cached_property
    def actuation(self) -> ActuationModel:
        refs = np.asarray(self.reference_volumes, dtype=float)

        def g(q):
            return np.array([V(q) for V in self.volumes]) - refs

        return ActuationModel(
            n=self.n,
            m=self.m,
            matrix=self.matrix,
            closed_form_g=g,
            name=self.name,
            box=self.box,
        )


def bellows_pair() -> VolumetricActuation:
    """A smooth two-chamber fixture on a 3-dof configuration space."""

    def v1(q):
        return 1.0 + 0.5 * q[0] + 0.2 * q[0] * q[1] + 0.1 * np.sin(q[2])

    def v2(q):
        return 2.0 - 0.3 * q[1] + 0.15 * q[1] * q[2] + 0.05 * np.cos(q[0])

    return VolumetricActuation(
        n=3,
        volumes=(v1, v2),
        reference_volumes=(1.0, 2.0),
        box=[(-0.8, 0.8)] * 3,
    )
