import numpy as np
import pytest

from collodyn.models import (
    GvsRod,
    Pcc2Model,
    Satellite,
    SpringMechanism2R,
    TendonFinger,
    bellows_pair,
)


@pytest.fixture(scope="session")
def satellite():
    return Satellite(mass=1.0)


@pytest.fixture(scope="session")
def spring2r():
    return SpringMechanism2R()


@pytest.fixture(scope="session")
def spring2r_grav():
    return SpringMechanism2R(gravity=2.0, viscous=0.15)


@pytest.fixture(scope="session")
def finger():
    return TendonFinger(viscous=1e-3)


@pytest.fixture(scope="session")
def pcc():
    return Pcc2Model()


@pytest.fixture(scope="session")
def rod():
    return GvsRod.reduced()


@pytest.fixture(scope="session")
def volumetric():
    return bellows_pair()


def sample_states(model_box, count, seed, vel_scale=1.0):
    """Deterministic (q, qd) samples inside a model's box."""
    box = np.asarray(model_box, dtype=float)
    rng = np.random.default_rng(seed)
    q = box[:, 0] + rng.random((count, box.shape[0])) * (box[:, 1] - box[:, 0])
    qd = vel_scale * rng.standard_normal((count, box.shape[0]))
    return q, qd
