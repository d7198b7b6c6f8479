from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mlnf_verify.dispersion import DispersionModel, Material
from mlnf_verify.green import SphereInVacuum
from mlnf_verify.numerics import CONSTANTS

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

RADIUS = 1.0
OMEGA = CONSTANTS.c / RADIUS  # k0 a = 1

EXTERIOR_PAIRS = (
    ((0.3, 2.6, 0.9), (-1.1, 0.4, 2.5)),
    ((2.8, 0.0, 0.5), (0.2, -2.7, -1.0)),
)
INTERIOR_POINTS = ((0.2, 0.1, -0.3), (-0.4, 0.3, 0.5))


def lossy_material(eps=2 + 1j, mu=1.0) -> Material:
    return Material(DispersionModel.matched(OMEGA, eps, mu))


@pytest.fixture(scope="session")
def omega() -> float:
    return OMEGA


@pytest.fixture(scope="session")
def dielectric_sphere() -> SphereInVacuum:
    return SphereInVacuum(RADIUS, lossy_material())


@pytest.fixture(scope="session")
def magnetic_sphere() -> SphereInVacuum:
    return SphereInVacuum(RADIUS, lossy_material(2 + 1j, 1.5 + 0.3j))


def random_rotation(seed: int) -> np.ndarray:
    from scipy.spatial.transform import Rotation

    return Rotation.random(random_state=seed).as_matrix()
