"""Shared fixtures: expensive objects are built once per session."""

import numpy as np
import pytest

from solgeo import flow, isochron, spheres, symflow


@pytest.fixture(scope="session")
def level16():
    return flow.level_from_period(16.0)


@pytest.fixture(scope="session")
def level20():
    return flow.level_from_period(20.0)


@pytest.fixture(scope="session")
def sym16(level16):
    return symflow.solve_symmetric(level16, 32.0)


@pytest.fixture(scope="session")
def var16(level16):
    return isochron.solve_variational(level16, 16.0)


@pytest.fixture(scope="session")
def var20(level20):
    return isochron.solve_variational(level20, 20.0)


@pytest.fixture(scope="session")
def mesh_r6():
    """Production-resolution mesh of the radius-6 sphere."""
    return spheres.mesh_sphere(6.0, 512)


@pytest.fixture(scope="session")
def mesh_r8():
    """Production-resolution mesh of the radius-8 sphere."""
    return spheres.mesh_sphere(8.0, 512)


@pytest.fixture(scope="session")
def mesh_r10():
    """Production-resolution mesh of the radius-10 sphere."""
    return spheres.mesh_sphere(10.0, 512)


@pytest.fixture(scope="session")
def mesh_r6_small():
    """Coarse mesh for cheap structural checks."""
    return spheres.mesh_sphere(6.0, 128)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260826)
