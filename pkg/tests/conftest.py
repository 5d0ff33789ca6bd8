import numpy as np
import pytest

from stokesrbf.analysis import trig_stokes_problem
from stokesrbf.collocation import assemble, solve
from stokesrbf.geometry import make_level_pointset
from stokesrbf.stokes_kernel import StokesKernelConfig
from stokesrbf.wendland import wendland_c8


@pytest.fixture(scope="session")
def c8():
    return wendland_c8()


@pytest.fixture(scope="session")
def unit_config(c8):
    return StokesKernelConfig(c8, c8, nu=1.0, delta=1.0)


@pytest.fixture(scope="session")
def problem():
    return trig_stokes_problem()


@pytest.fixture(scope="session")
def level1_system(c8, problem):
    from stokesrbf.multiscale import MultiscaleConfig, scale_schedule

    delta = scale_schedule(MultiscaleConfig(n_levels=1))[0]
    pointset = make_level_pointset(1)
    kernel = StokesKernelConfig(c8, c8, nu=1.0, delta=delta)
    return assemble(pointset, kernel, problem.f, problem.g)


@pytest.fixture(scope="session")
def level1_solution(level1_system):
    return solve(level1_system)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260808)
