import pytest

from nopa.config import RunConfig
from nopa.material import default_modes, load_dispersion
from nopa.resonance import find_triple_resonances


@pytest.fixture(scope="session")
def model():
    return load_dispersion()


@pytest.fixture(scope="session")
def modes():
    return default_modes()


@pytest.fixture(scope="session")
def run_config():
    return RunConfig()


@pytest.fixture(scope="session")
def geom(run_config):
    return run_config.nopa_geometry()


@pytest.fixture(scope="session")
def triple_solutions(geom, model, modes):
    return find_triple_resonances(geom, model, modes=modes)
