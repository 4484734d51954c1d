# pytest config file
import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ratelesscast", deadline=None, max_examples=200)
settings.load_profile("ratelesscast")


# adds commandline option --seed
def pytest_addoption(parser):
    parser.addoption("--seed", action="store", type=int, default=20240611, help="seed of the Monte-Carlo tests")


# injects param seed in every test function that asks for it
def pytest_generate_tests(metafunc):
    seed = metafunc.config.option.seed
    for marker in metafunc.definition.iter_markers("parametrize"):
        argnames = marker.args[0]
        if isinstance(argnames, str):
            argnames = [a.strip() for a in argnames.split(",")]
        if "seed" in argnames:
            return
    if "seed" in metafunc.fixturenames and seed is not None:
        metafunc.parametrize("seed", [seed])


@pytest.fixture
def rng(seed):
    return np.random.default_rng(seed)
