import os

import numpy as np
import pytest

from ftn_mccr import ensemble

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session", autouse=True)
def isolated_cache(tmp_path_factory):
    """Every test session gets its own sigma_p cache directory."""
    directory = tmp_path_factory.mktemp("sigma_p_cache")
    old = os.environ.get(ensemble.CACHE_ENV)
    os.environ[ensemble.CACHE_ENV] = str(directory)
    yield directory
    if old is None:
        os.environ.pop(ensemble.CACHE_ENV, None)
    else:
        os.environ[ensemble.CACHE_ENV] = old


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
