import numpy as np
import pytest

from immocz import SystemParams, build_codebook_set
from immocz.golden import PARAMS, RECEIVED_ZEROS, received_signal


@pytest.fixture
def golden_set():
    return build_codebook_set(PARAMS)


@pytest.fixture
def golden_signal():
    return received_signal(RECEIVED_ZEROS)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_channel(rng, L):
    return (rng.standard_normal(L) + 1j * rng.standard_normal(L)) / np.sqrt(2 * L)


@pytest.fixture
def fig3_params():
    return SystemParams(10, 6, 3, 1.1974)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
