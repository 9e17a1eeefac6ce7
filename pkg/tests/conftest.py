import numpy as np
import pytest

from magic_codec import AcquisitionParams, acquire
from magic_codec.synth import synthetic_corpus

# small but complete package shared by the codec and cli tests
SMALL_PARAMS = AcquisitionParams(epochs=20)


@pytest.fixture(scope="session")
def small_kp():
    return acquire(synthetic_corpus(3, 128, 160, seed=0), SMALL_PARAMS)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
