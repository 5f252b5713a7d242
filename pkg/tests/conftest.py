import pytest

from goldmine.data import (make_galton_dataset, make_galton_reference_dataset,
                           make_lotka_dataset)
from goldmine.methods import TrainConfig
from goldmine.simulators import GaltonBoard

# filled by the acceptance tests; replayed after the run summary so the
# verdict lines stay visible without -s
ACCEPTANCE_VERDICTS = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def board():
    return GaltonBoard()


@pytest.fixture(scope="session")
def galton_ds():
    return make_galton_dataset(400, 11)


@pytest.fixture(scope="session")
def galton_ref_ds():
    return make_galton_reference_dataset(600, -0.7, 13)


@pytest.fixture(scope="session")
def lotka_ds():
    # also pays the numba compile cost once for the whole session
    return make_lotka_dataset(80, 5)


@pytest.fixture(scope="session")
def quick_cfg():
    return TrainConfig(epochs=3)
