import pytest

from cmos_snn.network import DEFAULT_PARAMS, Crossbar, train_all
from cmos_snn.patterns import DIGITS


@pytest.fixture(scope="session")
def trained():
    """Crossbar trained on the built-in digits with default parameters."""
    return train_all(Crossbar.fresh(DEFAULT_PARAMS), DIGITS.array()).set_mode("infer")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
