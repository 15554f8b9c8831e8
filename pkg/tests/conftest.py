import numpy as np
import pytest

from prospect_arch import demand, market


@pytest.fixture(scope="session")
def equity_curve():
    return demand.equity_preset()


@pytest.fixture(scope="session")
def fx_curve():
    return demand.fx_preset()


@pytest.fixture(scope="session")
def equity_model(equity_curve):
    return market.derive_arch(equity_curve, market.EQUITY_PARAMS)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE = []


@pytest.fixture
def acceptance_report():
    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
