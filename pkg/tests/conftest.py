import pytest

from eyewitness.bounds import calibration_set
from eyewitness.detectors import DetectorSpec

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def calib():
    return calibration_set(DetectorSpec(7))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
