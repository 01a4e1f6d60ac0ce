import pytest

from vortex_spectra.profiles import make_profile


@pytest.fixture(scope="session")
def uniform():
    return make_profile("uniform")


@pytest.fixture(scope="session")
def coriolis():
    return make_profile("coriolis_example")


ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line for an acceptance criterion."""
    def record(number, title, passed, detail=""):
        line = f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
        ACCEPTANCE.append((number, line))
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
