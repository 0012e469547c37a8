import pytest

from quadnet.frame import normalize_mother

_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def mother1():
    return normalize_mother(4.0, 1)


@pytest.fixture(scope="session")
def mother2():
    return normalize_mother(4.0, 2)


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion outcome for the end-of-run summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(number: int, passed: bool, detail: str) -> bool:
        lines[number] = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
