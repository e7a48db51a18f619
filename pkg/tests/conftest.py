import numpy as np
import pytest

from crosslab.surface import generate_surface, shipped_surface


@pytest.fixture(scope="session")
def genus2():
    return shipped_surface(2)


@pytest.fixture(scope="session")
def genus3():
    return shipped_surface(3)


@pytest.fixture(scope="session")
def genus5():
    return shipped_surface(5)


@pytest.fixture(scope="session")
def family():
    """Generated surfaces F = 16 .. 256, keyed by face count."""
    return {F: generate_surface(F, 0) for F in (16, 32, 64, 128, 256)}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_VERDICTS = pytest.StashKey[dict]()


@pytest.fixture
def verdict(request):
    """Record one acceptance line: ``verdict(number, passed, detail)``."""
    store = request.config.stash.setdefault(_VERDICTS, {})

    def record(number, passed, detail):
        store[number] = (bool(passed), detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(_VERDICTS, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        passed, detail = store[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
