import pytest

from hecke_twists.eigenform import delta_coefficients, load_delta

# Largest table any test needs: the double sum at q = 1009 reaches nm ~ 1.9e7.
BIG_N = 20_000_000


@pytest.fixture(scope="session")
def delta_small():
    """tau and a(n) for n <= 3e5 built from scratch (no cache)."""
    return delta_coefficients(300_000, exact_limit=100_000)


@pytest.fixture(scope="session")
def delta_mid():
    return load_delta(3_000_000)


@pytest.fixture(scope="session")
def delta_big():
    """Float table to 2e7; built once (about 5 minutes on one core) and cached."""
    return load_delta(BIG_N)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
