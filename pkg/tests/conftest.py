from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("kit", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("kit")


@pytest.fixture(scope="session")
def pd():
    from blackwell_kit.game_core import load_bundled

    return load_bundled("prisoners_dilemma")


@pytest.fixture(scope="session")
def example1():
    from blackwell_kit.game_core import load_bundled

    return load_bundled("example1")[0]


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
