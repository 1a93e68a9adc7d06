from __future__ import annotations

import os

import pytest
from hypothesis import HealthCheck, settings

from apmoments.acceptance import AcceptanceContext

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_ctx() -> AcceptanceContext:
    return AcceptanceContext()


@pytest.fixture(scope="session")
def delta_small(acceptance_ctx):
    """Normalized Delta coefficients to 4e5 (shared with the acceptance run)."""
    return acceptance_ctx.delta(400_000)


@pytest.fixture(scope="session")
def kernel12(acceptance_ctx):
    return acceptance_ctx.transform("integral", 12)


@pytest.fixture(scope="session")
def kernel4(acceptance_ctx):
    return acceptance_ctx.transform("half_integral", 4)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
