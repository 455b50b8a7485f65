"""Shared fixtures for the crpower test suite.

Usage:
    uv run pytest tests/              # Fast suite, reduced simulation sweeps
    uv run pytest tests/ --slow       # Full multi-seed sweeps (several minutes)

Fixtures:
    deployment  - Reference scene: 100 kW base station, TV receiver at (50 km, 0 deg).
    ctx         - CTx at (50 km, 60 deg).
    scenario    - Base ScenarioConfig with the CRx starting on top of the CTx.
"""

from __future__ import annotations

import pytest

from crpower.channel import ChannelParams
from crpower.geometry import PolarPoint
from crpower.mobility import MobilityParams
from crpower.models import Deployment, ScenarioConfig


# ---------------------------------------------------------------------------
# CLI option and marker registration
# ---------------------------------------------------------------------------


def pytest_addoption(parser):
    """Register --slow CLI flag for the full simulation sweeps."""
    parser.addoption(
        "--slow",
        action="store_true",
        default=False,
        help="Run the full multi-seed simulation sweeps.",
    )


def pytest_configure(config):
    """Register the slow marker."""
    config.addinivalue_line("markers", "slow: full simulation sweep (needs --slow)")


def pytest_collection_modifyitems(config, items):
    """Skip slow tests unless --slow was given."""
    if config.getoption("--slow"):
        return
    skip = pytest.mark.skip(reason="needs --slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


# ---------------------------------------------------------------------------
# Reference scene
# ---------------------------------------------------------------------------


def make_deployment(alpha_p: float = 3.0, alpha_c: float = 3.0, sigma_db: float = 0.0) -> Deployment:
    """Reference deployment, optionally with other exponents or shadowing."""
    return Deployment(
        p_bs=100e3,
        pr_rx=PolarPoint.from_degrees(50e3, 0.0),
        tau_p_db=30.0,
        tau_c_db=3.0,
        p_min=1.0,
        p_max=100.0,
        channel=ChannelParams(alpha_p=alpha_p, alpha_c=alpha_c, sigma_db=sigma_db),
    )


CTX = PolarPoint.from_degrees(50e3, 60.0)


@pytest.fixture()
def deployment() -> Deployment:
    return make_deployment()


@pytest.fixture()
def ctx() -> PolarPoint:
    return CTX


@pytest.fixture()
def scenario(deployment) -> ScenarioConfig:
    """Optimal control at 30 m/s over 1000 s, no shadowing."""
    return ScenarioConfig(
        deployment=deployment,
        ctx_pos=CTX,
        mobility=MobilityParams(mean_speed=30.0, start=PolarPoint.from_degrees(50e3, 60.0)),
    )
