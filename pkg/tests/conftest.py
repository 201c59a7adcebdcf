"""
Pytest configuration and fixtures
"""

import json
import os
import sys
from pathlib import Path

os.environ.setdefault("PINSTT_ENV", "testing")

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from state.scenario import Ball, Box, LossConfig, Obstacle, SinusoidalMotion, TrainConfig, TrasScenario  # noqa: E402
from tools.neural_tube import TubeNet, init_network  # noqa: E402
from utils.io import parse_scenario  # noqa: E402

SCENARIO_DIR = ROOT / "scenarios"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"


def constant_net(center, radius: float, t_c: float, hidden: int = 4) -> TubeNet:
    """Tube with zero weights: c(t) = center, r(t) = radius"""
    n = len(center)
    widths = (1, hidden, n + 1)
    return TubeNet(
        n=n,
        t_c=t_c,
        widths=widths,
        weights=(np.zeros((hidden, 1)), np.zeros((n + 1, hidden))),
        biases=(np.zeros(hidden), np.array([*center, radius], dtype=float)),
    )


def dip_net(base_radius: float, depth: float, t_mid: float, half_width: float, t_c: float,
            steepness: float = 200.0) -> TubeNet:
    """1D tube at c = 0 whose radius drops by 2 * depth around t_mid"""
    s_mid = 2.0 * t_mid / t_c - 1.0
    s_half = 2.0 * half_width / t_c
    return TubeNet(
        n=1,
        t_c=t_c,
        widths=(1, 2, 2),
        weights=(np.array([[steepness], [steepness]]), np.array([[0.0, 0.0], [-depth, depth]])),
        biases=(np.array([-steepness * (s_mid - s_half), -steepness * (s_mid + s_half)]),
                np.array([0.0, base_radius])),
    )


@pytest.fixture
def omnibot_bundle():
    """Bundled omnibot scenario"""
    return parse_scenario(SCENARIO_DIR / "omnibot.scn")


@pytest.fixture
def quadrotor_bundle():
    """Bundled quadrotor scenario"""
    return parse_scenario(SCENARIO_DIR / "quadrotor.scn")


@pytest.fixture
def omnibot_static_bundle():
    """Bundled omnibot scenario with static obstacles only"""
    return parse_scenario(SCENARIO_DIR / "omnibot_static.scn")


@pytest.fixture
def quadrotor_dynamic_bundle():
    """Bundled quadrotor scenario with moving obstacles"""
    return parse_scenario(SCENARIO_DIR / "quadrotor_dynamic.scn")


@pytest.fixture
def trivial_scenario():
    """S = T at the origin, generous space, no obstacles"""
    return TrasScenario(
        dimension=2,
        space=Ball(center=(0.0, 0.0), radius=3.0),
        start=Ball(center=(0.0, 0.0), radius=0.5),
        target=Ball(center=(0.0, 0.0), radius=0.5),
        t_c=1.0,
        r_d=0.1,
    )


@pytest.fixture
def trivial_config():
    """Resolved budgets small enough for a constant tube to certify"""
    return TrainConfig(seed=7, epsilon=0.01, lipschitz_center=1.0, lipschitz_radius=1.0, hidden=(8, 8))


@pytest.fixture
def line_scenario():
    """1D scenario used with hand-built tubes"""
    return TrasScenario(
        dimension=1,
        space=Ball(center=(0.0,), radius=5.0),
        start=Ball(center=(0.0,), radius=1.0),
        target=Ball(center=(0.0,), radius=1.0),
        t_c=1.0,
        r_d=0.5,
    )


@pytest.fixture
def crowded_scenario():
    """Small 2D scenario where every hinge term is active for a random network"""
    return TrasScenario(
        dimension=2,
        space=Ball(center=(0.0, 0.0), radius=1.0),
        start=Ball(center=(-0.5, 0.0), radius=0.3),
        target=Ball(center=(0.5, 0.0), radius=0.3),
        t_c=2.0,
        r_d=0.3,
        obstacles=(
            Obstacle(shape=Ball(center=(0.0, 0.5), radius=0.2),
                     motion=SinusoidalMotion(axis=0, amplitude=0.1, omega=2.0)),
            Obstacle(shape=Box(lo=(-0.2, -0.7), hi=(0.2, -0.4))),
        ),
    )


@pytest.fixture
def crowded_loss_config():
    """Tight budgets so the derivative hinges are active too"""
    return LossConfig(
        eta_hat=-0.05,
        r_d=0.3,
        lipschitz_center=0.5,
        lipschitz_radius=0.5,
        phys_weights=(1.0, 1.0, 1.0, 1.0, 1.0),
        boundary_weights=(10.0, 10.0, 10.0, 10.0),
    )


@pytest.fixture
def small_net():
    """Seeded 2D network with two hidden layers"""
    return init_network(2, 2.0, hidden=(16, 16), seed=3)


@pytest.fixture
def golden():
    """
    Compare named values against tests/golden/<name>.json within a tolerance.

    A missing file, or PINSTT_UPDATE_GOLDEN=1, records the current values and
    skips; from then on every run is checked against the frozen file.
    """

    def check(name: str, actual: dict, rtol: float = 1e-9, atol: float = 1e-12):
        path = GOLDEN_DIR / f"{name}.json"
        actual = {key: np.asarray(value, dtype=float).tolist() for key, value in actual.items()}
        if os.environ.get("PINSTT_UPDATE_GOLDEN") == "1" or not path.exists():
            path.write_text(json.dumps(actual, indent=2, sort_keys=True) + "\n")
            pytest.skip(f"recorded golden values in {path.name}")
        expected = json.loads(path.read_text())
        assert sorted(expected) == sorted(actual)
        for key, value in expected.items():
            np.testing.assert_allclose(actual[key], value, rtol=rtol, atol=atol, err_msg=f"{name}: {key}")

    return check
