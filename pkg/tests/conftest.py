import numpy as np
import pytest

from uavwpt import Scenario

# Channel defaults used throughout: -30 dB reference gain, 40 dBm transmit
# power, 5 m altitude (all in linear units here).
BETA0 = 1e-3
POWER_W = 10.0
ALT = 5.0


def make_scenario(ers, *, altitude=ALT, tx_power=POWER_W, ref_gain=BETA0,
                  max_speed=5.0, horizon=10.0) -> Scenario:
    return Scenario(
        ers=np.asarray(ers, dtype=float),
        altitude=altitude,
        tx_power=tx_power,
        ref_gain=ref_gain,
        max_speed=max_speed,
        horizon=horizon,
    )


def two_er_scenario(separation, **kwargs) -> Scenario:
    half = separation / 2.0
    return make_scenario([[-half, 0.0], [half, 0.0]], **kwargs)


def random_scenario(rng, num_ers, *, box=20.0, **kwargs) -> Scenario:
    ers = rng.uniform(0.0, box, size=(num_ers, 2))
    return make_scenario(ers, **kwargs)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
