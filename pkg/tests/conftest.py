import math

import numpy as np
import pytest

from beacon_pursuit import ControlParams, WorldState

PI = math.pi


@pytest.fixture
def two_agent_params():
    return ControlParams.symmetric(0.5, 0.75, (5 * PI / 12, -PI / 12), PI / 3)


@pytest.fixture
def five_agent_params():
    return ControlParams.symmetric(0.5, 1.5, -PI / 4, -PI / 6, n=5)


def random_world(rng: np.random.Generator, n: int, box: float = 2.0, min_sep: float = 0.05) -> WorldState:
    """Random agents in a box around a random beacon, kept away from collisions."""
    while True:
        beacon = rng.uniform(-1, 1, 2)
        pos = beacon + rng.uniform(-box, box, (n, 2))
        d_next = np.linalg.norm(pos - np.roll(pos, -1, axis=0), axis=1)
        d_beacon = np.linalg.norm(pos - beacon, axis=1)
        if min(d_next.min(), d_beacon.min()) > min_sep:
            return WorldState(pos, rng.uniform(-PI, PI, n), beacon)


def random_params(rng: np.random.Generator, n: int, symmetric: bool = True) -> ControlParams:
    lam = rng.uniform(0.05, 0.95)
    if symmetric:
        return ControlParams.symmetric(lam, rng.uniform(0.2, 3.0), rng.uniform(-PI, PI, n), rng.uniform(-PI, PI))
    return ControlParams(lam, rng.uniform(0.2, 3.0, n), rng.uniform(0.2, 3.0, n), rng.uniform(-PI, PI, n),
                         rng.uniform(-PI, PI, n), rng.uniform(0.5, 2.0, n))


def shape_gap(a, b) -> float:
    """Max-norm distance between two ShapeStates, angles compared on the circle."""
    n = a.n
    d = a.to_vector() - b.to_vector()
    ang = np.r_[n:3 * n, 4 * n:5 * n]
    d[ang] = np.angle(np.exp(1j * d[ang]))
    return float(np.abs(d).max())
