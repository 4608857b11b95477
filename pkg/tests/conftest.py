import numpy as np
import pytest

from densq import WeightedPointMeasure


def brute_ball_atoms(measure, center, r):
    """Reference membership: squared-distance closed-ball scan."""
    center = np.asarray(center, dtype=float)
    d2 = ((measure.points - center) ** 2).sum(axis=1)
    return np.flatnonzero(d2 <= r * r)


def brute_mass(measure, center, r):
    return float(measure.weights[brute_ball_atoms(measure, center, r)].sum())


def random_measure(rng, n=50, dim=2, box=1.0):
    pts = rng.uniform(-box, box, size=(n, dim))
    w = rng.uniform(0.5, 1.5, size=n) / n
    return WeightedPointMeasure(pts, w)


@pytest.fixture
def rng():
    return np.random.default_rng(20240707)
