import numpy as np
import pytest

from hopfion import algebra as alg
from hopfion import fields as fl
from hopfion.gauge import smooth_algebra_field, smooth_scalar
from hopfion.lattice import Grid


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def smooth_cp1_map(grid, rng, amplitude=0.3):
    """Unit CP1 map built by conjugating the constant map with a smooth lift."""
    gen = fl.LiftField(grid, alg.su2_u1(),
                       alg.qexp(smooth_algebra_field(grid, rng, amplitude)))
    return fl.act(gen, fl.constant_map(grid))


def smooth_lift(grid, rng, amplitude=0.5):
    return fl.LiftField(grid, alg.su2_u1(),
                        alg.qexp(smooth_algebra_field(grid, rng, amplitude)))


def smooth_scalar_field(grid, rng, amplitude=0.5):
    return smooth_scalar(grid, rng, amplitude)


@pytest.fixture
def grid16():
    return Grid(16)


@pytest.fixture
def grid12():
    return Grid(12)
