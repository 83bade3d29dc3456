import numpy as np
import pytest

from qsd_particle.absorbed_kernel import MatrixKernel, SubstochasticMatrix

RUNNING_EXAMPLE = [[0.5, 0.3], [0.4, 0.4]]


class ScriptedRng:
    """Stand-in generator replaying fixed draws, for exact path tests."""

    def __init__(self, uniforms=(), exponentials=(), normals=()):
        self.uniforms = list(uniforms)
        self.exponentials = list(exponentials)
        self.normals = list(normals)

    def random(self):
        return self.uniforms.pop(0)

    def exponential(self, scale=1.0):
        return self.exponentials.pop(0) * scale

    def standard_normal(self, size):
        return np.array([self.normals.pop(0) for _ in range(size)])


def random_substochastic(rng, size, max_absorption=0.5, min_entry=0.0):
    """Random kernel; rows get absorption uniform in [0, max_absorption]."""
    p = rng.random((size, size)) + min_entry
    p /= p.sum(axis=1, keepdims=True)
    absorption = rng.uniform(0.0, max_absorption, size)
    return p * (1.0 - absorption)[:, None]


@pytest.fixture
def running_example():
    return SubstochasticMatrix(RUNNING_EXAMPLE)


@pytest.fixture
def running_kernel(running_example):
    return MatrixKernel(running_example)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def scripted_rng():
    return ScriptedRng


@pytest.fixture
def make_matrix():
    return random_substochastic
