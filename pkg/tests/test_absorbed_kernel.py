import math

import numpy as np
import pytest

from qsd_particle.absorbed_kernel import (
    ABSORBED, Absorbed, Alive, FiniteBinning, MatrixKernel, SubstochasticMatrix,
    sample_step_matrix, validate,
)
from qsd_particle.errors import KernelValidationError, UsageError


def _frequencies(matrix, state, draws, rng):
    counts = np.zeros(matrix.size + 1)
    for _ in range(draws):
        outcome = sample_step_matrix(matrix, state, rng)
        if outcome is ABSORBED:
            counts[-1] += 1
        else:
            counts[outcome.state] += 1
    return counts / draws


def test_running_example_is_valid(running_example):
    assert validate([[0.5, 0.3], [0.4, 0.4]]) == []
    assert running_example.absorption == pytest.approx([0.2, 0.2])


def test_identity_is_valid_without_absorption():
    m = SubstochasticMatrix(np.eye(2))
    assert validate(np.eye(2)) == []
    assert list(m.absorption) == [0.0, 0.0]
    assert m.is_stochastic()


def test_zero_survival_row_is_reported():
    violations = validate([[0.0, 0.0], [0.4, 0.4]])
    assert [(v.kind, v.row) for v in violations] == [("zero_survival", 0)]


def test_negative_entry_and_excess_row_sum_are_reported():
    kinds = {v.kind for v in validate([[-0.1, 0.5], [0.7, 0.6]])}
    assert kinds == {"negative", "row_sum"}


def test_non_square_matrix_is_reported():
    assert validate([[0.5, 0.2]])[0].kind == "shape"


def test_row_sum_within_tolerance_is_clamped():
    m = SubstochasticMatrix([[0.5, 0.5 + 5e-13], [0.2, 0.2]])
    assert m.p[0].sum() <= 1.0 + 1e-15
    assert m.absorption[0] == 0.0


def test_invalid_matrix_refuses_construction():
    with pytest.raises(KernelValidationError) as info:
        SubstochasticMatrix([[0.0, 0.0], [0.4, 0.4]])
    assert info.value.violations[0].kind == "zero_survival"


def test_deterministic_row_always_survives(rng):
    m = SubstochasticMatrix([[1.0, 0.0], [0.5, 0.5]])
    assert all(sample_step_matrix(m, 0, rng) == Alive(0) for _ in range(1000))


def test_state_out_of_range(running_example, rng):
    with pytest.raises(UsageError):
        sample_step_matrix(running_example, 2, rng)
    with pytest.raises(UsageError):
        sample_step_matrix(running_example, -1, rng)


def test_frequencies_match_row(running_example, rng):
    draws = 10 ** 6
    freq = _frequencies(running_example, 0, draws, rng)
    for observed, p in zip(freq, (0.5, 0.3, 0.2)):
        assert abs(observed - p) <= 4 * math.sqrt(p * (1 - p) / draws)


def test_frequencies_on_random_matrices(make_matrix, rng):
    draws = 10 ** 5
    for size in (1, 2, 3, 5):
        m = SubstochasticMatrix(make_matrix(rng, size, max_absorption=0.9))
        state = int(rng.integers(size))
        expected = list(m.p[state]) + [m.absorption[state]]
        freq = _frequencies(m, state, draws, rng)
        for observed, p in zip(freq, expected):
            assert abs(observed - p) <= 5 * math.sqrt(p * (1 - p) / draws) + 1e-12


def test_same_generator_state_same_outcomes(running_example):
    a = np.random.default_rng(7)
    b = np.random.default_rng(7)
    first = [sample_step_matrix(running_example, 1, a) for _ in range(200)]
    second = [sample_step_matrix(running_example, 1, b) for _ in range(200)]
    assert first == second


def test_absorbed_is_a_singleton():
    assert Absorbed() is ABSORBED
    assert repr(ABSORBED) == "ABSORBED"


def test_matrix_kernel_descriptor(running_example):
    kernel = MatrixKernel(running_example)
    assert kernel.is_finite
    assert kernel.binning().n_bins == 2
    assert kernel.is_live(1)
    assert not kernel.is_live(2)


def test_finite_binning_rejects_foreign_states():
    with pytest.raises(UsageError):
        FiniteBinning(2).index(3)
