import math

import numpy as np
import pytest

from qsd_particle.absorbed_kernel import SubstochasticMatrix
from qsd_particle.errors import ConvergenceError, UsageError
from qsd_particle.oracle import (
    as_distribution, conditional_distribution_exact, conditional_path, dirac,
    estimate_mixing_rate, qsd_exact, survival_probability_exact,
)


def _tv(p, q):
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def test_zero_steps_returns_initial_law(running_example):
    mu0 = [0.3, 0.7]
    assert list(conditional_distribution_exact(running_example, mu0, 0)) == mu0


def test_one_step_running_example(running_example):
    mu1 = conditional_distribution_exact(running_example, dirac(0, 2), 1)
    assert mu1 == pytest.approx([0.625, 0.375], abs=1e-15)


def test_long_horizon_reaches_qsd(running_example):
    mu = conditional_distribution_exact(running_example, dirac(0, 2), 200)
    assert mu == pytest.approx([4 / 7, 3 / 7], abs=1e-12)


def test_survival_running_example(running_example):
    assert survival_probability_exact(running_example, dirac(0, 2), 0) == 1.0
    assert survival_probability_exact(running_example, dirac(0, 2), 1) == pytest.approx(0.8)
    assert survival_probability_exact(running_example, dirac(1, 2), 2) == pytest.approx(0.64)


def test_survival_underflows_to_zero():
    m = SubstochasticMatrix([[1e-200]])
    assert survival_probability_exact(m, [1.0], 2) == 0.0
    assert list(conditional_distribution_exact(m, [1.0], 2)) == [1.0]


def test_negative_step_count(running_example):
    with pytest.raises(UsageError):
        conditional_distribution_exact(running_example, [1.0, 0.0], -1)


def test_bad_initial_law():
    with pytest.raises(UsageError):
        as_distribution([0.5, 0.4])
    with pytest.raises(UsageError):
        as_distribution([1.5, -0.5])
    with pytest.raises(UsageError):
        as_distribution([1.0], size=2)


def test_flow_property(make_matrix, rng):
    for _ in range(50):
        size = int(rng.integers(1, 7))
        m = SubstochasticMatrix(make_matrix(rng, size, max_absorption=0.8))
        mu0 = rng.dirichlet(np.ones(size))
        a, b = (int(k) for k in rng.integers(0, 21, size=2))
        direct = conditional_distribution_exact(m, mu0, a + b)
        staged = conditional_distribution_exact(m, conditional_distribution_exact(m, mu0, a), b)
        assert _tv(direct, staged) <= 1e-9


def test_conditional_path_matches_pointwise(running_example):
    path = conditional_path(running_example, [0.2, 0.8], 6)
    assert path.shape == (7, 2)
    for n in (0, 3, 6):
        assert path[n] == pytest.approx(conditional_distribution_exact(running_example, [0.2, 0.8], n))


def test_qsd_running_example(running_example):
    result = qsd_exact(running_example)
    assert result.qsd == pytest.approx([4 / 7, 3 / 7], abs=1e-10)
    assert result.eigenvalue == pytest.approx(0.8, abs=1e-12)
    assert result.lambda0 == pytest.approx(-math.log(0.8), abs=1e-9)
    assert result.to_dict()["iterations"] == result.iterations


def test_qsd_of_stochastic_matrix_is_stationary():
    result = qsd_exact(SubstochasticMatrix([[0.9, 0.1], [0.2, 0.8]]))
    assert result.qsd == pytest.approx([2 / 3, 1 / 3], abs=1e-10)
    assert result.lambda0 == pytest.approx(0.0, abs=1e-12)


def test_periodic_kernel_does_not_converge():
    with pytest.raises(ConvergenceError) as info:
        qsd_exact(SubstochasticMatrix([[0.0, 0.9], [0.5, 0.0]]), max_iter=1000)
    assert info.value.iterations == 1000
    assert info.value.residual > 0.1


def test_qsd_is_a_fixed_point(make_matrix, rng):
    for _ in range(20):
        size = int(rng.integers(2, 9))
        m = SubstochasticMatrix(make_matrix(rng, size, max_absorption=0.6, min_entry=0.05))
        nu = qsd_exact(m).qsd
        assert _tv(nu, conditional_distribution_exact(m, nu, 1)) <= 1e-11


def test_survival_from_qsd_decays_at_lambda0(make_matrix, rng):
    for _ in range(20):
        size = int(rng.integers(2, 9))
        m = SubstochasticMatrix(make_matrix(rng, size, max_absorption=0.6, min_entry=0.05))
        result = qsd_exact(m)
        for n in (1, 10, 50):
            expected = math.exp(-result.lambda0 * n)
            assert survival_probability_exact(m, result.qsd, n) == pytest.approx(expected, rel=1e-6)


def test_conditional_law_approaches_qsd(make_matrix, rng):
    for _ in range(20):
        size = int(rng.integers(2, 7))
        m = SubstochasticMatrix(make_matrix(rng, size, min_entry=0.05))
        nu = qsd_exact(m).qsd
        d = [_tv(conditional_distribution_exact(m, dirac(0, size), n), nu) for n in (10, 20, 40)]
        assert d[1] <= d[0] + 1e-12
        assert d[2] <= d[1] + 1e-12


# ============================================================
# MIXING RATE
# ============================================================

def test_mixing_single_state():
    report = estimate_mixing_rate(SubstochasticMatrix([[0.5]]), 10)
    assert math.isinf(report.gamma)
    assert report.flag == "single_state"


def test_mixing_running_example_clean_fit(running_example):
    # both rows lose 0.2, so d(n) = (1/8)^n exactly
    report = estimate_mixing_rate(running_example, 10)
    assert report.flag is None
    assert report.ok
    assert report.gamma == pytest.approx(math.log(8), abs=1e-4)
    assert len(report.distances) == 11
    assert report.distances[1] == pytest.approx(0.125)


def test_mixing_underflow_is_flagged(running_example):
    report = estimate_mixing_rate(running_example, 50)
    assert report.flag == "underflow"
    assert report.gamma == pytest.approx(math.log(8), abs=1e-2)


def test_mixing_reducible_kernel_does_not_decay():
    report = estimate_mixing_rate(SubstochasticMatrix([[0.5, 0.0], [0.0, 0.5]]), 20)
    assert report.flag == "no_decay"
    assert abs(report.gamma) < 1e-3


def test_mixing_needs_two_steps(running_example):
    with pytest.raises(UsageError):
        estimate_mixing_rate(running_example, 1)
