import math

import numpy as np
import pytest

from qsd_particle.absorbed_kernel import MatrixKernel, SubstochasticMatrix
from qsd_particle.analysis import (
    ErrorPoint, FiniteReplicaTask, UniformSweep, alpha_bound, bootstrap_slope_ci,
    convergence_experiment, default_test_functions, loglog_slope, naive_monte_carlo, qsd_estimate,
    rate_bound, run_finite_replica, tv_distance, uniform_in_time_experiment,
)
from qsd_particle.errors import UsageError
from qsd_particle.model_zoo import Disk, NeutronKernel, NeutronState
from qsd_particle.oracle import qsd_exact, survival_probability_exact
from qsd_particle.utils.seeding import CONVERGENCE_STREAMS


def test_tv_distance():
    assert tv_distance([1.0, 0.0], [0.0, 1.0]) == 1.0
    assert tv_distance([0.625, 0.375], [0.5, 0.5]) == pytest.approx(0.125)
    with pytest.raises(UsageError):
        tv_distance([1.0], [0.5, 0.5])


def test_tv_distance_is_a_metric(rng):
    for _ in range(200):
        p, q, r = rng.dirichlet(np.ones(5), size=3)
        assert tv_distance(p, p) == 0.0
        assert tv_distance(p, q) == tv_distance(q, p)
        assert tv_distance(p, r) <= tv_distance(p, q) + tv_distance(q, r) + 1e-12
        assert 0.0 <= tv_distance(p, q) <= 1.0


def test_alpha_bound_values():
    assert alpha_bound(1.0, 1.0) == -0.25
    assert alpha_bound(0.1, 0.3) == pytest.approx(-0.125)
    assert alpha_bound(1e6, 1.0) == pytest.approx(-0.5, abs=1e-6)


def test_alpha_bound_monotonicity(rng):
    for _ in range(200):
        g1, g2 = sorted(rng.uniform(0.01, 10.0, 2))
        lam1, lam2 = sorted(rng.uniform(0.01, 10.0, 2))
        assert alpha_bound(g1, lam1) > alpha_bound(g2, lam1)
        assert alpha_bound(g1, lam1) < alpha_bound(g1, lam2)


def test_alpha_bound_range():
    assert alpha_bound(math.log(8), -math.log(0.8)) == pytest.approx(
        -math.log(8) / (2 * (math.log(8) - math.log(0.8))))
    for gamma, lam in ((1e-6, 10.0), (10.0, 1e-6), (1.0, 1.0)):
        assert -0.5 < alpha_bound(gamma, lam) < 0
    with pytest.raises(UsageError):
        alpha_bound(0.0, 1.0)


def test_rate_bound():
    assert rate_bound(100, 1.0) == pytest.approx(2 * (1 + math.sqrt(2)) / 10)
    assert rate_bound(400, 0.5) == rate_bound(100, 1.0)
    with pytest.raises(UsageError):
        rate_bound(100, 0.0)


def test_error_point_flags_bound():
    assert ErrorPoint(100, 0.3, 0.01, 0.2).exceeds_bound
    assert not ErrorPoint(100, 0.1, 0.01, 0.2).exceeds_bound


def test_loglog_slope_of_a_power_law():
    ns = [100, 400, 1600]
    assert loglog_slope(ns, [1 / math.sqrt(n) for n in ns]) == pytest.approx(-0.5)
    assert math.isnan(loglog_slope(ns, [0.1, 0.0, 0.01]))


def test_bootstrap_interval_brackets_the_slope(rng):
    xs = np.arange(10)
    per_replica = 2.0 * xs + rng.normal(0.0, 0.5, size=(30, 10))
    fit = lambda x, y: float(np.polyfit(x, y, 1)[0])
    lo, hi = bootstrap_slope_ci(xs, per_replica, fit, rng)
    assert lo <= fit(xs, per_replica.mean(axis=0)) <= hi
    assert 1.9 < lo < hi < 2.1


def test_default_test_functions():
    f = default_test_functions(2)
    assert f.tolist() == [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]


def test_replica_is_reproducible(running_example):
    task = FiniteReplicaTask(running_example, np.array([1.0, 0.0]), 50, 5, 9, (CONVERGENCE_STREAMS, 50), 3)
    assert list(run_finite_replica(task)) == list(run_finite_replica(task))
    path = run_finite_replica(FiniteReplicaTask(running_example, np.array([1.0, 0.0]), 50, 5, 9,
                                                (CONVERGENCE_STREAMS, 50), 3, record_path=True))
    assert path.shape == (6, 2)
    assert list(path[0]) == [1.0, 0.0]


def test_convergence_experiment_small(running_example):
    curve = convergence_experiment(running_example, [1.0, 0.0], 5, [50, 200], 10, seed=3)
    assert [p.n_particles for p in curve.points] == [50, 200]
    assert curve.survival == pytest.approx(survival_probability_exact(running_example, [1.0, 0.0], 5))
    assert curve.per_replica.shape == (10, 2)
    assert not curve.bound_violations
    assert curve.to_dict()["points"][0]["N"] == 50


def test_single_state_chain_has_zero_error():
    curve = convergence_experiment(SubstochasticMatrix([[0.9]]), [1.0], 10, [10, 100], 5, seed=8)
    assert [p.mean_abs_error for p in curve.points] == [0.0, 0.0]
    assert not curve.bound_violations
    assert math.isnan(curve.fitted_slope)


def test_convergence_experiment_rejects_bad_counts(running_example):
    with pytest.raises(UsageError):
        convergence_experiment(running_example, [1.0, 0.0], 5, [200, 100], 5)
    with pytest.raises(UsageError):
        convergence_experiment(running_example, [1.0, 0.0], 5, [1, 100], 5)


def test_convergence_experiment_is_seeded(running_example):
    a = convergence_experiment(running_example, [1.0, 0.0], 3, [20, 40], 4, seed=11)
    b = convergence_experiment(running_example, [1.0, 0.0], 3, [20, 40], 4, seed=11)
    assert a.to_dict() == b.to_dict()


def test_test_functions_must_be_bounded(running_example):
    with pytest.raises(UsageError):
        convergence_experiment(running_example, [1.0, 0.0], 3, [20], 2, test_functions=[[2.0, 0.0]])


def test_uniform_sweep_small(running_example):
    sweep = uniform_in_time_experiment(running_example, [1.0, 0.0], 20, 100, 8, seed=4)
    assert sweep.horizon == 20
    assert len(sweep.std_errors) == 21
    assert sweep.errors[0] == 0.0
    assert sweep.sup_error == max(sweep.errors)
    assert sweep.mixing.flag is None
    assert sweep.to_dict()["mixing"]["gamma"] == pytest.approx(math.log(8), abs=1e-3)


def test_sup_error_shrinks_with_more_particles(running_example):
    small = uniform_in_time_experiment(running_example, [1.0, 0.0], 30, 100, 10, seed=6)
    large = uniform_in_time_experiment(running_example, [1.0, 0.0], 30, 1000, 10, seed=6)
    assert large.sup_error < small.sup_error


def test_uniform_sweep_reference_flag(running_example):
    short = uniform_in_time_experiment(running_example, [1.0, 0.0], 5, 50, 4, seed=4)
    assert short.sup_within_twice_reference is None
    sweep = UniformSweep([0.0] * 11 + [0.3], [0.0] * 12, 0.3, 0.0, (0.0, 0.0))
    assert sweep.sup_within_twice_reference is False
    sweep.errors[10] = 0.2
    assert sweep.sup_within_twice_reference is True
    assert sweep.to_dict()["sup_within_twice_reference"] is True


def test_qsd_estimate_running_example(running_kernel, rng):
    estimate = qsd_estimate(running_kernel, [0] * 500, 200, rng)
    assert estimate.sum() == pytest.approx(1.0)
    assert tv_distance(estimate, [4 / 7, 3 / 7]) <= 0.05


def test_qsd_estimate_of_a_stochastic_chain(rng):
    # nothing is ever absorbed, so the QSD is the stationary law (5/6, 1/6)
    matrix = SubstochasticMatrix([[0.9, 0.1], [0.5, 0.5]])
    exact = qsd_exact(matrix)
    assert exact.lambda0 == pytest.approx(0.0, abs=1e-9)
    assert exact.qsd == pytest.approx([5 / 6, 1 / 6], abs=1e-8)
    estimate = qsd_estimate(MatrixKernel(matrix), [0] * 500, 400, rng)
    assert tv_distance(estimate, exact.qsd) <= 0.05


def test_qsd_estimate_argument_checks(running_kernel, rng):
    with pytest.raises(UsageError):
        qsd_estimate(running_kernel, [0, 0], 10, rng, burn_in_fraction=1.0)
    with pytest.raises(UsageError):
        qsd_estimate(running_kernel, [0, 0], 1, rng, burn_in_fraction=0.5)


def test_neutron_qsd_estimates_agree_across_seeds():
    kernel = NeutronKernel(Disk(1.0))
    binning = kernel.binning(grid=4)
    start = [NeutronState((0.0, 0.0), (1.0, 0.0))] * 200
    first = qsd_estimate(kernel, start, 60, np.random.default_rng(1), binning=binning)
    second = qsd_estimate(kernel, start, 60, np.random.default_rng(2), binning=binning)
    assert tv_distance(first, second) <= 0.1


def test_naive_monte_carlo_dies_out(rng):
    # half the mass is lost every step
    matrix = SubstochasticMatrix([[0.25, 0.25], [0.25, 0.25]])
    run = naive_monte_carlo(MatrixKernel(matrix), [0] * 20, 60, rng)
    assert run.extinction_step is not None
    assert run.alive_counts[-1] == 0
    assert run.estimates[run.extinction_step] is None
    assert run.survival_fraction(0) == 1.0


def test_naive_survival_matches_oracle(running_kernel, running_example, rng):
    run = naive_monte_carlo(running_kernel, [0] * 20000, 3, rng)
    expected = survival_probability_exact(running_example, [1.0, 0.0], 3)
    assert abs(run.survival_fraction(3) - expected) <= 4 * run.survival_std_error(3)
