"""
Analysis
========

Error metrics and the experiments that confront particle output with the
exact oracles and the theoretical bounds.

Experiments:
- convergence_experiment: mean |mu^N_n(f) - oracle| against N, slope fit,
  rate-bound check
- uniform_in_time_experiment: the same error along n = 0..horizon at fixed N
- qsd_estimate: time-averaged empirical measure of one long trajectory
- naive_monte_carlo: independent particles, ratio estimator; fails once
  every particle is absorbed

Replicas run through utils.pool with streams from utils.seeding, and are
reduced in replica order, so results do not depend on the worker count.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from qsd_particle.absorbed_kernel import ABSORBED, MatrixKernel, SubstochasticMatrix
from qsd_particle.errors import UsageError
from qsd_particle.oracle import (
    as_distribution, conditional_distribution_exact, conditional_path,
    estimate_mixing_rate, survival_probability_exact,
)
from qsd_particle.particle_engine import (
    EmpiricalRecorder, ParticleEnsemble, empirical_distribution, run_trajectory,
    sample_initial_positions,
)
from qsd_particle.utils.pool import map_replicas
from qsd_particle.utils.seeding import (
    BOOTSTRAP_STREAMS, CONVERGENCE_STREAMS, UNIFORM_STREAMS, derive_rng_streams,
)

logger = logging.getLogger(__name__)

BOOTSTRAP_RESAMPLES = 200
DEFAULT_BURN_IN = 0.5
RATE_CONSTANT = 2.0 * (1.0 + math.sqrt(2.0))
# The uniform-in-time check compares the sup error with the error at this step
REFERENCE_STEP = 10


# ============================================================
# METRICS AND BOUNDS
# ============================================================

def tv_distance(p, q) -> float:
    """Total variation distance: half the L1 distance."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise UsageError(f"distributions differ in length: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())


def alpha_bound(gamma: float, lambda0: float) -> float:
    """Uniform-in-time exponent -gamma / (2 (lambda0 + gamma)), in (-1/2, 0)."""
    if not gamma > 0 or not lambda0 > 0:
        raise UsageError(f"gamma and lambda0 must be positive, got {gamma}, {lambda0}")
    return -gamma / (2.0 * (lambda0 + gamma))


def rate_bound(n_particles: int, survival: float) -> float:
    """2 (1 + sqrt 2) / (sqrt(N) P_mu0(n < tau)) for test functions bounded by 1."""
    if n_particles < 1 or not survival > 0:
        raise UsageError(f"need N >= 1 and positive survival, got {n_particles}, {survival}")
    return RATE_CONSTANT / (math.sqrt(n_particles) * survival)


def default_test_functions(size: int) -> np.ndarray:
    """Indicators of every state, then the constant 1; one function per row."""
    return np.vstack([np.eye(size), np.ones((1, size))])


def _as_test_functions(test_functions, size: int) -> np.ndarray:
    if test_functions is None:
        return default_test_functions(size)
    f = np.atleast_2d(np.asarray(test_functions, dtype=float))
    if f.shape[1] != size:
        raise UsageError(f"test functions must have {size} columns, got {f.shape[1]}")
    if np.abs(f).max() > 1.0:
        raise UsageError("test functions must be bounded by 1")
    return f


def ols_slope(xs, ys) -> float:
    """Least-squares slope of ys on xs."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2:
        return 0.0
    return float(np.polyfit(xs, ys, 1)[0])


def loglog_slope(ns, errors) -> float:
    """Slope of log(error) against log(N); nan if any error is 0."""
    errors = np.asarray(errors, dtype=float)
    if np.any(errors <= 0):
        return math.nan
    return ols_slope(np.log(ns), np.log(errors))


def bootstrap_slope_ci(xs, per_replica, slope_fn, rng, resamples: int = BOOTSTRAP_RESAMPLES) -> tuple:
    """
    95% percentile interval of a slope, resampling replicas.

    Args:
        xs: Abscissae shared by every replica
        per_replica: Array (replicas, len(xs)) of per-replica values
        slope_fn: f(xs, mean_values) -> slope
        rng: Generator for the resampling
        resamples: Bootstrap resample count
    """
    per_replica = np.asarray(per_replica, dtype=float)
    replicas = per_replica.shape[0]
    slopes = []
    for _ in range(resamples):
        idx = rng.integers(replicas, size=replicas)
        slope = slope_fn(xs, per_replica[idx].mean(axis=0))
        if math.isfinite(slope):
            slopes.append(slope)
    if not slopes:
        return (math.nan, math.nan)
    lo, hi = np.percentile(slopes, [2.5, 97.5])
    return (float(lo), float(hi))


# ============================================================
# REPLICAS
# ============================================================

@dataclass(frozen=True)
class FiniteReplicaTask:
    """Everything one finite-chain replica needs, picklable."""
    matrix: SubstochasticMatrix
    mu0: np.ndarray
    n_particles: int
    horizon: int
    seed: int
    stream: tuple
    replica: int
    record_path: bool = False


def run_finite_replica(task: FiniteReplicaTask) -> np.ndarray:
    """
    i.i.d.-mu0 initialization, then ``horizon`` particle steps.

    Returns the final empirical distribution, or every step's (rows
    0..horizon) when ``record_path`` is set.
    """
    rng = derive_rng_streams(task.seed, task.replica, *task.stream)
    kernel = MatrixKernel(task.matrix)
    binning = kernel.binning()
    init = sample_initial_positions(task.mu0, task.n_particles, rng)
    if not task.record_path:
        record = run_trajectory(kernel, init, task.horizon, rng)
        return empirical_distribution(record.ensemble, binning)

    recorder = EmpiricalRecorder(binning)
    start = empirical_distribution(ParticleEnsemble(init), binning)
    run_trajectory(kernel, init, task.horizon, rng, observers=[recorder])
    return np.vstack([start] + recorder.distributions)


def _abs_errors(estimates: np.ndarray, truth: np.ndarray, f: np.ndarray) -> np.ndarray:
    # mean over test functions of |mu(f) - truth(f)|, along the last axis
    return np.abs((estimates - truth) @ f.T).mean(axis=-1)


# ============================================================
# CONVERGENCE IN N
# ============================================================

@dataclass
class ErrorPoint:
    n_particles: int
    mean_abs_error: float
    std_error: float
    bound: float

    @property
    def exceeds_bound(self) -> bool:
        return self.mean_abs_error > self.bound


@dataclass
class ErrorCurve:
    """Mean absolute error against N with its log-log slope."""
    points: list
    fitted_slope: float
    slope_ci: tuple
    survival: float
    step: int
    per_replica: np.ndarray = field(default=None, repr=False)

    @property
    def bound_violations(self) -> list:
        return [p.n_particles for p in self.points if p.exceeds_bound]

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "survival": self.survival,
            "fitted_slope": self.fitted_slope,
            "slope_ci": list(self.slope_ci),
            "bound_violations": self.bound_violations,
            "points": [
                {"N": p.n_particles, "mean_abs_error": p.mean_abs_error,
                 "std_error": p.std_error, "bound": p.bound, "exceeds_bound": p.exceeds_bound}
                for p in self.points
            ],
        }


def convergence_experiment(matrix: SubstochasticMatrix, mu0, n: int, n_list, replicas: int,
                           test_functions=None, seed: int = 0, workers: int = 1) -> ErrorCurve:
    """
    Error of mu^N_n against the exact conditional law, for each N.

    Replica r at particle count N uses stream (seed, CONVERGENCE, N, r), so
    curves over different N are paired by replica.

    Args:
        matrix: Finite kernel (an oracle must exist)
        mu0: Initial law; particles start i.i.d. from it
        n: Step at which errors are measured
        n_list: Strictly increasing particle counts (each >= 2)
        replicas: Independent trajectories per N
        test_functions: Rows of f values with |f| <= 1; default indicators + 1
        seed: Master seed
        workers: Worker processes for the replicas
    """
    n_list = [int(v) for v in n_list]
    if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])) or n_list[0] < 2:
        raise UsageError(f"N list must be strictly increasing and start at >= 2, got {n_list}")
    if replicas < 1:
        raise UsageError(f"replicas must be positive, got {replicas}")
    mu0 = as_distribution(mu0, matrix.size)
    f = _as_test_functions(test_functions, matrix.size)

    truth = conditional_distribution_exact(matrix, mu0, n)
    survival = survival_probability_exact(matrix, mu0, n)

    tasks = [FiniteReplicaTask(matrix, mu0, size, n, seed, (CONVERGENCE_STREAMS, size), r)
             for size in n_list for r in range(replicas)]
    finals = np.array(map_replicas(run_finite_replica, tasks, workers))
    errors = _abs_errors(finals, truth, f).reshape(len(n_list), replicas).T

    points = []
    for k, size in enumerate(n_list):
        column = errors[:, k]
        std_error = float(column.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.0
        points.append(ErrorPoint(size, float(column.mean()), std_error, rate_bound(size, survival)))

    slope = loglog_slope(n_list, [p.mean_abs_error for p in points])
    ci = bootstrap_slope_ci(n_list, errors, loglog_slope,
                            derive_rng_streams(seed, 0, BOOTSTRAP_STREAMS, CONVERGENCE_STREAMS))
    curve = ErrorCurve(points, slope, ci, survival, n, errors)
    if curve.bound_violations:
        logger.warning("rate bound exceeded at N = %s", curve.bound_violations)
    logger.info("convergence slope %.4f (95%% CI %.4f..%.4f)", slope, ci[0], ci[1])
    return curve


# ============================================================
# UNIFORM IN TIME
# ============================================================

@dataclass
class UniformSweep:
    """Mean absolute error at every step 0..horizon for a fixed N."""
    errors: list
    std_errors: list
    sup_error: float
    drift_slope: float
    drift_ci: tuple
    mixing: object = None

    @property
    def horizon(self) -> int:
        return len(self.errors) - 1

    @property
    def drift_ci_contains_zero(self) -> bool:
        lo, hi = self.drift_ci
        return lo <= 0.0 <= hi

    @property
    def sup_within_twice_reference(self):
        """sup_error <= 2 e(REFERENCE_STEP); None when the horizon is shorter."""
        if self.horizon < REFERENCE_STEP:
            return None
        return self.sup_error <= 2.0 * self.errors[REFERENCE_STEP]

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "sup_error": self.sup_error,
            "drift_slope": self.drift_slope,
            "drift_ci": list(self.drift_ci),
            "drift_ci_contains_zero": self.drift_ci_contains_zero,
            "sup_within_twice_reference": self.sup_within_twice_reference,
            "reference_step": REFERENCE_STEP,
            "mixing": self.mixing.to_dict() if self.mixing is not None else None,
        }


def _tail_slope(ns, values) -> float:
    ns = np.asarray(ns)
    tail = ns >= ns[-1] // 2
    return ols_slope(ns[tail], np.asarray(values)[tail])


def uniform_in_time_experiment(matrix: SubstochasticMatrix, mu0, horizon: int, n_particles: int,
                               replicas: int, test_functions=None, seed: int = 0,
                               workers: int = 1) -> UniformSweep:
    """
    Error of mu^N_n against the exact conditional law for n = 0..horizon.

    The drift slope is the least-squares slope of the mean error on the
    tail half n >= horizon/2; its bootstrap interval containing 0 means the
    error does not grow with n.
    """
    if horizon < 0 or replicas < 1:
        raise UsageError("horizon must be nonnegative and replicas positive")
    mu0 = as_distribution(mu0, matrix.size)
    f = _as_test_functions(test_functions, matrix.size)

    mixing = None
    if matrix.size > 1:
        mixing = estimate_mixing_rate(matrix, max(horizon, 2))
        if not mixing.ok:
            logger.warning("conditional mixing check flagged %s; uniform-in-time bound may not apply",
                           mixing.flag)

    truth = conditional_path(matrix, mu0, horizon)
    tasks = [FiniteReplicaTask(matrix, mu0, n_particles, horizon, seed,
                               (UNIFORM_STREAMS, n_particles), r, record_path=True)
             for r in range(replicas)]
    paths = np.array(map_replicas(run_finite_replica, tasks, workers))
    per_replica = _abs_errors(paths, truth, f)

    errors = per_replica.mean(axis=0)
    std_errors = (per_replica.std(axis=0, ddof=1) / math.sqrt(replicas)
                  if replicas > 1 else np.zeros_like(errors))
    ns = np.arange(horizon + 1)
    slope = _tail_slope(ns, errors)
    if horizon >= 2:
        ci = bootstrap_slope_ci(ns, per_replica, _tail_slope,
                                derive_rng_streams(seed, 0, BOOTSTRAP_STREAMS, UNIFORM_STREAMS))
    else:
        ci = (slope, slope)

    sweep = UniformSweep([float(e) for e in errors], [float(s) for s in std_errors],
                         float(errors.max()), slope, ci, mixing)
    logger.info("uniform sweep sup error %.4g, drift slope %.3g", sweep.sup_error, slope)
    return sweep


# ============================================================
# QSD ESTIMATION
# ============================================================

def qsd_estimate(kernel, init_positions, horizon: int, rng, burn_in_fraction: float = DEFAULT_BURN_IN,
                 binning=None, observers=()) -> np.ndarray:
    """
    Time average of the empirical measure over the steps after burn-in.

    Averages mu^N_n for floor(horizon * burn_in_fraction) < n <= horizon of
    a single trajectory; the particle system is ergodic and its stationary
    empirical measure is close to the QSD.
    """
    if not 0 <= burn_in_fraction < 1:
        raise UsageError(f"burn_in_fraction must be in [0, 1), got {burn_in_fraction}")
    if horizon * (1.0 - burn_in_fraction) < 1:
        raise UsageError("horizon * (1 - burn_in_fraction) must be at least 1")
    binning = binning or kernel.binning()
    start = int(horizon * burn_in_fraction)

    total = np.zeros(binning.n_bins)

    def accumulate(ensemble, report):
        if report.step_index > start:
            total[:] += empirical_distribution(ensemble, binning)

    run_trajectory(kernel, init_positions, horizon, rng, observers=[accumulate, *observers])
    return total / (horizon - start)


# ============================================================
# NAIVE MONTE CARLO
# ============================================================

@dataclass
class NaiveRun:
    """
    Independent particles without rebirth.

    ``estimates[n]`` is the survivors' empirical measure at step n, None
    once nobody is left; ``extinction_step`` is the first such n.
    """
    alive_counts: list
    estimates: list
    extinction_step: int = None

    @property
    def size(self) -> int:
        return self.alive_counts[0]

    def survival_fraction(self, n: int) -> float:
        return self.alive_counts[n] / self.size

    def survival_std_error(self, n: int) -> float:
        p = self.survival_fraction(n)
        return math.sqrt(p * (1.0 - p) / self.size)


def naive_monte_carlo(kernel, init_positions, horizon: int, rng, binning=None) -> NaiveRun:
    """
    The ratio estimator sum delta_{X^i_n} 1{alive} / #alive.

    Particles are advanced in index order, one kernel call each per step.
    Stops drawing once every particle is absorbed.
    """
    binning = binning or kernel.binning()
    alive = list(init_positions)
    if not alive:
        raise UsageError("need at least one particle")

    def estimate(states):
        counts = np.zeros(binning.n_bins)
        for s in states:
            counts[binning.index(s)] += 1
        return counts / len(states)

    run = NaiveRun([len(alive)], [estimate(alive)])
    for n in range(1, horizon + 1):
        survivors = []
        for x in alive:
            outcome = kernel.sample_step(x, rng)
            if outcome is not ABSORBED:
                survivors.append(outcome.state)
        alive = survivors
        run.alive_counts.append(len(alive))
        if alive:
            run.estimates.append(estimate(alive))
        else:
            run.estimates.append(None)
            if run.extinction_step is None:
                run.extinction_step = n
                logger.info("naive Monte Carlo: all %d particles absorbed at step %d", run.size, n)
    return run
