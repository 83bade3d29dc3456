"""
Experiment Runner
=================

Turns an ExperimentConfig into artifacts on disk.

Kinds:
- simulate:    trajectory of the particle system, per-step empirical measures
- oracle:      exact conditional law, survival, QSD and mixing report (finite)
- qsd:         time-averaged QSD estimate (any model)
- convergence: error against N at a fixed step (finite)
- uniform:     error along time at a fixed N (finite)

Every run writes ``<output>.csv`` and ``<output>.json`` (oracle: JSON
only). Identical configs give byte-identical files; the worker count never
changes results.
"""

import logging
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from qsd_particle.analysis import (
    DEFAULT_BURN_IN, convergence_experiment, qsd_estimate, tv_distance,
    uniform_in_time_experiment,
)
from qsd_particle.errors import ConfigError, ConvergenceError
from qsd_particle.model_zoo import Model, build_model
from qsd_particle.oracle import (
    DEFAULT_MAX_ITER, DEFAULT_TOL, conditional_distribution_exact, estimate_mixing_rate,
    qsd_exact, survival_probability_exact,
)
from qsd_particle.particle_engine import (
    EmpiricalRecorder, ParticleEnsemble, RebirthCounter, empirical_distribution, run_trajectory,
    sample_initial_positions,
)
from qsd_particle.utils.artifacts import (
    binned_trajectory_table, distribution_table, error_curve_table, finite_trajectory_table,
    json_ready, summary_path, uniform_sweep_table, write_artifacts, write_csv,
)
from qsd_particle.utils.json_store import (
    EXPERIMENT_KINDS, load_model_document, save_json, validate_model_document,
)
from qsd_particle.utils.pool import map_replicas
from qsd_particle.utils.seeding import (
    QSD_STREAMS, SIMULATE_STREAMS, config_signature, derive_rng_streams,
)

logger = logging.getLogger(__name__)

DEFAULT_N = 1000
DEFAULT_STEP = 10
DEFAULT_HORIZON = 100
DEFAULT_EXPERIMENT_REPLICAS = 50
RESULTS_DIR = 'results'

# Slope window the convergence run reports as consistent with N^(-1/2)
SLOPE_WINDOW = (-0.65, -0.35)

FINITE_ONLY = ('oracle', 'convergence', 'uniform')


# ============================================================
# CONFIGURATION
# ============================================================

@dataclass
class ExperimentConfig:
    """One unit of CLI work."""
    kind: str
    model: dict
    model_ref: str = None
    n_particles: list = field(default_factory=lambda: [DEFAULT_N])
    n: int = DEFAULT_STEP
    horizon: int = DEFAULT_HORIZON
    replicas: int = None
    seed: int = None
    workers: int = 1
    output: str = None
    burn_in: float = DEFAULT_BURN_IN
    grid: int = None
    octants: bool = None
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    test_functions: list = None

    def __post_init__(self):
        if self.replicas is None:
            self.replicas = DEFAULT_EXPERIMENT_REPLICAS if self.kind in ('convergence', 'uniform') else 1
        if self.output is None:
            self.output = os.path.join(RESULTS_DIR, f"{self.kind}.{'json' if self.kind == 'oracle' else 'csv'}")

    def validate(self) -> "ExperimentConfig":
        """
        Check cross-field requirements.

        Raises:
            ConfigError: naming the offending field
        """
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}", field='kind')
        self.model = validate_model_document(self.model)
        if self.kind != 'oracle' and self.seed is None:
            raise ConfigError("a seed is mandatory; runs are never seeded from the clock", field='seed')
        if self.seed is not None and not 0 <= self.seed < 2 ** 64:
            raise ConfigError("must be a 64-bit unsigned integer", field='seed')
        if self.kind in FINITE_ONLY and self.model['type'] not in ('matrix', 'birth_death'):
            raise ConfigError(f"'{self.kind}' needs a finite model, got {self.model['type']!r}",
                              field='model')
        if not self.n_particles or any(v < 2 for v in self.n_particles):
            raise ConfigError("particle counts must be at least 2", field='N')
        if self.kind == 'convergence':
            if any(b <= a for a, b in zip(self.n_particles, self.n_particles[1:])):
                raise ConfigError("particle counts must be strictly increasing", field='N')
        elif len(self.n_particles) != 1:
            raise ConfigError(f"'{self.kind}' takes a single particle count", field='N')
        for name in ('n', 'horizon'):
            if getattr(self, name) < 0:
                raise ConfigError("must be nonnegative", field=name)
        for name in ('replicas', 'workers', 'max_iter'):
            if getattr(self, name) < 1:
                raise ConfigError("must be positive", field=name)
        if not 0 <= self.burn_in < 1:
            raise ConfigError("must lie in [0, 1)", field='burn_in')
        if self.kind == 'qsd' and self.horizon * (1 - self.burn_in) < 1:
            raise ConfigError("horizon * (1 - burn_in) must be at least 1", field='horizon')
        if not self.tol > 0:
            raise ConfigError("must be positive", field='tol')
        return self

    def signature_payload(self) -> dict:
        """Fields that determine the results (output location and workers excluded)."""
        data = asdict(self)
        for key in ('output', 'workers', 'model_ref'):
            data.pop(key)
        return data

    @classmethod
    def from_document(cls, doc: dict, base_dir: str = '.') -> "ExperimentConfig":
        """Build from a validated experiment document."""
        model = doc['model']
        model_ref = None
        if isinstance(model, str):
            model_ref = model
            path = model if os.path.isabs(model) else os.path.join(base_dir, model)
            model = load_model_document(path if os.path.exists(path) else model)
        sizes = doc.get('N', [DEFAULT_N])
        options = {
            'n_particles': sizes if isinstance(sizes, list) else [sizes],
            'model_ref': model_ref,
        }
        for key in ('n', 'horizon', 'replicas', 'seed', 'workers', 'output', 'burn_in', 'grid',
                    'octants', 'tol', 'max_iter', 'test_functions'):
            if key in doc:
                options[key] = doc[key]
        return cls(kind=doc['kind'], model=model, **options)


@dataclass
class RunResult:
    exit_code: int
    summary_line: str
    csv_path: str = None
    json_path: str = None
    payload: dict = None


# ============================================================
# DISPATCH
# ============================================================

def run(config: ExperimentConfig) -> RunResult:
    """
    Execute an experiment and write its artifacts.

    Raises:
        ConfigError: invalid configuration (exit code 2 at the CLI)
        ModelError: runtime model failure (exit code 3 at the CLI)
    """
    config.validate()
    model = build_model(config.model)
    logger.info("running %s on %s model (seed=%s, workers=%d)",
                config.kind, model.kind, config.seed, config.workers)
    handler = {
        'simulate': _run_simulate,
        'oracle': _run_oracle,
        'qsd': _run_qsd,
        'convergence': _run_convergence,
        'uniform': _run_uniform,
    }[config.kind]
    return handler(config, model)


def _base_summary(config: ExperimentConfig) -> dict:
    return {
        'experiment': config.kind,
        'model': config.model_ref or config.model.get('name') or config.model['type'],
        'seed': config.seed,
        'config_signature': config_signature(json_ready(config.signature_payload())),
    }


# ------------------------------------------------------------
# simulate
# ------------------------------------------------------------

@dataclass(frozen=True)
class SimulateTask:
    model: Model
    n_particles: int
    horizon: int
    seed: int
    replica: int
    grid: int = None
    octants: bool = None


def run_simulate_replica(task: SimulateTask) -> tuple:
    """
    One recorded trajectory.

    Returns:
        (distributions, rebirths, loop_iterations, tail rebirth fractions);
        the fractions cover the second half of the horizon
    """
    rng = derive_rng_streams(task.seed, task.replica, SIMULATE_STREAMS, task.n_particles)
    binning = task.model.binning(grid=task.grid, octants=task.octants)
    init = sample_initial_positions(task.model.initial, task.n_particles, rng)
    recorder = EmpiricalRecorder(binning)
    counter = RebirthCounter(window=(task.horizon // 2 + 1, task.horizon + 1))
    start = empirical_distribution(ParticleEnsemble(init), binning)
    record = run_trajectory(task.model.kernel, init, task.horizon, rng, observers=[recorder, counter])
    return [start] + recorder.distributions, record.rebirths, record.loop_iterations, counter.fractions


def _replica_path(output: str, replica: int, replicas: int) -> str:
    if replicas == 1:
        return output
    stem, ext = os.path.splitext(output)
    return f"{stem}_r{replica:03d}{ext or '.csv'}"


def _run_simulate(config: ExperimentConfig, model: Model) -> RunResult:
    size = config.n_particles[0]
    tasks = [SimulateTask(model, size, config.horizon, config.seed, r, config.grid, config.octants)
             for r in range(config.replicas)]
    results = map_replicas(run_simulate_replica, tasks, config.workers)

    table = finite_trajectory_table if model.is_finite else binned_trajectory_table
    files = []
    fractions = []
    for r, (distributions, rebirths, iterations, tail) in enumerate(results):
        header, rows = table(distributions, rebirths, iterations)
        path = _replica_path(config.output, r, config.replicas)
        write_csv(path, header, rows)
        files.append(path)
        fractions.extend(tail)

    summary = _base_summary(config)
    summary.update({
        'N': size,
        'horizon': config.horizon,
        'replicas': config.replicas,
        'files': files,
        'mean_rebirth_fraction': float(np.mean(fractions)) if fractions else 0.0,
    })
    json_path = summary_path(config.output)
    save_json(json_path, json_ready(summary))
    line = f"simulate: mean rebirth fraction {summary['mean_rebirth_fraction']:.4f} -> {files[0]}"
    return RunResult(0, line, files[0], json_path, summary)


# ------------------------------------------------------------
# oracle
# ------------------------------------------------------------

def _run_oracle(config: ExperimentConfig, model: Model) -> RunResult:
    matrix = model.matrix
    mu0 = model.initial
    conditional = conditional_distribution_exact(matrix, mu0, config.n)
    payload = _base_summary(config)
    payload.update({
        'n': config.n,
        'mu0': mu0.tolist(),
        'conditional': conditional.tolist(),
        'survival': survival_probability_exact(matrix, mu0, config.n),
        'absorption': matrix.absorption.tolist(),
        'stochastic': matrix.is_stochastic(),
    })
    payload['qsd'] = qsd_exact(matrix, config.tol, config.max_iter).to_dict()
    if matrix.size > 1:
        payload['mixing'] = estimate_mixing_rate(matrix, max(config.horizon, 2)).to_dict()

    payload = json_ready(payload)
    save_json(config.output, payload)
    line = f"oracle: lambda0 {payload['qsd']['lambda0']:.6g} -> {config.output}"
    return RunResult(0, line, None, config.output, payload)


# ------------------------------------------------------------
# qsd
# ------------------------------------------------------------

def _run_qsd(config: ExperimentConfig, model: Model) -> RunResult:
    size = config.n_particles[0]
    rng = derive_rng_streams(config.seed, 0, QSD_STREAMS, size)
    binning = model.binning(grid=config.grid, octants=config.octants)
    init = sample_initial_positions(model.initial, size, rng)
    estimate = qsd_estimate(model.kernel, init, config.horizon, rng, config.burn_in, binning)

    summary = _base_summary(config)
    summary.update({'N': size, 'horizon': config.horizon, 'burn_in': config.burn_in,
                    'bins': binning.n_bins})
    line = f"qsd: {binning.n_bins} bins"
    if model.is_finite:
        try:
            exact = qsd_exact(model.matrix, config.tol, config.max_iter)
        except ConvergenceError as e:
            logger.warning("no exact QSD to compare against: %s", e)
        else:
            tv = tv_distance(estimate, exact.qsd)
            summary.update({'oracle_qsd': exact.qsd, 'lambda0': exact.lambda0, 'tv_to_oracle': tv})
            line = f"qsd: TV to exact QSD {tv:.4g}"

    header, rows = distribution_table(estimate, binning)
    csv_path, json_path = write_artifacts(config.output, header, rows, summary)
    return RunResult(0, f"{line} -> {csv_path}", csv_path, json_path, summary)


# ------------------------------------------------------------
# convergence / uniform
# ------------------------------------------------------------

def _run_convergence(config: ExperimentConfig, model: Model) -> RunResult:
    curve = convergence_experiment(model.matrix, model.initial, config.n,
                                   config.n_particles, config.replicas, config.test_functions,
                                   config.seed, config.workers)
    summary = _base_summary(config)
    summary.update(curve.to_dict())
    lo, hi = SLOPE_WINDOW
    summary['slope_in_window'] = bool(lo <= curve.fitted_slope <= hi)
    summary['bound_holds'] = not curve.bound_violations

    header, rows = error_curve_table(curve)
    csv_path, json_path = write_artifacts(config.output, header, rows, summary)
    line = f"convergence: slope {curve.fitted_slope:.4f} -> {csv_path}"
    return RunResult(0, line, csv_path, json_path, summary)


def _run_uniform(config: ExperimentConfig, model: Model) -> RunResult:
    size = config.n_particles[0]
    sweep = uniform_in_time_experiment(model.matrix, model.initial, config.horizon,
                                       size, config.replicas, config.test_functions,
                                       config.seed, config.workers)
    summary = _base_summary(config)
    summary.update({'N': size, 'replicas': config.replicas})
    summary.update(sweep.to_dict())

    header, rows = uniform_sweep_table(sweep)
    csv_path, json_path = write_artifacts(config.output, header, rows, summary)
    line = f"uniform: sup error {sweep.sup_error:.4g} -> {csv_path}"
    return RunResult(0, line, csv_path, json_path, summary)
