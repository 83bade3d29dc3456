"""
Particle Engine
===============

The non-failable N-particle system.

One time step starts from N live positions, every particle
flagged "pending", and repeats until nothing is pending:

1. pick a pending index i0 uniformly;
2. draw Z from the kernel at x[i0];
   - Z alive: x[i0] = Z and i0 is finished;
   - Z absorbed: pick j0 uniformly among the N-1 other indices and copy
     the pair (x[j0], flag[j0]) into slot i0. Copying a finished particle
     finishes i0 at a time-(n+1) position; copying a pending one leaves i0
     pending at a time-n position.

Since every slot is overwritten only by live states, the ensemble is live
at every step boundary whatever the absorption probabilities.

Randomness is consumed per loop iteration in a fixed order: selection
draw, kernel draw(s), rebirth draw (only on absorption). Runs are
therefore bit-reproducible given (seed, N, model).
"""

import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from qsd_particle.absorbed_kernel import ABSORBED, AbsorbedKernel, Binning
from qsd_particle.errors import StuckEnsembleError, UsageError

logger = logging.getLogger(__name__)

# Default iteration cap per step is ITERATION_CAP_FACTOR * N
ITERATION_CAP_FACTOR = 1000


# ============================================================
# STATE
# ============================================================

@dataclass
class ParticleEnsemble:
    """Positions of N live particles plus rebirth bookkeeping."""
    positions: list
    step_index: int = 0
    total_rebirths: int = 0
    per_step_rebirths: int = 0

    def __post_init__(self):
        self.positions = list(self.positions)
        if len(self.positions) < 2:
            raise UsageError(f"an ensemble needs at least 2 particles, got {len(self.positions)}")

    @property
    def size(self) -> int:
        return len(self.positions)

    def copy(self) -> "ParticleEnsemble":
        return ParticleEnsemble(list(self.positions), self.step_index,
                                self.total_rebirths, self.per_step_rebirths)


@dataclass(frozen=True)
class StepReport:
    """What one call to advance_one_step did."""
    step_index: int
    rebirths: int
    loop_iterations: int


@dataclass
class TrajectoryRecord:
    """Per-step diagnostics of a trajectory and its final ensemble."""
    rebirths: list = field(default_factory=list)
    loop_iterations: list = field(default_factory=list)
    ensemble: ParticleEnsemble = None

    @property
    def horizon(self) -> int:
        return len(self.rebirths)


def _uniform_index(rng, k: int) -> int:
    # one rng.random() per selection; min() guards the k * (1 - 2**-53) rounding edge
    return min(int(rng.random() * k), k - 1)


# ============================================================
# ONE STEP
# ============================================================

def advance_one_step(ensemble: ParticleEnsemble, kernel: AbsorbedKernel, rng,
                     iteration_cap: int = None) -> StepReport:
    """
    Move ``ensemble`` from time n to n+1 in place.

    Args:
        ensemble: Live particle positions at time n
        kernel: One-step absorbed kernel satisfying survivability
        rng: numpy Generator (or anything with ``random()`` and whatever
            the kernel draws)
        iteration_cap: Maximum loop iterations; defaults to 1000 * N

    Returns:
        StepReport with the rebirth and loop-iteration counts of this step

    Raises:
        UsageError: if N < 2 or the cap is below N
        StuckEnsembleError: if the cap is reached
    """
    xs = ensemble.positions
    n_particles = len(xs)
    if n_particles < 2:
        raise UsageError(f"the particle step needs N >= 2, got {n_particles}")
    cap = ITERATION_CAP_FACTOR * n_particles if iteration_cap is None else iteration_cap
    if cap < n_particles:
        raise UsageError(f"iteration_cap {cap} is below N = {n_particles}")

    done = [False] * n_particles
    # pending indices kept dense; slot_of[i] is i's position in pending
    pending = list(range(n_particles))
    slot_of = list(range(n_particles))

    def finish(i):
        k = slot_of[i]
        last = pending.pop()
        if last != i:
            pending[k] = last
            slot_of[last] = k
        done[i] = True

    iterations = 0
    rebirths = 0
    while pending:
        if iterations >= cap:
            raise StuckEnsembleError([xs[i] for i in pending], iterations)
        iterations += 1

        i0 = pending[_uniform_index(rng, len(pending))]
        outcome = kernel.sample_step(xs[i0], rng)
        if outcome is ABSORBED:
            j0 = _uniform_index(rng, n_particles - 1)
            if j0 >= i0:
                j0 += 1
            rebirths += 1
            xs[i0] = xs[j0]
            if done[j0]:
                finish(i0)
        else:
            xs[i0] = outcome.state
            finish(i0)

    ensemble.step_index += 1
    ensemble.total_rebirths += rebirths
    ensemble.per_step_rebirths = rebirths
    return StepReport(ensemble.step_index, rebirths, iterations)


def run_trajectory(kernel: AbsorbedKernel, init_positions, horizon: int, rng,
                   observers=(), iteration_cap: int = None) -> TrajectoryRecord:
    """
    Apply advance_one_step ``horizon`` times.

    Each observer is called as ``observer(ensemble, report)`` after every
    step. The trajectory never ends early: there is no failure state.
    """
    if horizon < 0:
        raise UsageError(f"horizon must be nonnegative, got {horizon}")
    ensemble = ParticleEnsemble(init_positions)
    for x in ensemble.positions:
        if not kernel.is_live(x):
            raise UsageError(f"initial position {x!r} is not a live state")

    record = TrajectoryRecord(ensemble=ensemble)
    for _ in range(horizon):
        report = advance_one_step(ensemble, kernel, rng, iteration_cap)
        record.rebirths.append(report.rebirths)
        record.loop_iterations.append(report.loop_iterations)
        for observer in observers:
            observer(ensemble, report)

    if horizon:
        logger.debug("trajectory N=%d horizon=%d: %d rebirths, %d loop iterations",
                     ensemble.size, horizon, ensemble.total_rebirths, sum(record.loop_iterations))
    return record


# ============================================================
# EMPIRICAL MEASURES
# ============================================================

def empirical_distribution(ensemble: ParticleEnsemble, binning: Binning) -> np.ndarray:
    """
    Fraction of particles per bin: mu^N_n = (1/N) sum_i delta_{X^i_n}.

    Raises:
        UsageError: if a particle falls outside the binning (the binning
            does not match the kernel)
    """
    counts = Counter(binning.index(x) for x in ensemble.positions)
    weights = np.zeros(binning.n_bins)
    for k, c in counts.items():
        weights[k] = c
    return weights / ensemble.size


def sample_initial_positions(initial, size: int, rng) -> list:
    """
    i.i.d. initial positions.

    ``initial`` is either a probability vector over a finite state space
    (sampled with ``rng.choice``) or a single live state replicated N times.
    """
    if isinstance(initial, np.ndarray) and initial.ndim == 1 and initial.dtype.kind == "f":
        return [int(s) for s in rng.choice(initial.size, size=size, p=initial)]
    return [initial] * size


# ============================================================
# OBSERVERS
# ============================================================

class EmpiricalRecorder:
    """Observer storing the binned empirical measure after every step."""

    def __init__(self, binning: Binning):
        self.binning = binning
        self.distributions = []

    def __call__(self, ensemble, report):
        self.distributions.append(empirical_distribution(ensemble, self.binning))


class RebirthCounter:
    """
    Observer accumulating rebirths per particle per step.

    The running total counts rebirths across the whole ensemble;
    ``window`` restricts the summary to steps in [start, stop).
    """

    def __init__(self, window: tuple = None):
        self.window = window
        self.fractions = []

    def __call__(self, ensemble, report):
        n = report.step_index
        if self.window is None or self.window[0] <= n < self.window[1]:
            self.fractions.append(report.rebirths / ensemble.size)

    @property
    def mean(self) -> float:
        return float(np.mean(self.fractions)) if self.fractions else 0.0

    @property
    def std(self) -> float:
        return float(np.std(self.fractions)) if self.fractions else 0.0
