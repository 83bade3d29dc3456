"""
qsd_particle
============

Non-failable interacting-particle approximation of Markov chains
conditioned on survival, with exact oracles for finite chains.

Modules:
- absorbed_kernel: kernel interface, substochastic matrices
- oracle: exact conditional laws, survival, QSD, mixing rate
- particle_engine: the non-failable step and trajectories
- model_zoo: birth-death, neutron transport, degenerate diffusion
- analysis: metrics and experiments
- runner: configuration-driven experiments behind the CLI
"""

from qsd_particle.absorbed_kernel import (
    ABSORBED, AbsorbedKernel, Alive, MatrixKernel, SubstochasticMatrix, sample_step_matrix,
    validate,
)
from qsd_particle.analysis import (
    alpha_bound, convergence_experiment, naive_monte_carlo, qsd_estimate, rate_bound,
    tv_distance, uniform_in_time_experiment,
)
from qsd_particle.oracle import (
    conditional_distribution_exact, estimate_mixing_rate, qsd_exact, survival_probability_exact,
)
from qsd_particle.particle_engine import (
    ParticleEnsemble, advance_one_step, empirical_distribution, run_trajectory,
)

__version__ = '0.1.0'

__all__ = [
    'ABSORBED',
    'AbsorbedKernel',
    'Alive',
    'MatrixKernel',
    'SubstochasticMatrix',
    'sample_step_matrix',
    'validate',
    'conditional_distribution_exact',
    'survival_probability_exact',
    'qsd_exact',
    'estimate_mixing_rate',
    'ParticleEnsemble',
    'advance_one_step',
    'run_trajectory',
    'empirical_distribution',
    'tv_distance',
    'alpha_bound',
    'rate_bound',
    'convergence_experiment',
    'uniform_in_time_experiment',
    'qsd_estimate',
    'naive_monte_carlo',
]
