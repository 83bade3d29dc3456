"""
Commands Package Initialization
===============================

This package contains one module per CLI subcommand.

Available Commands:
- simulate: particle trajectory with per-step empirical measures
- oracle: exact quantities of a finite model
- qsd: time-averaged QSD estimate
- convergence: error against N
- uniform: error along time
- run: execute an experiment document
"""

from qsd_particle.commands.simulate import simulate
from qsd_particle.commands.oracle import oracle
from qsd_particle.commands.qsd import qsd
from qsd_particle.commands.convergence import convergence
from qsd_particle.commands.uniform import uniform
from qsd_particle.commands.run import run

ALL_COMMANDS = [simulate, oracle, qsd, convergence, uniform, run]

__all__ = ['simulate', 'oracle', 'qsd', 'convergence', 'uniform', 'run', 'ALL_COMMANDS']
