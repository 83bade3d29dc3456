"""
Convergence Command
===================

Mean absolute error of the empirical measure at step n against the exact
conditional law, for a list of particle counts.

Usage:
- qsd-particle convergence --model bd2 --N 100,400,1600 --n 10 --replicas 50 --seed 7
"""

import click

from qsd_particle.commands.common import (
    execute, handle_errors, model_option, output_option, parse_counts, seed_option,
    workers_option,
)


@click.command('convergence')
@model_option
@click.option('--N', 'n_particles', callback=parse_counts, default='100,400,1600,6400',
              show_default=True, help='Comma-separated, strictly increasing particle counts.')
@click.option('--n', 'n', type=click.IntRange(min=0), default=10, show_default=True,
              help='Step at which errors are measured.')
@click.option('--replicas', type=click.IntRange(min=1), default=50, show_default=True,
              help='Independent trajectories per particle count.')
@seed_option
@workers_option
@output_option
@handle_errors
def convergence(model, **options):
    """Error against N, log-log slope and rate-bound check."""
    execute('convergence', model, **options)
