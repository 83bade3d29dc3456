"""
QSD Command
===========

Estimates the quasi-stationary distribution by time-averaging the
empirical measure of one long trajectory.

Usage:
- qsd-particle qsd --model bd2 --N 1000 --horizon 500 --seed 1
- qsd-particle qsd --model neutron_disk --N 500 --horizon 300 --seed 1
"""

import click

from qsd_particle.commands.common import (
    binning_options, execute, handle_errors, model_option, output_option, parse_counts,
    seed_option,
)


@click.command('qsd')
@model_option
@click.option('--N', 'n_particles', callback=parse_counts, default='1000', show_default=True,
              help='Particle count.')
@click.option('--horizon', type=click.IntRange(min=1), default=500, show_default=True,
              help='Trajectory length.')
@click.option('--burn-in', 'burn_in', type=click.FloatRange(0, 1, max_open=True), default=0.5,
              show_default=True, help='Fraction of steps discarded before averaging.')
@seed_option
@binning_options
@output_option
@handle_errors
def qsd(model, **options):
    """Time-averaged QSD estimate (compared with the exact QSD for finite models)."""
    execute('qsd', model, **options)
