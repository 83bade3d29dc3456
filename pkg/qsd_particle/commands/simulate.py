"""
Simulate Command
================

Runs the particle system and records the empirical measure after every
step.

Usage:
- qsd-particle simulate --model bd2 --N 1000 --horizon 200 --seed 1
- qsd-particle simulate --model neutron_disk --N 500 --horizon 300 --seed 1 --grid 20
"""

import click

from qsd_particle.commands.common import (
    binning_options, execute, handle_errors, model_option, output_option, parse_counts,
    seed_option, workers_option,
)


@click.command('simulate')
@model_option
@click.option('--N', 'n_particles', callback=parse_counts, default='1000', show_default=True,
              help='Particle count.')
@click.option('--horizon', type=click.IntRange(min=0), default=100, show_default=True,
              help='Number of steps.')
@click.option('--replicas', type=click.IntRange(min=1), default=1, show_default=True,
              help='Independent trajectories; one CSV each when more than 1.')
@seed_option
@workers_option
@binning_options
@output_option
@handle_errors
def simulate(model, **options):
    """Trajectory of the non-failable particle system."""
    execute('simulate', model, **options)
