"""
Uniform Command
===============

Mean absolute error at every step up to the horizon, for one particle
count.

Usage:
- qsd-particle uniform --model bd2 --N 1000 --horizon 200 --replicas 50 --seed 7
"""

import click

from qsd_particle.commands.common import (
    execute, handle_errors, model_option, output_option, parse_counts, seed_option,
    workers_option,
)


@click.command('uniform')
@model_option
@click.option('--N', 'n_particles', callback=parse_counts, default='1000', show_default=True,
              help='Particle count.')
@click.option('--horizon', type=click.IntRange(min=0), default=200, show_default=True,
              help='Last step of the sweep.')
@click.option('--replicas', type=click.IntRange(min=1), default=50, show_default=True,
              help='Independent trajectories.')
@seed_option
@workers_option
@output_option
@handle_errors
def uniform(model, **options):
    """Error along time: sup and tail drift."""
    execute('uniform', model, **options)
