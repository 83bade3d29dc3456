"""
Oracle Command
==============

Prints the exact conditional law, survival probability, QSD, lambda0 and
mixing report of a finite model as JSON.

Usage:
- qsd-particle oracle --model bd2 --n 10
"""

import click

from qsd_particle.commands.common import execute, handle_errors, model_option, output_option


@click.command('oracle')
@model_option
@click.option('--n', 'n', type=click.IntRange(min=0), default=10, show_default=True,
              help='Step of the conditional law.')
@click.option('--horizon', type=click.IntRange(min=2), default=50, show_default=True,
              help='Steps used by the mixing-rate fit.')
@click.option('--tol', type=float, default=1e-12, show_default=True,
              help='Power-iteration tolerance (TV change).')
@click.option('--max-iter', 'max_iter', type=click.IntRange(min=1), default=10 ** 6, show_default=True,
              help='Power-iteration cap.')
@output_option
@handle_errors
def oracle(model, **options):
    """Exact reference quantities of a finite kernel."""
    execute('oracle', model, **options)
