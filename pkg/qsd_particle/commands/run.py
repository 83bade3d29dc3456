"""
Run Command
===========

Runs an experiment document.

Usage:
- qsd-particle run experiments/convergence_bd2.json [--workers 4]
"""

import json
import os

import click

from qsd_particle.commands.common import handle_errors
from qsd_particle.runner import ExperimentConfig, run as run_experiment
from qsd_particle.utils.json_store import load_experiment_document


@click.command('run')
@click.argument('config_file', type=click.Path(dir_okay=False))
@click.option('--workers', type=click.IntRange(min=1), help='Override the document\'s worker count.')
@handle_errors
def run(config_file, workers):
    """Run the experiment described by CONFIG_FILE."""
    doc = load_experiment_document(config_file)
    config = ExperimentConfig.from_document(doc, os.path.dirname(os.path.abspath(config_file)))
    if workers is not None:
        config.workers = workers
    result = run_experiment(config)
    if config.kind == 'oracle':
        click.echo(json.dumps(result.payload, indent=2, sort_keys=True))
    click.echo(result.summary_line, err=config.kind == 'oracle')
