"""
Command Helpers
===============

Shared options, error mapping and dispatch for the CLI commands.
"""

import json
import logging
from functools import wraps

import click

from qsd_particle.errors import EXIT_CONFIG, EXIT_MODEL, ConfigError, ModelError, UsageError
from qsd_particle.runner import ExperimentConfig, run
from qsd_particle.utils.json_store import load_model_document

logger = logging.getLogger(__name__)


class CliError(click.ClickException):
    """ClickException carrying one of the stable exit codes."""

    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


def handle_errors(f):
    """Decorator mapping library errors to exit codes 2 (config) and 3 (model)."""
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except ConfigError as e:
            raise CliError(f"configuration error: {e}", EXIT_CONFIG) from e
        except UsageError as e:
            raise CliError(f"invalid option: {e}", EXIT_CONFIG) from e
        except ModelError as e:
            raise CliError(f"model error: {e}", EXIT_MODEL) from e
    return decorated_function


def parse_counts(ctx, param, value):
    """``"100,400,1600"`` -> [100, 400, 1600]."""
    if value is None:
        return None
    try:
        counts = [int(part) for part in value.split(',') if part.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}")
    if not counts:
        raise click.BadParameter("expected at least one particle count")
    return counts


# ============================================================
# OPTION GROUPS
# ============================================================

def model_option(f):
    return click.option('--model', 'model', required=True,
                        help='Model document path, or the name of a bundled model (e.g. bd2).')(f)


def seed_option(f):
    return click.option('--seed', type=click.IntRange(0, 2 ** 64 - 1), required=True,
                        help='Master seed (mandatory; runs are never seeded from the clock).')(f)


def output_option(f):
    return click.option('--out', 'output', type=click.Path(dir_okay=False),
                        help='Output file (default results/<command>.csv).')(f)


def workers_option(f):
    return click.option('--workers', type=click.IntRange(min=1), default=1, show_default=True,
                        help='Worker processes for independent replicas.')(f)


def binning_options(f):
    f = click.option('--octants', is_flag=True, default=None,
                     help='Split transport cells by velocity octant.')(f)
    f = click.option('--grid', type=click.IntRange(min=1),
                     help='Bins per axis for continuous models.')(f)
    return f


# ============================================================
# DISPATCH
# ============================================================

def execute(kind: str, model: str, **options):
    """Build an ExperimentConfig from command options, run it, echo the summary."""
    options = {k: v for k, v in options.items() if v is not None}
    config = ExperimentConfig(kind=kind, model=load_model_document(model), model_ref=model, **options)
    result = run(config)
    if kind == 'oracle':
        click.echo(json.dumps(result.payload, indent=2, sort_keys=True))
    click.echo(result.summary_line, err=kind == 'oracle')
    return result
