"""
Utils Package Initialization
============================

This package initializes the utilities shared by the runner and the CLI.
"""

from qsd_particle.utils.seeding import (
    derive_rng_streams,
    config_signature,
    canonical_json,
)

from qsd_particle.utils.json_store import (
    load_json,
    save_json,
    load_model_document,
    load_experiment_document,
    validate_model_document,
    validate_experiment_document,
)

from qsd_particle.utils.artifacts import (
    render_csv,
    write_csv,
    write_artifacts,
)

from qsd_particle.utils.pool import map_replicas

__all__ = [
    'derive_rng_streams',
    'config_signature',
    'canonical_json',
    'load_json',
    'save_json',
    'load_model_document',
    'load_experiment_document',
    'validate_model_document',
    'validate_experiment_document',
    'render_csv',
    'write_csv',
    'write_artifacts',
    'map_replicas',
]
