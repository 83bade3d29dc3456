"""
JSON Store Utilities
====================

This module handles all JSON document read/write operations.

Documents Managed:
- Model documents: one absorbed kernel each (see README for the schema)
- Experiment documents: a complete run for `qsd-particle run`
- Bundled models in data/ (bd2.json, neutron_disk.json, ...), resolvable
  by bare name

Every loader validates strictly: unknown keys are rejected and errors
name the offending field path or JSON line.
"""

import json
import logging
import os

from qsd_particle.errors import ConfigError

logger = logging.getLogger(__name__)

# Path to bundled model documents
script_dir = os.path.dirname(os.path.abspath(__file__))
package_dir = os.path.dirname(script_dir)
DATA_DIR = os.path.join(package_dir, 'data')

SCHEMA_VERSION = 1

MODEL_TYPES = ('matrix', 'birth_death', 'neutron', 'diffusion')
EXPERIMENT_KINDS = ('simulate', 'oracle', 'qsd', 'convergence', 'uniform')

# Allowed keys per model type (besides version/type/name/initial)
MODEL_FIELDS = {
    'matrix': {'size', 'rows'},
    'birth_death': {'birth', 'death', 'kill'},
    'neutron': {'domain', 'rate', 'grid', 'octants'},
    'diffusion': {'beta', 'substeps', 'grid'},
}
COMMON_MODEL_FIELDS = {'version', 'type', 'name', 'initial'}

EXPERIMENT_FIELDS = {
    'version', 'kind', 'model', 'N', 'n', 'horizon', 'replicas', 'seed', 'workers',
    'output', 'burn_in', 'grid', 'octants', 'tol', 'max_iter', 'test_functions',
}


# ============================================================
# FILE ACCESS
# ============================================================

def resolve_model_path(name: str) -> str:
    """
    Find a model document.

    An existing path wins; otherwise ``name`` (with or without ``.json``)
    is looked up in the bundled data directory.
    """
    if os.path.exists(name):
        return name
    candidate = os.path.join(DATA_DIR, name if name.endswith('.json') else name + '.json')
    if os.path.exists(candidate):
        return candidate
    raise ConfigError(f"model document {name!r} not found (also looked in {DATA_DIR})", field='model')


def load_json(filepath: str):
    """
    Read a JSON document.

    Raises:
        ConfigError: if the file is missing or not valid JSON (with line)
    """
    try:
        with open(filepath, 'r', encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{filepath}: {e.msg} (column {e.colno})", line=e.lineno) from e
    except OSError as e:
        raise ConfigError(f"cannot read {filepath}: {e.strerror}") from e


def save_json(filepath: str, data) -> None:
    """Write ``data`` as indented UTF-8 JSON, creating parent directories."""
    directory = os.path.dirname(filepath)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(filepath, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write('\n')


# ============================================================
# FIELD CHECKS
# ============================================================

def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _number(value, path: str, positive: bool = False) -> float:
    if not _is_number(value):
        raise ConfigError(f"expected a number, got {value!r}", field=path)
    if positive and not value > 0:
        raise ConfigError(f"must be positive, got {value!r}", field=path)
    return value


def _integer(value, path: str, minimum: int = None) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"expected an integer, got {value!r}", field=path)
    if minimum is not None and value < minimum:
        raise ConfigError(f"must be at least {minimum}, got {value}", field=path)
    return value


def _number_list(value, path: str, length: int = None) -> list:
    if not isinstance(value, list):
        raise ConfigError(f"expected a list, got {type(value).__name__}", field=path)
    if length is not None and len(value) != length:
        raise ConfigError(f"expected {length} entries, got {len(value)}", field=path)
    for i, item in enumerate(value):
        _number(item, f"{path}[{i}]")
    return value


def _reject_unknown(doc: dict, allowed: set, where: str = '') -> None:
    unknown = sorted(set(doc) - allowed)
    if unknown:
        field = f"{where}.{unknown[0]}" if where else unknown[0]
        raise ConfigError(f"unknown key (allowed: {', '.join(sorted(allowed))})", field=field)


def _check_version(doc: dict) -> None:
    if 'version' not in doc:
        raise ConfigError("missing required key", field='version')
    if doc['version'] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported version {doc['version']!r}, expected {SCHEMA_VERSION}",
                          field='version')


# ============================================================
# MODEL DOCUMENTS
# ============================================================

def validate_model_document(doc) -> dict:
    """
    Check a model document against the schema.

    A bare ``{"size": S, "rows": [...]}`` document is accepted as a
    matrix model.

    Returns:
        The document, with ``type``/``version`` filled in for bare matrices

    Raises:
        ConfigError: naming the first offending field
    """
    if not isinstance(doc, dict):
        raise ConfigError("model document must be a JSON object")
    if set(doc) == {'size', 'rows'}:
        doc = {'version': SCHEMA_VERSION, 'type': 'matrix', **doc}

    _check_version(doc)
    kind = doc.get('type')
    if kind not in MODEL_TYPES:
        raise ConfigError(f"expected one of {', '.join(MODEL_TYPES)}, got {kind!r}", field='type')
    _reject_unknown(doc, COMMON_MODEL_FIELDS | MODEL_FIELDS[kind])

    if 'name' in doc and not isinstance(doc['name'], str):
        raise ConfigError("expected a string", field='name')

    if kind == 'matrix':
        _validate_matrix(doc)
    elif kind == 'birth_death':
        _validate_birth_death(doc)
    elif kind == 'neutron':
        _validate_neutron(doc)
    else:
        _validate_diffusion(doc)
    return doc


def _validate_finite_initial(doc: dict, size: int) -> None:
    if 'initial' not in doc:
        return
    initial = doc['initial']
    if isinstance(initial, list):
        _number_list(initial, 'initial', size)
    else:
        _integer(initial, 'initial', 0)


def _validate_matrix(doc: dict) -> None:
    for key in ('size', 'rows'):
        if key not in doc:
            raise ConfigError("missing required key", field=key)
    size = _integer(doc['size'], 'size', 1)
    rows = doc['rows']
    if not isinstance(rows, list) or len(rows) != size:
        raise ConfigError(f"expected a list of {size} rows", field='rows')
    for i, row in enumerate(rows):
        _number_list(row, f"rows[{i}]", size)
    _validate_finite_initial(doc, size)


def _validate_birth_death(doc: dict) -> None:
    for key in ('birth', 'death', 'kill'):
        if key not in doc:
            raise ConfigError("missing required key", field=key)
    size = len(_number_list(doc['kill'], 'kill'))
    if size == 0:
        raise ConfigError("needs at least one state", field='kill')
    _number_list(doc['birth'], 'birth', size)
    _number_list(doc['death'], 'death', size)
    _validate_finite_initial(doc, size)


def _validate_neutron(doc: dict) -> None:
    domain = doc.get('domain', {'shape': 'disk', 'radius': 1.0})
    if not isinstance(domain, dict):
        raise ConfigError("expected an object", field='domain')
    shape = domain.get('shape')
    if shape == 'disk':
        _reject_unknown(domain, {'shape', 'radius'}, 'domain')
        if 'radius' in domain:
            _number(domain['radius'], 'domain.radius', positive=True)
    elif shape == 'polygon':
        _reject_unknown(domain, {'shape', 'vertices'}, 'domain')
        vertices = domain.get('vertices')
        if not isinstance(vertices, list) or len(vertices) < 3:
            raise ConfigError("expected a list of at least 3 [x, y] vertices", field='domain.vertices')
        for i, vertex in enumerate(vertices):
            _number_list(vertex, f"domain.vertices[{i}]", 2)
    else:
        raise ConfigError(f"expected 'disk' or 'polygon', got {shape!r}", field='domain.shape')

    if 'rate' in doc:
        _number(doc['rate'], 'rate', positive=True)
    if 'grid' in doc:
        _integer(doc['grid'], 'grid', 2)
    if 'octants' in doc and not isinstance(doc['octants'], bool):
        raise ConfigError("expected true or false", field='octants')
    if 'initial' in doc:
        initial = doc['initial']
        if not isinstance(initial, dict):
            raise ConfigError("expected an object with x and v", field='initial')
        _reject_unknown(initial, {'x', 'v'}, 'initial')
        for key in ('x', 'v'):
            if key in initial:
                _number_list(initial[key], f"initial.{key}", 2)


def _validate_diffusion(doc: dict) -> None:
    if 'beta' not in doc:
        raise ConfigError("missing required key", field='beta')
    _number(doc['beta'], 'beta')
    if 'substeps' in doc:
        _integer(doc['substeps'], 'substeps', 1)
    if 'grid' in doc:
        _integer(doc['grid'], 'grid', 1)
    if 'initial' in doc:
        _number(doc['initial'], 'initial', positive=True)


def load_model_document(name: str) -> dict:
    """Resolve, read and validate a model document."""
    path = resolve_model_path(name)
    doc = validate_model_document(load_json(path))
    logger.debug("loaded %s model from %s", doc['type'], path)
    return doc


# ============================================================
# EXPERIMENT DOCUMENTS
# ============================================================

def validate_experiment_document(doc) -> dict:
    """
    Check an experiment document (the input of ``qsd-particle run``).

    ``model`` is either a model file name or an inline model document.
    Count fields are checked here; kind-specific requirements are checked
    when the ExperimentConfig is built.
    """
    if not isinstance(doc, dict):
        raise ConfigError("experiment document must be a JSON object")
    _check_version(doc)
    _reject_unknown(doc, EXPERIMENT_FIELDS)

    if doc.get('kind') not in EXPERIMENT_KINDS:
        raise ConfigError(f"expected one of {', '.join(EXPERIMENT_KINDS)}, got {doc.get('kind')!r}",
                          field='kind')
    if 'model' not in doc:
        raise ConfigError("missing required key", field='model')
    if isinstance(doc['model'], dict):
        try:
            validate_model_document(doc['model'])
        except ConfigError as e:
            raise ConfigError(str(e), field='model') from e
    elif not isinstance(doc['model'], str):
        raise ConfigError("expected a file name or an inline model object", field='model')

    if doc['kind'] != 'oracle':
        if 'seed' not in doc:
            raise ConfigError("missing required key (runs are never seeded from the clock)",
                              field='seed')
        _integer(doc['seed'], 'seed', 0)

    if 'N' in doc:
        sizes = doc['N'] if isinstance(doc['N'], list) else [doc['N']]
        for i, value in enumerate(sizes):
            _integer(value, f"N[{i}]" if isinstance(doc['N'], list) else 'N', 2)
    for key, minimum in (('n', 0), ('horizon', 0), ('replicas', 1), ('workers', 1),
                         ('grid', 1), ('max_iter', 1)):
        if key in doc:
            _integer(doc[key], key, minimum)
    for key in ('burn_in', 'tol'):
        if key in doc:
            _number(doc[key], key)
    if 'output' in doc and not isinstance(doc['output'], str):
        raise ConfigError("expected a path string", field='output')
    if 'octants' in doc and not isinstance(doc['octants'], bool):
        raise ConfigError("expected true or false", field='octants')
    if 'test_functions' in doc:
        rows = doc['test_functions']
        if not isinstance(rows, list) or not rows:
            raise ConfigError("expected a nonempty list of rows", field='test_functions')
        for i, row in enumerate(rows):
            _number_list(row, f"test_functions[{i}]")
    return doc


def load_experiment_document(filepath: str) -> dict:
    """Read and validate an experiment document."""
    return validate_experiment_document(load_json(filepath))
