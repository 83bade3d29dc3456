import hashlib
import json
import os
import pickle

import numpy as np
import pytest

from qsd_particle.absorbed_kernel import Violation
from qsd_particle.errors import (
    ConfigError, ConvergenceError, KernelValidationError, StuckEnsembleError,
)
from qsd_particle.model_zoo import Disk, neutron_binning
from qsd_particle.utils.artifacts import (
    distribution_table, finite_trajectory_table, format_value, json_ready, render_csv,
    summary_path, write_artifacts,
)
from qsd_particle.utils.json_store import (
    load_experiment_document, load_json, load_model_document, resolve_model_path,
    validate_experiment_document, validate_model_document,
)
from qsd_particle.utils.pool import map_replicas
from qsd_particle.utils.seeding import (
    CONVERGENCE_STREAMS, canonical_json, config_signature, derive_rng_streams,
)


def _square(x):
    return x * x


def _stuck(x):
    raise StuckEnsembleError([x], 1000)


# ============================================================
# SEEDING
# ============================================================

def test_streams_are_reproducible():
    a = derive_rng_streams(42, 3, CONVERGENCE_STREAMS, 100).random(5)
    b = derive_rng_streams(42, 3, CONVERGENCE_STREAMS, 100).random(5)
    assert list(a) == list(b)


def test_streams_differ_by_replica_and_path():
    base = derive_rng_streams(42, 0, CONVERGENCE_STREAMS, 100).random(3).tolist()
    assert derive_rng_streams(42, 1, CONVERGENCE_STREAMS, 100).random(3).tolist() != base
    assert derive_rng_streams(42, 0, CONVERGENCE_STREAMS, 400).random(3).tolist() != base
    assert derive_rng_streams(43, 0, CONVERGENCE_STREAMS, 100).random(3).tolist() != base


def test_seed_range():
    derive_rng_streams(2 ** 64 - 1, 0)
    with pytest.raises(ValueError):
        derive_rng_streams(2 ** 64, 0)
    with pytest.raises(ValueError):
        derive_rng_streams(1, -1)


def test_streams_are_uncorrelated():
    draws = np.array([derive_rng_streams(7, r, CONVERGENCE_STREAMS, 100).standard_normal(250_000)
                      for r in range(32)])
    rho = np.corrcoef(draws)
    off_diagonal = rho[~np.eye(32, dtype=bool)]
    assert np.abs(off_diagonal).max() < 0.01


def test_canonical_json():
    a = {"kind": "qsd", "seed": 1, "model": {"rows": [[0.5]], "size": 1}}
    b = {"model": {"size": 1, "rows": [[0.5]]}, "seed": 1, "kind": "qsd"}
    assert canonical_json(a) == canonical_json(b)
    assert canonical_json(a) == '{"kind":"qsd","model":{"rows":[[0.5]],"size":1},"seed":1}'


def test_config_signature():
    config = {"kind": "qsd", "seed": 1, "N": [10]}
    signature = config_signature(config)
    assert signature == config_signature({"N": [10], "seed": 1, "kind": "qsd"})
    assert signature == hashlib.sha256(canonical_json(config).encode()).hexdigest()
    assert signature != config_signature({**config, "seed": 2})


def test_map_replicas_keeps_order():
    assert map_replicas(_square, range(6)) == [0, 1, 4, 9, 16, 25]
    assert map_replicas(_square, range(6), workers=2) == [0, 1, 4, 9, 16, 25]


def test_errors_survive_pickling():
    errors = [
        ConfigError("must be positive", field="N", line=3),
        KernelValidationError([Violation("zero_survival", 0, message="row 0 has zero survival")]),
        ConvergenceError("power iteration did not converge", 0.25, 1000),
        StuckEnsembleError([0, 1], 20000),
    ]
    for error in errors:
        copy = pickle.loads(pickle.dumps(error))
        assert type(copy) is type(error)
        assert str(copy) == str(error)
        assert copy.__dict__ == error.__dict__


def test_worker_errors_keep_their_type():
    with pytest.raises(StuckEnsembleError) as info:
        map_replicas(_stuck, [4, 5], workers=2)
    assert info.value.iterations == 1000


# ============================================================
# JSON STORE
# ============================================================

def test_bundled_models_load():
    for name in ("bd2", "bd2_matrix", "bd8_catastrophe", "neutron_disk", "neutron_hexagon",
                 "diffusion_beta3.json"):
        doc = load_model_document(name)
        assert doc["version"] == 1


def test_bare_matrix_document():
    doc = validate_model_document({"size": 2, "rows": [[0.5, 0.3], [0.4, 0.4]]})
    assert doc["type"] == "matrix"


def test_unknown_model_name():
    with pytest.raises(ConfigError) as info:
        resolve_model_path("no_such_model")
    assert info.value.field == "model"


def test_syntax_error_reports_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "version": 1,\n  "type": \n}\n')
    with pytest.raises(ConfigError) as info:
        load_json(str(path))
    assert info.value.line == 4


@pytest.mark.parametrize("doc, field", [
    ({"type": "matrix", "size": 1, "rows": [[0.5]]}, "version"),
    ({"version": 2, "type": "matrix", "size": 1, "rows": [[0.5]]}, "version"),
    ({"version": 1, "type": "markov"}, "type"),
    ({"version": 1, "type": "matrix", "size": 2, "rows": [[0.5, 0.1], [0.2]]}, "rows[1]"),
    ({"version": 1, "type": "matrix", "size": 1, "rows": [["x"]]}, "rows[0][0]"),
    ({"version": 1, "type": "matrix", "size": 1, "rows": [[0.5]], "colour": 1}, "colour"),
    ({"version": 1, "type": "birth_death", "birth": [0.1], "death": [0.0]}, "kill"),
    ({"version": 1, "type": "neutron", "domain": {"shape": "ellipse"}}, "domain.shape"),
    ({"version": 1, "type": "neutron", "grid": 1}, "grid"),
    ({"version": 1, "type": "diffusion"}, "beta"),
])
def test_model_schema_errors_name_the_field(doc, field):
    with pytest.raises(ConfigError) as info:
        validate_model_document(doc)
    assert info.value.field == field
    assert f"field '{field}'" in str(info.value)


def test_experiment_requires_seed():
    with pytest.raises(ConfigError) as info:
        validate_experiment_document({"version": 1, "kind": "qsd", "model": "bd2"})
    assert info.value.field == "seed"
    validate_experiment_document({"version": 1, "kind": "oracle", "model": "bd2"})


def test_experiment_checks_counts():
    with pytest.raises(ConfigError) as info:
        validate_experiment_document({"version": 1, "kind": "convergence", "model": "bd2",
                                      "seed": 1, "N": [100, 1]})
    assert info.value.field == "N[1]"


def test_experiment_inline_model(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps({
        "version": 1, "kind": "qsd", "seed": 5,
        "model": {"size": 2, "rows": [[0.5, 0.3], [0.4, 0.4]]},
    }))
    doc = load_experiment_document(str(path))
    assert doc["model"]["size"] == 2


# ============================================================
# ARTIFACTS
# ============================================================

def test_format_value():
    assert format_value(0.1) == "0.1"
    assert format_value(np.float64(1 / 3)) == repr(1 / 3)
    assert format_value(np.int64(7)) == "7"
    assert format_value(True) == "true"


def test_render_csv_is_unix_text():
    text = render_csv(["a", "b"], [[1, 0.5], [2, 0.25]])
    assert text == "a,b\n1,0.5\n2,0.25\n"


def test_finite_trajectory_table():
    header, rows = finite_trajectory_table([np.array([1.0, 0.0]), np.array([0.5, 0.5])], [3], [7])
    assert header == ["step", "rebirths", "loop_iters", "bin_0", "bin_1"]
    assert rows == [[0, 0, 0, 1.0, 0.0], [1, 3, 7, 0.5, 0.5]]


def test_distribution_table_without_binning():
    header, rows = distribution_table([0.25, 0.75])
    assert rows[1] == [1, "1", 0.75]


def test_distribution_table_skips_cells_outside_the_domain():
    binning = neutron_binning(Disk(1.0), 10)
    header, rows = distribution_table(np.zeros(binning.n_bins), binning)
    labels = [row[1] for row in rows]
    assert "0:0" not in labels
    assert "5:5" in labels
    assert len(rows) < binning.n_bins


def test_json_ready():
    data = json_ready({"a": np.array([1.0, np.nan]), "b": float("inf"), 3: np.int32(2)})
    assert data == {"a": [1.0, None], "b": "inf", "3": 2}


def test_write_artifacts(tmp_path):
    csv_path = str(tmp_path / "out" / "run.csv")
    written = write_artifacts(csv_path, ["x"], [[1]], {"value": np.float64(0.5)})
    assert written == (csv_path, summary_path(csv_path))
    assert os.path.exists(csv_path)
    with open(written[1], encoding="utf-8") as f:
        assert json.load(f) == {"value": 0.5}
