"""
Artifact Rendering
==================

CSV tables and JSON summaries produced by the experiments.

Tables are rendered into an in-memory buffer first and written in one go.
Floats are written with repr(), so identical runs give byte-identical
files. Every table has a header row; encoding is UTF-8 with '\n' line
endings.

Table layouts:
- finite trajectory:     step, rebirths, loop_iters, bin_0 .. bin_{S-1}
- binned trajectory:     step, rebirths, loop_iters, cell_i, mass (nonzero cells only)
- convergence curve:     N, mean_abs_error, std_error, bound, exceeds_bound
- uniform sweep:         step, mean_abs_error, std_error
- distribution:          bin, label, mass
"""

import csv
import io
import math
import os

import numpy as np

from qsd_particle.utils.json_store import save_json


def format_value(value) -> str:
    """Stable text form of a table cell."""
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def render_csv(header: list, rows) -> str:
    """
    Render a table to a string.

    Args:
        header: Column names
        rows: Iterable of row sequences

    Returns:
        CSV text with a header row
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def json_ready(value):
    """Recursively convert numpy values and non-finite floats for JSON output."""
    if isinstance(value, dict):
        return {str(k): json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_ready(v) for v in value]
    if isinstance(value, np.ndarray):
        return json_ready(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return value
    return value


def summary_path(csv_path: str) -> str:
    """``results/run.csv`` -> ``results/run.json``."""
    return os.path.splitext(csv_path)[0] + '.json'


def write_csv(csv_path: str, header: list, rows) -> str:
    """Render and write one table, creating parent directories."""
    text = render_csv(header, rows)
    directory = os.path.dirname(csv_path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(csv_path, 'w', encoding='utf-8', newline='') as f:
        f.write(text)
    return csv_path


def write_artifacts(csv_path: str, header: list, rows, summary: dict) -> tuple:
    """
    Write a CSV table and its JSON summary side by side.

    Returns:
        (csv_path, json_path)
    """
    write_csv(csv_path, header, rows)
    json_path = summary_path(csv_path)
    save_json(json_path, json_ready(summary))
    return csv_path, json_path


# ============================================================
# TABLE BUILDERS
# ============================================================

def finite_trajectory_table(distributions, rebirths, loop_iterations) -> tuple:
    """Wide table; row n holds the empirical distribution after step n (row 0: start)."""
    size = len(distributions[0])
    header = ['step', 'rebirths', 'loop_iters'] + [f'bin_{i}' for i in range(size)]
    rows = []
    for n, dist in enumerate(distributions):
        r = rebirths[n - 1] if n else 0
        it = loop_iterations[n - 1] if n else 0
        rows.append([n, r, it] + [float(w) for w in dist])
    return header, rows


def binned_trajectory_table(distributions, rebirths, loop_iterations) -> tuple:
    """Long table of nonzero cells, one row per (step, cell)."""
    header = ['step', 'rebirths', 'loop_iters', 'cell_i', 'mass']
    rows = []
    for n, dist in enumerate(distributions):
        r = rebirths[n - 1] if n else 0
        it = loop_iterations[n - 1] if n else 0
        for cell in np.flatnonzero(dist):
            rows.append([n, r, it, int(cell), float(dist[cell])])
    return header, rows


def distribution_table(weights, binning=None) -> tuple:
    """One row per bin; bins no live state can reach are left out."""
    header = ['bin', 'label', 'mass']
    rows = []
    for i, w in enumerate(weights):
        if binning is not None and not binning.reachable(i):
            continue
        label = binning.label(i) if binning is not None else str(i)
        rows.append([i, label, float(w)])
    return header, rows


def error_curve_table(curve) -> tuple:
    header = ['N', 'mean_abs_error', 'std_error', 'bound', 'exceeds_bound']
    rows = [[p.n_particles, p.mean_abs_error, p.std_error, p.bound, p.exceeds_bound]
            for p in curve.points]
    return header, rows


def uniform_sweep_table(sweep) -> tuple:
    header = ['step', 'mean_abs_error', 'std_error']
    rows = [[n, e, s] for n, (e, s) in enumerate(zip(sweep.errors, sweep.std_errors))]
    return header, rows
