"""
Plot a convergence CSV on log-log axes, with the rate bound and a
reference N^(-1/2) line through the first point.

Usage:
    qsd-particle run experiments/convergence_bd2.json
    python scripts/plot_error_curve.py results/convergence_bd2.csv [out.png]

Needs matplotlib (pip install qsd-particle[plot]).
"""

import csv
import sys

import matplotlib.pyplot as plt
import numpy as np


def read_curve(path):
    with open(path, encoding='utf-8', newline='') as f:
        rows = list(csv.DictReader(f))
    ns = np.array([int(r['N']) for r in rows])
    errors = np.array([float(r['mean_abs_error']) for r in rows])
    std_errors = np.array([float(r['std_error']) for r in rows])
    bounds = np.array([float(r['bound']) for r in rows])
    return ns, errors, std_errors, bounds


def main(argv):
    if len(argv) < 2:
        print(__doc__)
        return 2
    ns, errors, std_errors, bounds = read_curve(argv[1])

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(ns, errors, yerr=std_errors, fmt='o-', label='mean |error|')
    ax.plot(ns, bounds, '--', label='rate bound')
    ax.plot(ns, errors[0] * np.sqrt(ns[0] / ns), ':', label='N^(-1/2)')
    ax.set_xscale('log')
    ax.set_yscale('log')
    ax.set_xlabel('N')
    ax.set_ylabel('error')
    ax.legend()
    fig.tight_layout()

    if len(argv) > 2:
        fig.savefig(argv[2], dpi=150)
    else:
        plt.show()
    return 0


if __name__ == '__main__':
    sys.exit(main(sys.argv))
