"""
Exact Oracles
=============

Reference computations on finite substochastic kernels. These are the
ground truth the particle estimates are checked against.

All functions iterate the conditioned evolution

    mu -> mu P / |mu P|_1

one left multiplication at a time, renormalising after each step so that
long horizons never underflow.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from qsd_particle.absorbed_kernel import SubstochasticMatrix
from qsd_particle.errors import ConvergenceError, NullConditioningError, UsageError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 10 ** 6

# Probability vectors must sum to 1 within this tolerance
DISTRIBUTION_TOLERANCE = 1e-9

# TV distances below this are indistinguishable from rounding noise
MIXING_FLOOR = 1e-13


# ============================================================
# DISTRIBUTIONS
# ============================================================

def as_distribution(weights, size: int = None) -> np.ndarray:
    """
    Validate and copy a probability vector.

    Raises:
        UsageError: on negative weights, wrong length or total mass != 1
    """
    w = np.array(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise UsageError(f"distribution must be a nonempty vector, got shape {w.shape}")
    if size is not None and w.size != size:
        raise UsageError(f"distribution has length {w.size}, expected {size}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise UsageError("distribution weights must be finite and nonnegative")
    if abs(w.sum() - 1.0) > DISTRIBUTION_TOLERANCE:
        raise UsageError(f"distribution weights sum to {w.sum()!r}, expected 1")
    return w


def dirac(state: int, size: int) -> np.ndarray:
    """Point mass at ``state``."""
    if not 0 <= state < size:
        raise UsageError(f"state {state} outside 0..{size - 1}")
    w = np.zeros(size)
    w[state] = 1.0
    return w


def uniform(size: int) -> np.ndarray:
    return np.full(size, 1.0 / size)


def _tv(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(p - q).sum())


# ============================================================
# CONDITIONAL LAWS
# ============================================================

def conditional_distribution_exact(matrix: SubstochasticMatrix, mu0, n: int) -> np.ndarray:
    """
    Law of X_n given survival up to n, started from ``mu0``.

    Args:
        matrix: Valid substochastic kernel
        mu0: Initial distribution on the S live states
        n: Number of steps (>= 0)

    Returns:
        (mu0 P^n) / |mu0 P^n|_1

    Raises:
        NullConditioningError: if the surviving mass vanishes
    """
    if n < 0:
        raise UsageError(f"step count must be nonnegative, got {n}")
    mu = as_distribution(mu0, matrix.size)
    for step in range(n):
        mu = mu @ matrix.p
        mass = mu.sum()
        if not mass > 0.0:
            raise NullConditioningError(f"conditioning on a null event: survival mass is 0 at step {step + 1}")
        mu /= mass
    return mu


def survival_probability_exact(matrix: SubstochasticMatrix, mu0, n: int) -> float:
    """
    P_mu0(n < tau), the probability of surviving ``n`` steps.

    Accumulated as a sum of log mass ratios so the result underflows
    gracefully to 0.0 rather than poisoning intermediate vectors.
    """
    if n < 0:
        raise UsageError(f"step count must be nonnegative, got {n}")
    mu = as_distribution(mu0, matrix.size)
    log_mass = 0.0
    for _ in range(n):
        mu = mu @ matrix.p
        mass = mu.sum()
        if not mass > 0.0:
            return 0.0
        log_mass += math.log(mass)
        mu /= mass
    return math.exp(log_mass)


def conditional_path(matrix: SubstochasticMatrix, mu0, horizon: int) -> np.ndarray:
    """
    Conditional laws for every n = 0..horizon, stacked as rows.

    Same recursion as conditional_distribution_exact; used by the
    uniform-in-time experiment to avoid recomputing prefixes.
    """
    mu = as_distribution(mu0, matrix.size)
    path = np.empty((horizon + 1, matrix.size))
    path[0] = mu
    for n in range(1, horizon + 1):
        mu = mu @ matrix.p
        mass = mu.sum()
        if not mass > 0.0:
            raise NullConditioningError(f"conditioning on a null event: survival mass is 0 at step {n}")
        mu /= mass
        path[n] = mu
    return path


# ============================================================
# QUASI-STATIONARY DISTRIBUTION
# ============================================================

@dataclass
class QsdResult:
    """Fixed point of the conditioned evolution and its decay rate."""
    qsd: np.ndarray
    eigenvalue: float
    lambda0: float
    iterations: int
    residual: float

    def to_dict(self) -> dict:
        return {
            "qsd": self.qsd.tolist(),
            "eigenvalue": self.eigenvalue,
            "lambda0": self.lambda0,
            "iterations": self.iterations,
            "residual": self.residual,
        }


def qsd_exact(matrix: SubstochasticMatrix, tol: float = DEFAULT_TOL,
              max_iter: int = DEFAULT_MAX_ITER) -> QsdResult:
    """
    Quasi-stationary distribution by power iteration from the uniform law.

    Iterates nu <- nu P / |nu P|_1 until the TV change between successive
    iterates drops below ``tol``. The Perron eigenvalue is |nu P|_1 at the
    last iterate and lambda0 = -ln(eigenvalue).

    Raises:
        ConvergenceError: after ``max_iter`` iterations; periodic or
            reducible kernels end up here
    """
    if tol <= 0 or max_iter < 1:
        raise UsageError("tol must be positive and max_iter at least 1")

    nu = uniform(matrix.size)
    residual = math.inf
    for iteration in range(1, max_iter + 1):
        nxt = nu @ matrix.p
        mass = float(nxt.sum())
        if not mass > 0.0:
            raise NullConditioningError("conditioning on a null event during power iteration")
        nxt /= mass
        residual = _tv(nxt, nu)
        nu = nxt
        if residual < tol:
            eigenvalue = float((nu @ matrix.p).sum())
            lambda0 = 0.0 if eigenvalue >= 1.0 else -math.log(eigenvalue)
            logger.debug("QSD converged after %d iterations (eigenvalue %.15g)", iteration, eigenvalue)
            return QsdResult(nu, eigenvalue, lambda0, iteration, residual)

    raise ConvergenceError("power iteration did not converge; kernel may be periodic or reducible",
                           residual, max_iter)


# ============================================================
# MIXING RATE
# ============================================================

@dataclass
class MixingReport:
    """
    Estimated exponential rate of conditional mixing.

    ``distances[n]`` is the largest TV distance between the n-step
    conditional laws of two Dirac starts. ``flag`` is None for a clean fit,
    otherwise one of ``single_state``, ``underflow``, ``no_decay``.
    """
    gamma: float
    distances: list
    fit_range: tuple = None
    flag: str = None
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.flag is None

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma if math.isfinite(self.gamma) else "inf",
            "flag": self.flag,
            "fit_range": list(self.fit_range) if self.fit_range else None,
            "distances": self.distances,
        }


# Slopes below this count as "does not decay"
NO_DECAY_SLOPE = 1e-3


def _max_pairwise_tv(rows: np.ndarray) -> float:
    # TV between every pair of rows; S is small for oracle-checked models
    diffs = np.abs(rows[:, None, :] - rows[None, :, :]).sum(axis=2)
    return 0.5 * float(diffs.max())


def estimate_mixing_rate(matrix: SubstochasticMatrix, horizon: int) -> MixingReport:
    """
    Fit gamma in d(n) ~ C exp(-gamma n).

    d(n) is computed for n = 0..horizon by evolving all Dirac starts at
    once. The slope of -ln d(n) is fitted by least squares on the tail half
    n >= horizon/2. If d(n) reaches the rounding floor before then, the fit
    uses the resolvable prefix instead and the report is flagged.
    """
    if horizon < 2:
        raise UsageError(f"horizon must be at least 2, got {horizon}")

    size = matrix.size
    if size == 1:
        return MixingReport(math.inf, [0.0] * (horizon + 1), flag="single_state")

    rows = np.eye(size)
    distances = [_max_pairwise_tv(rows)]
    for _ in range(horizon):
        rows = rows @ matrix.p
        rows /= rows.sum(axis=1, keepdims=True)
        distances.append(_max_pairwise_tv(rows))

    d = np.array(distances)
    below = np.flatnonzero(d <= MIXING_FLOOR)
    # last n whose distance is still above the rounding floor
    last = int(below[0]) - 1 if below.size else horizon
    if last > horizon // 2:
        start, stop, flag = horizon // 2, last, None
    else:
        start, stop, flag = 0, last, "underflow"

    if stop - start < 1:
        # d(1) already at the floor: the conditioned chain mixes in one step
        return MixingReport(math.inf, distances, (0, max(stop, 0)), "underflow")

    ns = np.arange(start, stop + 1)
    slope = float(np.polyfit(ns, -np.log(d[start:stop + 1]), 1)[0])
    if slope < NO_DECAY_SLOPE:
        flag = "no_decay"
    if flag:
        logger.info("mixing-rate fit flagged %s (gamma=%.4g over n=%d..%d)", flag, slope, start, stop)
    return MixingReport(slope, distances, (start, stop), flag)
