"""
Absorbed Kernels
================

One-step transition kernels of Markov chains on E with a cemetery state.

A kernel answers a single question: starting from a live state, where is
the chain one step later? The answer is either ``Alive(state)`` or
``ABSORBED``. Every kernel must make survival possible from every
reachable state (P_x(X_1 in E) > 0); the particle engine relies on it to
terminate.

Contents:
- StepOutcome variants: Alive / ABSORBED
- AbsorbedKernel: abstract interface shared by all models
- SubstochasticMatrix: finite kernel as an S x S matrix, plus validate()
- MatrixKernel: AbsorbedKernel over a SubstochasticMatrix
- FiniteBinning: identity binning of a finite state space
"""

import logging
from abc import ABC, abstractmethod
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from qsd_particle.errors import KernelValidationError, UsageError

logger = logging.getLogger(__name__)

# Row sums up to 1 + ROW_SUM_TOLERANCE are accepted and clamped to 1
ROW_SUM_TOLERANCE = 1e-12


# ============================================================
# STEP OUTCOMES
# ============================================================

@dataclass(frozen=True, slots=True)
class Alive:
    """The chain survived the step and sits at ``state``."""
    state: object


class Absorbed:
    """The chain hit the cemetery state. Use the ``ABSORBED`` singleton."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ABSORBED"

    def __reduce__(self):
        return (Absorbed, ())


ABSORBED = Absorbed()


# ============================================================
# BINNING
# ============================================================

class Binning(ABC):
    """Maps live states to bin indices 0..n_bins-1 for empirical measures."""

    n_bins: int

    @abstractmethod
    def index(self, state) -> int:
        """Bin of ``state``; raises UsageError when the state is out of range."""

    def label(self, index: int) -> str:
        return str(index)

    def reachable(self, index: int) -> bool:
        """Whether some live state falls in bin ``index``."""
        return True


class FiniteBinning(Binning):
    """Identity binning: state i is bin i."""

    def __init__(self, size: int):
        self.n_bins = int(size)

    def index(self, state) -> int:
        i = int(state)
        if not 0 <= i < self.n_bins:
            raise UsageError(f"state {state!r} outside finite state space of size {self.n_bins}")
        return i


# ============================================================
# KERNEL INTERFACE
# ============================================================

class AbsorbedKernel(ABC):
    """
    Behavioral interface of an absorbed one-step kernel.

    Implementations are immutable after construction and draw all
    randomness from the caller's generator, so identical (state, generator
    state) pairs give identical outcomes and one kernel can be shared by
    concurrent replicas.
    """

    #: True when states are integers 0..size-1
    is_finite: bool = False

    @abstractmethod
    def sample_step(self, state, rng):
        """Return ``Alive(next_state)`` or ``ABSORBED``."""

    @abstractmethod
    def binning(self, **options) -> Binning:
        """Default binning rule for empirical measures over this state space."""

    def is_live(self, state) -> bool:
        """Whether ``state`` is a valid element of E."""
        return True


# ============================================================
# SUBSTOCHASTIC MATRICES
# ============================================================

@dataclass(frozen=True)
class Violation:
    """One reason a matrix is not a valid absorbed kernel."""
    kind: str
    row: int
    col: int = None
    message: str = ""


def validate(matrix) -> list:
    """
    Check a candidate kernel matrix.

    Accepts a SubstochasticMatrix or any nested sequence of numbers.

    Returns:
        List of Violation; empty when every entry is nonnegative and every
        row sum lies in (0, 1 + ROW_SUM_TOLERANCE].
    """
    p = matrix.p if isinstance(matrix, SubstochasticMatrix) else np.asarray(matrix, dtype=float)
    violations = []

    if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] == 0:
        return [Violation("shape", -1, message=f"matrix must be square and nonempty, got shape {p.shape}")]

    for i, row in enumerate(p):
        for j, value in enumerate(row):
            if not np.isfinite(value):
                violations.append(Violation("non_finite", i, j, f"entry [{i}][{j}] is not finite"))
            elif value < 0:
                violations.append(Violation("negative", i, j, f"entry [{i}][{j}] = {value} is negative"))
        total = float(row.sum())
        if total > 1.0 + ROW_SUM_TOLERANCE:
            violations.append(Violation("row_sum", i, message=f"row {i} sums to {total!r} > 1"))
        elif not total > 0.0:
            violations.append(Violation("zero_survival", i, message=f"row {i} has zero survival probability"))
    return violations


class SubstochasticMatrix:
    """
    Finite absorbed kernel: p[i][j] = P_i(X_1 = j), row deficit = absorption.

    Construction validates the entries and clamps row sums in
    (1, 1 + ROW_SUM_TOLERANCE] back to exactly 1.

    Raises:
        KernelValidationError: if validate() reports any violation
    """

    def __init__(self, rows):
        p = np.array(rows, dtype=float)
        violations = validate(p)
        if violations:
            raise KernelValidationError(violations)

        sums = p.sum(axis=1)
        over = sums > 1.0
        if over.any():
            p[over] /= sums[over][:, None]
            sums = p.sum(axis=1)
        p.setflags(write=False)

        self.p = p
        self.size = p.shape[0]
        self.survival = np.minimum(sums, 1.0)
        self.absorption = 1.0 - self.survival
        # Cumulative rows as plain floats; the inverse-CDF draw runs in the hot loop
        self._cdf = [tuple(float(c) for c in np.cumsum(row)) for row in p]

    def __repr__(self):
        return f"SubstochasticMatrix(size={self.size})"

    def __eq__(self, other):
        return isinstance(other, SubstochasticMatrix) and np.array_equal(self.p, other.p)

    __hash__ = None

    def is_stochastic(self) -> bool:
        return bool(np.all(self.absorption <= ROW_SUM_TOLERANCE))


def sample_step_matrix(matrix: SubstochasticMatrix, state: int, rng):
    """
    One transition from ``state`` by inverse CDF over the row.

    Consumes exactly one ``rng.random()`` draw.
    """
    if not 0 <= state < matrix.size:
        raise UsageError(f"state index {state} outside 0..{matrix.size - 1}")
    j = bisect_right(matrix._cdf[state], rng.random())
    if j >= matrix.size:
        return ABSORBED
    return Alive(j)


class MatrixKernel(AbsorbedKernel):
    """
    AbsorbedKernel over a SubstochasticMatrix.

    Survivability holds because SubstochasticMatrix refuses rows with zero
    sum.
    """

    is_finite = True

    def __init__(self, matrix: SubstochasticMatrix):
        self.matrix = matrix
        self.size = matrix.size

    def __repr__(self):
        return f"MatrixKernel({self.matrix!r})"

    def sample_step(self, state, rng):
        return sample_step_matrix(self.matrix, state, rng)

    def binning(self, **options) -> Binning:
        return FiniteBinning(self.size)

    def is_live(self, state) -> bool:
        return isinstance(state, (int, np.integer)) and 0 <= state < self.size
