"""
Model Zoo
=========

Concrete absorbed kernels.

Models:
- birth_death: finite birth-death chain with per-state killing; exact
  oracles apply
- neutron: neutron transport in a convex planar domain, killed on exit
- diffusion: dX = dW + dt / (beta X^(beta-1)) on (0, 2], killed at 0,
  reflected at 2

Also builds a Model (kernel + binning + initial law) from a validated
model document; see utils/json_store.py for the document schema.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from qsd_particle.absorbed_kernel import (
    ABSORBED, AbsorbedKernel, Alive, Binning, MatrixKernel, SubstochasticMatrix,
)
from qsd_particle.errors import ConfigError, UsageError
from qsd_particle.oracle import as_distribution, dirac

logger = logging.getLogger(__name__)

DEFAULT_RATE = 1.0
DEFAULT_GRID = 20
DEFAULT_SUBSTEPS = 100
DIFFUSION_UPPER = 2.0
UNIT_NORM_TOLERANCE = 1e-12
TWO_PI = 2.0 * math.pi


# ============================================================
# BIRTH-DEATH CHAINS
# ============================================================

@dataclass(frozen=True)
class BirthDeathSpec:
    """Per-state birth, death and kill probabilities."""
    birth: tuple
    death: tuple
    kill: tuple

    @property
    def size(self) -> int:
        return len(self.kill)


def birth_death_matrix(spec: BirthDeathSpec) -> SubstochasticMatrix:
    """
    Tridiagonal kernel: up with birth[i], down with death[i], killed with
    kill[i], otherwise stay.

    Raises:
        UsageError: on inconsistent lengths, kill[i] >= 1, a nonzero
            death[0] or birth[S-1], or birth+death+kill > 1 in some row
    """
    size = spec.size
    if size == 0 or len(spec.birth) != size or len(spec.death) != size:
        raise UsageError("birth, death and kill must be nonempty and of equal length")
    if spec.death[0] != 0 or spec.birth[size - 1] != 0:
        raise UsageError("boundary convention violated: death[0] and birth[S-1] must be 0")

    p = np.zeros((size, size))
    for i in range(size):
        b, d, k = spec.birth[i], spec.death[i], spec.kill[i]
        if min(b, d, k) < 0:
            raise UsageError(f"state {i}: probabilities must be nonnegative")
        if k >= 1:
            raise UsageError(f"state {i}: kill probability {k} leaves no chance of survival")
        stay = 1.0 - b - d - k
        if stay < -1e-12:
            raise UsageError(f"state {i}: birth + death + kill = {b + d + k} exceeds 1")
        p[i, i] = max(stay, 0.0)
        if i + 1 < size:
            p[i, i + 1] = b
        if i > 0:
            p[i, i - 1] = d
    return SubstochasticMatrix(p)


# ============================================================
# PLANAR GEOMETRY
# ============================================================

def _dot(a, b) -> float:
    return a[0] * b[0] + a[1] * b[1]


def _cross(a, b) -> float:
    return a[0] * b[1] - a[1] * b[0]


def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1])


class Disk:
    """Open disk of the given radius centered at the origin."""

    def __init__(self, radius: float):
        if not radius > 0:
            raise UsageError(f"disk radius must be positive, got {radius}")
        self.radius = float(radius)
        self._r2 = self.radius * self.radius

    def __repr__(self):
        return f"Disk(radius={self.radius})"

    def contains(self, x) -> bool:
        return _dot(x, x) < self._r2

    def exit_time(self, x, v) -> float:
        """Travel time to the circle along unit direction v: root of |x + t v| = r."""
        b = _dot(x, v)
        c = _dot(x, x) - self._r2
        return -b + math.sqrt(max(b * b - c, 0.0))

    def bounding_box(self):
        r = self.radius
        return (-r, -r, r, r)

    def meets_box(self, box) -> bool:
        """Whether the open disk intersects the closed box (x0, y0, x1, y1)."""
        cx = min(max(0.0, box[0]), box[2])
        cy = min(max(0.0, box[1]), box[3])
        return cx * cx + cy * cy < self._r2


class ConvexPolygon:
    """
    Open strictly convex polygon, vertices listed counterclockwise.

    Each edge a -> b contributes the half-plane n . y < n . a with outward
    normal n, so the exit time is the smallest positive crossing over the
    edges the ray points out of.
    """

    def __init__(self, vertices):
        pts = [(float(x), float(y)) for x, y in vertices]
        if len(pts) < 3:
            raise UsageError("a polygon needs at least 3 vertices")
        count = len(pts)
        for k in range(count):
            a, b, c = pts[k], pts[(k + 1) % count], pts[(k + 2) % count]
            if _cross(_sub(b, a), _sub(c, b)) <= 0:
                raise UsageError(
                    f"polygon is not strictly convex and counterclockwise at vertex {(k + 1) % count}")

        self.vertices = tuple(pts)
        self._normals = []
        self._offsets = []
        for k in range(count):
            a, b = pts[k], pts[(k + 1) % count]
            dx, dy = b[0] - a[0], b[1] - a[1]
            length = math.hypot(dx, dy)
            n = (dy / length, -dx / length)
            self._normals.append(n)
            self._offsets.append(_dot(n, a))

    def __repr__(self):
        return f"ConvexPolygon({len(self.vertices)} vertices)"

    def contains(self, x) -> bool:
        return all(_dot(n, x) < off for n, off in zip(self._normals, self._offsets))

    def exit_time(self, x, v) -> float:
        best = math.inf
        for n, off in zip(self._normals, self._offsets):
            speed = _dot(n, v)
            if speed > 0:
                t = (off - _dot(n, x)) / speed
                if t < best:
                    best = t
        return best

    def bounding_box(self):
        xs = [p[0] for p in self.vertices]
        ys = [p[1] for p in self.vertices]
        return (min(xs), min(ys), max(xs), max(ys))

    def meets_box(self, box) -> bool:
        """Separating-axis test between the open polygon and a closed box."""
        corners = [(box[0], box[1]), (box[2], box[1]), (box[2], box[3]), (box[0], box[3])]
        axes = list(self._normals) + [(1.0, 0.0), (0.0, 1.0)]
        for axis in axes:
            poly = [_dot(axis, p) for p in self.vertices]
            rect = [_dot(axis, c) for c in corners]
            if max(rect) <= min(poly) or max(poly) <= min(rect):
                return False
        return True


# ============================================================
# NEUTRON TRANSPORT
# ============================================================

@dataclass(frozen=True)
class NeutronState:
    """Position in D and unit velocity."""
    x: tuple
    v: tuple

    def __post_init__(self):
        if abs(math.hypot(*self.v) - 1.0) > UNIT_NORM_TOLERANCE:
            raise UsageError(f"velocity {self.v} is not a unit vector")


def neutron_path(state: NeutronState, domain, rate: float, rng):
    """
    Simulate one unit of time of the transport process exactly.

    Straight unit-speed motion; the direction is redrawn uniformly on the
    circle at the epochs of a Poisson clock of intensity ``rate``. Reaching
    the boundary, including exactly at the end of the unit of time, kills
    the particle.

    Draw order per segment: one exponential waiting time, then one uniform
    angle if the clock rings before the unit of time is over.

    Returns:
        (outcome, segments) where segments are the straight lengths travelled
    """
    if not rate > 0:
        raise UsageError(f"jump rate must be positive, got {rate}")
    if not domain.contains(state.x):
        raise UsageError(f"position {state.x} is not inside {domain!r}")

    x, v = state.x, state.v
    remaining = 1.0
    segments = []
    scale = 1.0 / rate
    while True:
        wait = rng.exponential(scale)
        seg = min(wait, remaining)
        hit = domain.exit_time(x, v)
        if hit <= seg:
            segments.append(hit)
            return ABSORBED, segments
        x = (x[0] + seg * v[0], x[1] + seg * v[1])
        segments.append(seg)
        if not domain.contains(x):
            # rounding put the end point on the boundary
            return ABSORBED, segments
        if wait >= remaining:
            return Alive(NeutronState(x, v)), segments
        remaining -= seg
        theta = TWO_PI * rng.random()
        v = (math.cos(theta), math.sin(theta))


def neutron_step(state: NeutronState, domain, rate: float, rng):
    """One unit of time of the transport process: Alive(state) or ABSORBED."""
    return neutron_path(state, domain, rate, rng)[0]


class NeutronKernel(AbsorbedKernel):
    """
    Transport process killed on leaving a convex domain.

    From any interior point the particle survives one unit of time with
    positive probability: convexity gives a straight path of length < 1 to
    a neighbourhood of the centre and the Poisson clock can keep it there.
    """

    def __init__(self, domain, rate: float = DEFAULT_RATE):
        if not rate > 0:
            raise UsageError(f"jump rate must be positive, got {rate}")
        self.domain = domain
        self.rate = float(rate)

    def __repr__(self):
        return f"NeutronKernel({self.domain!r}, rate={self.rate})"

    def sample_step(self, state, rng):
        return neutron_path(state, self.domain, self.rate, rng)[0]

    def binning(self, grid: int = DEFAULT_GRID, octants: bool = False, **options) -> Binning:
        return neutron_binning(self.domain, grid, octants)

    def is_live(self, state) -> bool:
        return isinstance(state, NeutronState) and self.domain.contains(state.x)


class NeutronBinning(Binning):
    """
    grid_n x grid_n uniform grid over the domain's bounding box.

    Cells are numbered row-major (row = y index). With ``octants`` every
    cell is split into 8 velocity-direction sectors.
    """

    def __init__(self, domain, grid_n: int, octants: bool = False):
        if grid_n < 2:
            raise UsageError(f"grid_n must be at least 2, got {grid_n}")
        self.grid_n = grid_n
        self.octants = octants
        self.domain = domain
        self.box = domain.bounding_box()
        self.n_bins = grid_n * grid_n * (8 if octants else 1)

    def _axis(self, value, lo, hi) -> int:
        if not lo <= value <= hi:
            raise UsageError(f"coordinate {value} outside bounding box [{lo}, {hi}]")
        return min(int((value - lo) / (hi - lo) * self.grid_n), self.grid_n - 1)

    def cell(self, x) -> tuple:
        x0, y0, x1, y1 = self.box
        return self._axis(x[1], y0, y1), self._axis(x[0], x0, x1)

    def index(self, state) -> int:
        row, col = self.cell(state.x)
        cell = row * self.grid_n + col
        if not self.octants:
            return cell
        angle = math.atan2(state.v[1], state.v[0]) % TWO_PI
        return cell * 8 + min(int(angle / (TWO_PI / 8)), 7)

    def label(self, index: int) -> str:
        if self.octants:
            cell, octant = divmod(index, 8)
            row, col = divmod(cell, self.grid_n)
            return f"{row}:{col}:{octant}"
        row, col = divmod(index, self.grid_n)
        return f"{row}:{col}"

    def cell_box(self, index: int) -> tuple:
        """(x0, y0, x1, y1) of the spatial cell holding bin ``index``."""
        cell = index // 8 if self.octants else index
        row, col = divmod(cell, self.grid_n)
        x0, y0, x1, y1 = self.box
        w, h = (x1 - x0) / self.grid_n, (y1 - y0) / self.grid_n
        return (x0 + col * w, y0 + row * h, x0 + (col + 1) * w, y0 + (row + 1) * h)

    def reachable(self, index: int) -> bool:
        return self.domain.meets_box(self.cell_box(index))


def neutron_binning(domain, grid_n: int = DEFAULT_GRID, octants: bool = False) -> NeutronBinning:
    """Spatial binning rule for transport states (velocity ignored unless ``octants``)."""
    return NeutronBinning(domain, grid_n, octants)


# ============================================================
# DEGENERATE DIFFUSION
# ============================================================

@dataclass(frozen=True)
class DiffusionSpec:
    """
    dX = dW + dt / (beta X^(beta-1)) on (0, 2], Euler-Maruyama with
    ``substeps`` steps per unit time. ``noise_scale`` multiplies the
    Brownian increments; 0 gives the deterministic drift (test hook).
    """
    beta: float
    substeps: int = DEFAULT_SUBSTEPS
    noise_scale: float = 1.0

    def __post_init__(self):
        if not self.beta > 2:
            raise UsageError(f"beta must exceed 2, got {self.beta}")
        if self.substeps < 1:
            raise UsageError(f"substeps must be positive, got {self.substeps}")


def fold(x: float):
    """
    Reflect ``x`` into (0, 2] by repeated x -> 4 - x.

    Returns None when a fold lands at or below 0 (absorbed).
    """
    if x <= 0:
        return None
    while x > DIFFUSION_UPPER:
        x = 2.0 * DIFFUSION_UPPER - x
        if x <= 0:
            return None
    return x


def diffusion_step(x: float, spec: DiffusionSpec, rng):
    """
    One unit of time: ``spec.substeps`` Euler-Maruyama substeps.

    Killing is checked after every substep by sign (no bridge correction).
    Always consumes exactly ``substeps`` standard normal draws.
    """
    if not 0 < x <= DIFFUSION_UPPER:
        raise UsageError(f"diffusion state {x} outside (0, 2]")
    h = 1.0 / spec.substeps
    sd = math.sqrt(h) * spec.noise_scale
    drift = h / spec.beta
    power = spec.beta - 1.0
    for z in rng.standard_normal(spec.substeps):
        x = fold(x + drift / x ** power + sd * float(z))
        if x is None:
            return ABSORBED
    return Alive(x)


class DiffusionKernel(AbsorbedKernel):
    """
    The degenerate diffusion killed at 0.

    Survivability: from any x in (0, 2] the Gaussian increments reach a
    neighbourhood of 1 and stay away from 0 with positive probability.
    """

    def __init__(self, spec: DiffusionSpec):
        self.spec = spec

    def __repr__(self):
        return f"DiffusionKernel({self.spec!r})"

    def sample_step(self, state, rng):
        return diffusion_step(state, self.spec, rng)

    def binning(self, grid: int = DEFAULT_GRID, **options) -> Binning:
        return IntervalBinning(0.0, DIFFUSION_UPPER, grid)

    def is_live(self, state) -> bool:
        return isinstance(state, float) and 0 < state <= DIFFUSION_UPPER


class IntervalBinning(Binning):
    """``grid_n`` equal bins over (lo, hi]."""

    def __init__(self, lo: float, hi: float, grid_n: int):
        if grid_n < 1:
            raise UsageError(f"grid_n must be positive, got {grid_n}")
        self.lo, self.hi, self.grid_n = lo, hi, grid_n
        self.n_bins = grid_n

    def index(self, state) -> int:
        if not self.lo < state <= self.hi:
            raise UsageError(f"state {state} outside ({self.lo}, {self.hi}]")
        return min(int((state - self.lo) / (self.hi - self.lo) * self.grid_n), self.grid_n - 1)


# ============================================================
# MODELS FROM DOCUMENTS
# ============================================================

@dataclass
class Model:
    """A kernel plus everything the runner needs to simulate it."""
    kind: str
    kernel: AbsorbedKernel
    initial: object
    matrix: SubstochasticMatrix = None
    options: dict = field(default_factory=dict)

    @property
    def is_finite(self) -> bool:
        return self.matrix is not None

    def binning(self, **overrides) -> Binning:
        options = {**self.options, **{k: v for k, v in overrides.items() if v is not None}}
        return self.kernel.binning(**options)


def _finite_initial(doc: dict, size: int) -> np.ndarray:
    initial = doc.get("initial")
    if initial is None:
        return dirac(0, size)
    if isinstance(initial, int):
        if not 0 <= initial < size:
            raise ConfigError(f"initial state {initial} outside 0..{size - 1}", field="initial")
        return dirac(initial, size)
    try:
        return as_distribution(initial, size)
    except UsageError as e:
        raise ConfigError(str(e), field="initial") from e


def build_model(doc: dict) -> Model:
    """
    Build a Model from a schema-checked model document.

    Raises:
        ConfigError: on semantically invalid parameters
        KernelValidationError: when a matrix violates survivability
    """
    kind = doc["type"]

    if kind == "matrix":
        matrix = SubstochasticMatrix(doc["rows"])
        return Model(kind, MatrixKernel(matrix), _finite_initial(doc, matrix.size), matrix)

    if kind == "birth_death":
        spec = BirthDeathSpec(tuple(doc["birth"]), tuple(doc["death"]), tuple(doc["kill"]))
        try:
            matrix = birth_death_matrix(spec)
        except UsageError as e:
            raise ConfigError(str(e), field="birth/death/kill") from e
        return Model(kind, MatrixKernel(matrix), _finite_initial(doc, matrix.size), matrix)

    if kind == "neutron":
        dom = doc.get("domain", {"shape": "disk", "radius": 1.0})
        try:
            if dom["shape"] == "disk":
                domain = Disk(dom.get("radius", 1.0))
            else:
                domain = ConvexPolygon(dom["vertices"])
            init = doc.get("initial", {})
            state = NeutronState(tuple(init.get("x", (0.0, 0.0))), tuple(init.get("v", (1.0, 0.0))))
            kernel = NeutronKernel(domain, doc.get("rate", DEFAULT_RATE))
        except UsageError as e:
            raise ConfigError(str(e), field="domain/initial/rate") from e
        if not domain.contains(state.x):
            raise ConfigError(f"initial position {state.x} is not inside the domain", field="initial.x")
        options = {"grid": doc.get("grid", DEFAULT_GRID), "octants": doc.get("octants", False)}
        return Model(kind, kernel, state, options=options)

    if kind == "diffusion":
        try:
            spec = DiffusionSpec(float(doc["beta"]), int(doc.get("substeps", DEFAULT_SUBSTEPS)))
        except UsageError as e:
            raise ConfigError(str(e), field="beta/substeps") from e
        x0 = float(doc.get("initial", 1.0))
        if not 0 < x0 <= DIFFUSION_UPPER:
            raise ConfigError(f"initial state {x0} outside (0, 2]", field="initial")
        return Model(kind, DiffusionKernel(spec), x0, options={"grid": doc.get("grid", DEFAULT_GRID)})

    raise ConfigError(f"unknown model type {kind!r}", field="type")
