"""Grid-based Bayesian posterior over a phase on the circle [0, 2*pi).

The posterior is held as log-weights on a uniform grid so that thousands of
sequential likelihood multiplications never underflow.  Normalisation uses
the periodic trapezoid rule, which on a uniform circular grid reduces to a
plain node sum times the cell width.

The grid must stay fine enough to resolve the fastest likelihood
oscillation: a circuit of depth n modulates the likelihood at angular
frequency n, and updates enforce at least 32 grid points per period.  When
an incoming record is too deep for the current grid the posterior doubles
its resolution in place, carrying existing log-weights over by midpoint
interpolation, up to a hard memory cap.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .angles import TWO_PI, wrap, wrapped_distance
from .model import Circuit, MeasurementRecord, NoiseModel, log_binomial_coefficient

MIN_GRID_SIZE = 64
POINTS_PER_PERIOD = 32
MAX_GRID_SIZE = 1 << 22


class GridTooCoarseError(ValueError):
    """Raised when a record needs more resolution than the grid cap allows."""


class ImpossibleObservationError(ValueError):
    """Raised when an update wipes out every grid cell (all weights -inf)."""


class UndefinedMeanError(ValueError):
    """Raised when the circular mean resultant is too short to define one."""


class InsufficientResourcesError(ValueError):
    """Raised when a budget cannot pay for even one execution."""


class LossKind(enum.Enum):
    ABSOLUTE = "absolute-error"
    SQUARED = "squared-error"


@dataclass(frozen=True)
class CircularInterval:
    """Arc of the circle: all angles within ``half_width`` of ``center``."""

    center: float
    half_width: float

    def __post_init__(self):
        if not 0.0 < self.half_width <= np.pi:
            raise ValueError(f"half_width must be in (0, pi], got {self.half_width}")
        object.__setattr__(self, "center", float(wrap(self.center)))
        object.__setattr__(self, "half_width", float(self.half_width))

    def contains(self, theta) -> bool:
        return bool(np.all(wrapped_distance(theta, self.center) <= self.half_width + 1e-12))

    @property
    def lower(self) -> float:
        """Counterclockwise start of the arc (may exceed ``upper`` mod 2*pi)."""
        return float(wrap(self.center - self.half_width))

    @property
    def upper(self) -> float:
        return float(wrap(self.center + self.half_width))


@lru_cache(maxsize=16)
def _grid_angles(grid_size: int) -> np.ndarray:
    angles = np.arange(grid_size) * (TWO_PI / grid_size)
    angles.setflags(write=False)
    return angles


@lru_cache(maxsize=64)
def _grid_trig(grid_size: int, depth: int):
    arg = depth * _grid_angles(grid_size)
    cos_n = np.cos(arg)
    sin_n = np.sin(arg)
    cos_n.setflags(write=False)
    sin_n.setflags(write=False)
    return cos_n, sin_n


@lru_cache(maxsize=8)
def _log_prob_components(grid_size: int, depth: int, phase: float, alpha: float, beta: float):
    """Per-cell log p0 and log(1 - p0) for one circuit, cached.

    Gated sampling phases hammer the same circuit for tens of shots; caching
    these two vectors makes each such update a fused add instead of fresh
    transcendental passes.
    """
    cos_n, sin_n = _grid_trig(grid_size, depth)
    envelope = alpha * beta**depth
    p0 = 0.5 + 0.5 * envelope * (cos_n * math.cos(phase) - sin_n * math.sin(phase))
    np.clip(p0, 0.0, 1.0, out=p0)
    with np.errstate(divide="ignore"):
        log_p = np.log(p0)
        log_q = np.log1p(-p0)
    log_p.setflags(write=False)
    log_q.setflags(write=False)
    return log_p, log_q


@dataclass(eq=False)
class GridPosterior:
    """Posterior density on a uniform circular grid, stored in log space."""

    grid_size: int
    log_weights: np.ndarray
    normalized: bool = True
    _density: np.ndarray | None = field(default=None, repr=False)
    _cumulative: np.ndarray | None = field(default=None, repr=False)

    @property
    def cell_width(self) -> float:
        return TWO_PI / self.grid_size

    @property
    def angles(self) -> np.ndarray:
        return _grid_angles(self.grid_size)

    @property
    def density(self) -> np.ndarray:
        """Probability density at the grid nodes (integrates to 1)."""
        if self._density is None:
            shift = np.max(self.log_weights)
            if not np.isfinite(shift):
                raise ImpossibleObservationError("posterior carries no finite weight")
            w = np.exp(self.log_weights - shift)
            self._density = w / (w.sum() * self.cell_width)
        return self._density

    def clone(self) -> "GridPosterior":
        return GridPosterior(self.grid_size, self.log_weights.copy(), self.normalized)

    def _invalidate(self):
        self._density = None
        self._cumulative = None


def uniform_prior(grid_size: int = 4096) -> GridPosterior:
    """Flat prior 1/(2*pi) on a grid of at least MIN_GRID_SIZE cells."""
    if grid_size < MIN_GRID_SIZE:
        raise ValueError(f"grid_size must be >= {MIN_GRID_SIZE}, got {grid_size}")
    if grid_size > MAX_GRID_SIZE:
        raise ValueError(f"grid_size must be <= {MAX_GRID_SIZE}, got {grid_size}")
    lw = np.full(grid_size, -math.log(TWO_PI))
    return GridPosterior(grid_size, lw)


def normalize(posterior: GridPosterior) -> GridPosterior:
    """Rescale log-weights so the trapezoid integral of the density is 1."""
    shift = np.max(posterior.log_weights)
    if not np.isfinite(shift):
        raise ImpossibleObservationError(
            "cannot normalize: every grid cell has log-weight -inf"
        )
    w = np.exp(posterior.log_weights - shift)
    total = w.sum()
    posterior.log_weights -= shift + math.log(total) + math.log(posterior.cell_width)
    posterior.normalized = True
    posterior._invalidate()
    posterior._density = w / (total * posterior.cell_width)
    return posterior


def _refine_once(posterior: GridPosterior):
    """Double the grid, interpolating log-weights at the new midpoints."""
    lw = posterior.log_weights
    mid = 0.5 * (lw + np.roll(lw, -1))
    doubled = np.empty(2 * lw.size)
    doubled[0::2] = lw
    doubled[1::2] = mid
    posterior.log_weights = doubled
    posterior.grid_size = 2 * lw.size
    posterior._invalidate()


def required_grid_size(depth: int) -> int:
    return max(MIN_GRID_SIZE, POINTS_PER_PERIOD * depth)


def ensure_resolution(posterior: GridPosterior, depth: int) -> GridPosterior:
    """Grow the grid until it resolves oscillations of the given depth."""
    required = required_grid_size(depth)
    if required > MAX_GRID_SIZE:
        raise GridTooCoarseError(
            f"depth {depth} needs {required} cells, above the cap {MAX_GRID_SIZE}"
        )
    refined = False
    while posterior.grid_size < required:
        _refine_once(posterior)
        refined = True
    if refined:
        normalize(posterior)
    return posterior


def update(posterior: GridPosterior, record: MeasurementRecord, noise: NoiseModel) -> GridPosterior:
    """Multiply in the likelihood of ``record`` and renormalize, in place.

    Zero-shot records leave the posterior untouched.  If the observation is
    impossible everywhere on the grid, ImpossibleObservationError is raised
    and the posterior is left unnormalized; discard it.
    """
    if record.shots == 0:
        return posterior
    ensure_resolution(posterior, record.circuit.depth)

    log_p, log_q = _log_prob_components(
        posterior.grid_size,
        record.circuit.depth,
        record.circuit.phase,
        noise.alpha,
        noise.beta,
    )
    x = record.successes
    misses = record.shots - x
    lw = posterior.log_weights
    if record.shots == 1 and x == 1.0:
        lw += log_p
    elif record.shots == 1 and x == 0.0:
        lw += log_q
    else:
        if x > 0:
            lw += x * log_p
        if misses > 0:
            lw += misses * log_q
    # The binomial coefficient is constant in theta; normalisation removes
    # it, so it is never added here.

    shift = np.max(lw)
    if not np.isfinite(shift):
        posterior.normalized = False
        posterior._invalidate()
        raise ImpossibleObservationError(
            f"record {record} has zero likelihood at every grid cell"
        )
    w = np.exp(lw - shift)
    total = w.sum()
    lw -= shift + math.log(total) + math.log(posterior.cell_width)
    posterior.normalized = True
    posterior._invalidate()
    posterior._density = w / (total * posterior.cell_width)
    return posterior


def _cumulative_mass(posterior: GridPosterior) -> np.ndarray:
    """Trapezoid cumulative integral of the density at cell boundaries.

    Entry k is the integral from angle 0 to angle k * cell_width; the last
    entry is the full-circle mass (1 up to rounding).
    """
    if posterior._cumulative is None:
        d = posterior.density
        segments = 0.5 * (d + np.roll(d, -1)) * posterior.cell_width
        cum = np.empty(posterior.grid_size + 1)
        cum[0] = 0.0
        np.cumsum(segments, out=cum[1:])
        posterior._cumulative = cum
    return posterior._cumulative


def _mass_up_to(posterior: GridPosterior, x: float) -> float:
    """Integral of the piecewise-linear density from angle 0 to x."""
    h = posterior.cell_width
    cum = _cumulative_mass(posterior)
    d = posterior.density
    k = min(int(x / h), posterior.grid_size - 1)
    t = x / h - k
    d_lo = d[k]
    d_hi = d[(k + 1) % posterior.grid_size]
    return float(cum[k] + h * (d_lo * t + 0.5 * (d_hi - d_lo) * t * t))


def confidence(posterior: GridPosterior, interval: CircularInterval) -> float:
    """Posterior mass inside the interval, by trapezoid integration."""
    if interval.half_width >= np.pi:
        return 1.0
    total = float(_cumulative_mass(posterior)[-1])
    lo = interval.lower
    hi = interval.upper
    if lo <= hi:
        mass = _mass_up_to(posterior, hi) - _mass_up_to(posterior, lo)
    else:
        mass = total - (_mass_up_to(posterior, lo) - _mass_up_to(posterior, hi))
    return float(min(max(mass, 0.0), 1.0))


def mass_outside(posterior: GridPosterior, interval: CircularInterval) -> float:
    """Posterior mass in the complement arc, integrated directly.

    Computing the complement head-on keeps tiny tail masses accurate where
    1 - confidence(...) would lose every significant digit to cancellation.
    """
    if interval.half_width >= np.pi:
        return 0.0
    lo = interval.lower
    hi = interval.upper
    total = float(_cumulative_mass(posterior)[-1])
    if lo <= hi:
        mass = total - (_mass_up_to(posterior, hi) - _mass_up_to(posterior, lo))
    else:
        mass = _mass_up_to(posterior, lo) - _mass_up_to(posterior, hi)
    return float(min(max(mass, 0.0), 1.0))


def map_estimate(posterior: GridPosterior, within: CircularInterval | None = None) -> float:
    """Posterior mode, refined by a parabola through the peak cell.

    Ties go to the smallest grid index.  With ``within`` given, the argmax
    is restricted to cells inside that interval (falling back to the global
    argmax if the restriction holds no finite weight).
    """
    lw = posterior.log_weights
    angles = posterior.angles
    if within is not None:
        inside = wrapped_distance(angles, within.center) <= within.half_width + 1e-12
        if np.any(inside & np.isfinite(lw)):
            masked = np.where(inside, lw, -np.inf)
            k = int(np.argmax(masked))
        else:
            k = int(np.argmax(lw))
    else:
        k = int(np.argmax(lw))

    g = posterior.grid_size
    left = lw[(k - 1) % g]
    center = lw[k]
    right = lw[(k + 1) % g]
    offset = 0.0
    if np.isfinite(left) and np.isfinite(center) and np.isfinite(right):
        curvature = left - 2.0 * center + right
        if curvature < 0.0:
            offset = 0.5 * (left - right) / curvature
            offset = float(np.clip(offset, -0.5, 0.5))
    return float(wrap(angles[k] + offset * posterior.cell_width))


def circular_mean_estimate(posterior: GridPosterior) -> float:
    """Argument of the posterior's resultant vector E[exp(i theta)]."""
    d = posterior.density
    angles = posterior.angles
    h = posterior.cell_width
    re = float(np.dot(d, np.cos(angles))) * h
    im = float(np.dot(d, np.sin(angles))) * h
    if math.hypot(re, im) <= 1e-12:
        raise UndefinedMeanError(
            f"resultant length {math.hypot(re, im):.3e} leaves the circular mean undefined"
        )
    return float(wrap(math.atan2(im, re)))


def expected_loss(posterior: GridPosterior, estimate: float, kind: LossKind) -> float:
    """Posterior expectation of the wrapped error of ``estimate``."""
    d = wrapped_distance(posterior.angles, estimate)
    if kind is LossKind.SQUARED:
        d = d * d
    return float(max(np.dot(posterior.density, d) * posterior.cell_width, 0.0))


def predict_outcome(posterior: GridPosterior, circuit: Circuit, shots: int, noise: NoiseModel) -> float:
    """Expected bright-outcome count: shots times the posterior mean of p0."""
    if shots < 0:
        raise ValueError(f"shots must be >= 0, got {shots}")
    ensure_resolution(posterior, circuit.depth)
    cos_n, sin_n = _grid_trig(posterior.grid_size, circuit.depth)
    envelope = noise.contrast(circuit.depth)
    p0 = 0.5 + 0.5 * envelope * (
        cos_n * math.cos(circuit.phase) - sin_n * math.sin(circuit.phase)
    )
    mean_p = float(np.dot(posterior.density, p0)) * posterior.cell_width
    return float(np.clip(shots * mean_p, 0.0, shots))


def predict_loss(
    posterior: GridPosterior,
    circuit: Circuit,
    resources_left: int,
    noise: NoiseModel,
    kind: LossKind,
) -> float:
    """Expected loss after hypothetically spending the budget on ``circuit``.

    The whole remaining budget is converted into shots at this depth, the
    expected (generally fractional) outcome is folded into a cloned
    posterior, and the loss of the updated mode is reported.
    """
    shots = int(resources_left // circuit.depth)
    if shots < 1:
        raise InsufficientResourcesError(
            f"budget {resources_left} cannot pay for one shot at depth {circuit.depth}"
        )
    expected_count = predict_outcome(posterior, circuit, shots, noise)
    hypothetical = posterior.clone()
    update(hypothetical, MeasurementRecord(circuit, shots, expected_count), noise)
    return expected_loss(hypothetical, map_estimate(hypothetical), kind)
