"""Discretized cal BP timeline and density series.

Conventions used throughout the package:

* Grid values are stored ascending in cal BP, so index 0 is the most recent
  point. Because cal BP decreases as time elapses, "elapsing-time order" means
  walking the arrays from the last index to the first.
* Each grid point stands for a cell of width ``step`` centred on it, and the
  stored value is the density in that cell. Integrals are midpoint Riemann
  sums, ``sum(values) * step``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DomainError, EmptyInputError, GridMismatchError, ZeroMassError

CALBP_MIN = 0.0
CALBP_MAX = 50000.0


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``start_calbp + step * k`` for ``k = 0 .. count-1``.

    By default the grid must lie inside [0, 50000] cal BP; pass
    ``bounded=False`` for synthetic work outside that range.
    """

    start_calbp: float
    step: float
    count: int
    bounded: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.start_calbp) and math.isfinite(self.step)):
            raise DomainError("grid start and step must be finite")
        if self.step <= 0:
            raise DomainError(f"grid step must be > 0, got {self.step}")
        if int(self.count) != self.count or self.count < 2:
            raise DomainError(f"grid needs at least 2 points, got {self.count}")
        object.__setattr__(self, "count", int(self.count))
        if self.bounded and (self.start_calbp < CALBP_MIN or self.end_calbp > CALBP_MAX):
            raise DomainError(
                f"grid [{self.start_calbp}, {self.end_calbp}] outside "
                f"[{CALBP_MIN:g}, {CALBP_MAX:g}] cal BP"
            )

    @classmethod
    def from_range(cls, start: float, end: float, step: float = 1.0, bounded: bool = True) -> "TimeGrid":
        """Grid covering ``[start, end]`` inclusive (``end - start`` must be a multiple of step)."""
        if end <= start:
            raise DomainError("grid end must exceed start")
        n = (end - start) / step
        count = int(round(n))
        if abs(n - count) > 1e-9 * max(1.0, n):
            raise DomainError(f"range {start}..{end} is not a whole number of {step}-year steps")
        return cls(float(start), float(step), count + 1, bounded)

    @property
    def end_calbp(self) -> float:
        return self.start_calbp + self.step * (self.count - 1)

    @property
    def values(self) -> np.ndarray:
        return self.start_calbp + self.step * np.arange(self.count, dtype=float)

    def index_of(self, t: float) -> int:
        """Index of the grid point equal to ``t`` (tolerates rounding noise)."""
        k = (t - self.start_calbp) / self.step
        idx = int(round(k))
        if abs(k - idx) > 1e-6 or not 0 <= idx < self.count:
            raise DomainError(f"{t} is not a point of {self}")
        return idx

    def shifted(self, delta: float) -> "TimeGrid":
        return TimeGrid(self.start_calbp + delta, self.step, self.count, self.bounded)


@dataclass(frozen=True, eq=False)
class DensitySeries:
    """Non-negative densities on a :class:`TimeGrid` (per-year units).

    ``values`` is copied and frozen on construction. ``meta`` carries free-form
    bookkeeping (warnings, parameter choices) and does not take part in any
    arithmetic.
    """

    grid: TimeGrid
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.count,):
            raise DomainError(f"expected {self.grid.count} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("density values must be finite")
        if np.any(v < 0):
            raise DomainError("density values must be non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def times(self) -> np.ndarray:
        return self.grid.values

    def with_values(self, values, **meta) -> "DensitySeries":
        return DensitySeries(self.grid, values, {**self.meta, **meta})


class PointEstimates(NamedTuple):
    mean: float
    median: float
    map: float


def _require_same_grid(parts: Sequence[DensitySeries]) -> TimeGrid:
    if not parts:
        raise EmptyInputError("no density series supplied")
    grid = parts[0].grid
    for p in parts[1:]:
        if p.grid != grid:
            raise GridMismatchError(f"{p.grid} differs from {grid}")
    return grid


def exact_sum_rows(rows: np.ndarray) -> np.ndarray:
    """Correctly rounded column sums of a 2-D array.

    Each column is summed with :func:`math.fsum`, so the result does not depend
    on row order or on how the rows were produced.
    """
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2:
        raise ValueError("expected a 2-D array")
    if rows.shape[0] == 1:
        return rows[0].copy()
    out = np.zeros(rows.shape[1])
    # only columns with any nonzero entry need the slow path
    active = np.flatnonzero(np.any(rows != 0.0, axis=0))
    cols = rows[:, active].T
    out[active] = [math.fsum(c) for c in cols]
    return out


def mass(d: DensitySeries) -> float:
    return math.fsum(d.values) * d.grid.step


def normalize(d: DensitySeries) -> DensitySeries:
    m = mass(d)
    if not m > 0:
        raise ZeroMassError("cannot normalize a series with zero mass")
    return d.with_values(d.values / m, normalized=True)


def is_normalized(d: DensitySeries, tol: float = 1e-9) -> bool:
    return abs(mass(d) - 1.0) <= tol


def sum_series(parts: Sequence[DensitySeries], scale: float = 1.0) -> DensitySeries:
    """Pointwise ``scale * sum(parts)``.

    Summation is correctly rounded per grid point, hence independent of the
    order of ``parts``.
    """
    grid = _require_same_grid(list(parts))
    if not scale > 0:
        raise DomainError("scale must be > 0")
    total = exact_sum_rows(np.stack([p.values for p in parts]))
    return DensitySeries(grid, total * scale)


def quantile(d: DensitySeries, q: float) -> float:
    """Cal BP value where cumulative mass, accumulated from the oldest end, reaches ``q``.

    Mass inside the crossing cell is treated as uniform across the cell. The
    result is clamped to the oldest and youngest grid points carrying mass, so
    ``q = 0`` returns the oldest nonzero grid point and a single-cell series
    returns that cell for every ``q``.
    """
    if not 0.0 <= q <= 1.0 or math.isnan(q):
        raise DomainError(f"quantile level must lie in [0, 1], got {q}")
    step = d.grid.step
    rev = d.values[::-1] * step
    cum = np.cumsum(rev)
    total = cum[-1]
    if not total > 0:
        raise ZeroMassError("quantile of a zero-mass series")
    nz = np.flatnonzero(rev > 0)
    oldest = d.grid.start_calbp + (d.grid.count - 1 - nz[0]) * step
    youngest = d.grid.start_calbp + (d.grid.count - 1 - nz[-1]) * step
    target = q * total
    j = int(np.searchsorted(cum, target, side="left"))
    j = min(max(j, int(nz[0])), d.grid.count - 1)
    prev = cum[j - 1] if j > 0 else 0.0
    frac = 0.0 if rev[j] == 0 else min(max((target - prev) / rev[j], 0.0), 1.0)
    t_cell = d.grid.start_calbp + (d.grid.count - 1 - j) * step
    t = t_cell + 0.5 * step - frac * step
    return float(min(max(t, youngest), oldest))


def argmax_map(d: DensitySeries) -> float:
    """Grid point of maximal density; ties go to the oldest candidate."""
    v = d.values
    if not np.any(v > 0):
        raise ZeroMassError("posterior mode of a zero-mass series")
    ties = np.flatnonzero(v == v.max())
    return float(d.grid.start_calbp + ties[-1] * d.grid.step)


def point_estimates(d: DensitySeries) -> PointEstimates:
    m = mass(d)
    if not m > 0:
        raise ZeroMassError("point estimates of a zero-mass series")
    mean = math.fsum(d.times * d.values) * d.grid.step / m
    return PointEstimates(mean, quantile(d, 0.5), argmax_map(d))


def variance(d: DensitySeries) -> float:
    m = mass(d)
    mu = math.fsum(d.times * d.values) * d.grid.step / m
    return math.fsum((d.times - mu) ** 2 * d.values) * d.grid.step / m


def total_variation(d: DensitySeries) -> float:
    """Sum of absolute first differences of the density values."""
    return float(np.sum(np.abs(np.diff(d.values))))


def l1_distance(a: DensitySeries, b: DensitySeries) -> float:
    _require_same_grid([a, b])
    return math.fsum(np.abs(a.values - b.values)) * a.grid.step
