"""Human occupation index: area-scaled occupation windows averaged over guesses.

Each dated site contributes a rectangular window of height ``area / 100``
centred on its (sampled) timestamp and spanning ``2h`` years. A grid cell is
inside the window ``[tau + h, tau - h)`` (cal BP) when its midpoint satisfies
``tau - h < t <= tau + h``: the old edge is inclusive, the recent edge is not.
With ``tau`` on the grid and ``h`` a multiple of the step, a window covers
exactly ``2h / step`` cells and so carries mass ``(area / 100) * 2h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .calibration import CalibrationCurve, DateRecord, calibrate_many
from .errors import AlignmentError, CalibrationFailure, DomainError, EmptyInputError
from .grid import DensitySeries, TimeGrid
from .montecarlo import GuessVector, McConfig, draw_guesses

DEFAULT_HALF_WIDTH = 50.0


def conversion_factor(area: float) -> float:
    """Plateau height for a site of ``area`` square metres."""
    return area / 100.0


@dataclass(frozen=True)
class SiteRecord:
    date: DateRecord
    site_id: str
    area: float

    def __post_init__(self):
        if not (math.isfinite(self.area) and self.area > 0):
            raise DomainError(f"{self.site_id}: site area must be > 0")


@dataclass(frozen=True)
class OccupationWindow:
    center: float
    half_width: float = DEFAULT_HALF_WIDTH
    area: float = 100.0

    def __post_init__(self):
        if not self.half_width > 0:
            raise DomainError("window half-width must be > 0")
        if not self.area > 0:
            raise DomainError("site area must be > 0")

    @property
    def bounds(self) -> tuple[float, float]:
        """``(older, more recent)`` edges in cal BP."""
        return self.center + self.half_width, self.center - self.half_width

    @property
    def duration(self) -> float:
        return 2.0 * self.half_width


def _window_slices(centers, h, grid: TimeGrid):
    t = grid.values
    lo = np.searchsorted(t, np.asarray(centers) - h, side="right")
    hi = np.searchsorted(t, np.asarray(centers) + h, side="right")
    return lo, hi


def _truncated(center, h, grid: TimeGrid) -> bool:
    half = 0.5 * grid.step
    return center + h > grid.end_calbp + half or center - h < grid.start_calbp - half


def occupation_window(w: OccupationWindow, grid: TimeGrid) -> DensitySeries:
    lo, hi = _window_slices(w.center, w.half_width, grid)
    values = np.zeros(grid.count)
    values[lo:hi] = conversion_factor(w.area)
    warnings = []
    if _truncated(w.center, w.half_width, grid):
        warnings.append(f"occupation window at {w.center} extends past the grid")
    return DensitySeries(grid, values, {"warnings": warnings})


def hoid(guess: GuessVector, sites: Sequence[SiteRecord], h: float, grid: TimeGrid) -> DensitySeries:
    """Unscaled sum of every site's occupation window for one guess."""
    centers = np.asarray(guess.timestamps, dtype=float)
    if len(centers) != len(sites):
        raise AlignmentError(f"{len(centers)} timestamps for {len(sites)} sites")
    lo, hi = _window_slices(centers, h, grid)
    acc = np.zeros(grid.count)
    warnings = []
    for i, site in enumerate(sites):
        acc[lo[i]:hi[i]] += conversion_factor(site.area)
        if _truncated(centers[i], h, grid):
            warnings.append(f"{site.site_id}: occupation window extends past the grid")
    return DensitySeries(grid, acc, {"method": "hoid", "half_width": h, "warnings": warnings})


@dataclass(frozen=True, eq=False)
class ChoidResult:
    series: DensitySeries
    guesses: int
    half_width: float
    site_masses: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)


def choid_from_posteriors(
    posteriors: Sequence[DensitySeries],
    sites: Sequence[SiteRecord],
    grid: TimeGrid,
    cfg: McConfig,
    h: float = DEFAULT_HALF_WIDTH,
    workers: int = 1,
) -> ChoidResult:
    """Average HOID over ``cfg.guesses`` joint-posterior draws.

    Per site, window coverage is counted exactly in integers across all
    guesses and only then scaled, so the total mass is the same for every G.
    """
    if len(posteriors) != len(sites):
        raise AlignmentError(f"{len(posteriors)} posteriors for {len(sites)} sites")
    if not sites:
        raise EmptyInputError("no sites")
    if not h > 0:
        raise DomainError("window half-width must be > 0")
    idx = draw_guesses(posteriors, cfg, workers)
    t = grid.values
    G = cfg.guesses
    acc = np.zeros(grid.count)
    site_masses = {}
    warnings = []
    for i, site in enumerate(sites):
        centers = t[idx[:, i]]
        lo, hi = _window_slices(centers, h, grid)
        diff = np.zeros(grid.count + 1, dtype=np.int64)
        np.add.at(diff, lo, 1)
        np.add.at(diff, hi, -1)
        cover = np.cumsum(diff[:-1])
        acc += conversion_factor(site.area) * (cover / G)
        site_masses[site.site_id if site.site_id not in site_masses else f"{site.site_id}#{i}"] = (
            conversion_factor(site.area) * math.fsum(cover) / G * grid.step
        )
        if any(_truncated(c, h, grid) for c in (centers.min(), centers.max())):
            warnings.append(f"{site.site_id}: some occupation windows extend past the grid")
    meta = {
        "method": "hoi",
        "half_width": h,
        "seed": cfg.seed,
        "guesses": G,
        "stream_policy": cfg.stream_policy,
        "warnings": warnings,
    }
    return ChoidResult(DensitySeries(grid, acc, meta), G, h, site_masses)


def choid(
    sites: Sequence[SiteRecord],
    curve: CalibrationCurve,
    grid: TimeGrid,
    cfg: McConfig = McConfig(),
    h: float = DEFAULT_HALF_WIDTH,
    skip_failed: bool = False,
    workers: int = 1,
) -> ChoidResult:
    """Calibrate every site date, then build the composite occupation index.

    Dates that fail to calibrate abort the run with :class:`CalibrationFailure`
    unless ``skip_failed`` is set, in which case they are dropped and listed in
    ``failures``.
    """
    sites = list(sites)
    posteriors, failures = calibrate_many([s.date for s in sites], curve, grid)
    if failures:
        if not skip_failed:
            raise CalibrationFailure(failures)
        sites = [s for s in sites if s.date.id not in failures]
    res = choid_from_posteriors(posteriors, sites, grid, cfg, h, workers)
    return ChoidResult(res.series, res.guesses, res.half_width, res.site_masses, failures)
