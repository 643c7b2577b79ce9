"""Radiocarbon calibration against a tabulated curve.

A measurement ``r +/- s`` (14C BP) is turned into a posterior over the cal BP
grid under a uniform prior truncated to the grid span. The likelihood is the
usual Gaussian measurement model with combined variance ``s**2 + sigma(t)**2``::

    p(t) ~ exp(-(r - mu(t))**2 / (2 * (s**2 + sigma(t)**2))) / sqrt(s**2 + sigma(t)**2)

Dates are treated as statistically independent, so the joint posterior of a
sample is the product of its marginals (see :func:`joint_posterior`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, OutOfCurveRangeError, ZeroMassError
from .grid import DensitySeries, TimeGrid, argmax_map

LIKELIHOOD_ID = "gaussian-combined-variance"
PRIOR_ID = "uniform-truncated-to-grid"
INDEPENDENCE_ASSUMPTION = "dates independent; joint posterior = product of marginals"

# share of posterior mass near a grid edge above which truncation is flagged
EDGE_MASS_WARN = 1e-3
EDGE_SIGMAS = 3.0


@dataclass(frozen=True, eq=False)
class CalibrationCurve:
    """Piecewise-linear forward map cal BP -> (14C BP, 14C sigma)."""

    cal_bp: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    name: str = "curve"

    def __post_init__(self):
        cal = np.array(self.cal_bp, dtype=float)
        mu = np.array(self.mu, dtype=float)
        sig = np.array(self.sigma, dtype=float)
        if not (cal.ndim == mu.ndim == sig.ndim == 1 and len(cal) == len(mu) == len(sig)):
            raise DomainError("curve columns must be 1-D and of equal length")
        if len(cal) < 2:
            raise DomainError("a calibration curve needs at least 2 knots")
        if np.any(np.diff(cal) <= 0):
            raise DomainError("curve knots must be strictly increasing in cal BP")
        if not np.all(np.isfinite(mu)) or np.any(~(sig > 0)):
            raise DomainError("curve mu must be finite and sigma > 0")
        for a in (cal, mu, sig):
            a.setflags(write=False)
        object.__setattr__(self, "cal_bp", cal)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sig)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.cal_bp[0]), float(self.cal_bp[-1])


@dataclass(frozen=True)
class DateRecord:
    id: str
    r: float
    s: float
    curve_id: Optional[str] = None

    def __post_init__(self):
        if not math.isfinite(self.r):
            raise DomainError(f"{self.id}: 14C age must be finite")
        if not (math.isfinite(self.s) and self.s > 0):
            raise DomainError(f"{self.id}: 14C error must be > 0")


def interpolate_curve(curve: CalibrationCurve, t):
    """Linearly interpolated ``(mu, sigma)`` at cal BP ``t`` (scalar or array)."""
    t_arr = np.asarray(t, dtype=float)
    lo, hi = curve.span
    if np.any(t_arr < lo) or np.any(t_arr > hi) or np.any(np.isnan(t_arr)):
        raise OutOfCurveRangeError(f"cal BP {t} outside curve span [{lo}, {hi}]")
    mu = np.interp(t_arr, curve.cal_bp, curve.mu)
    sig = np.interp(t_arr, curve.cal_bp, curve.sigma)
    if t_arr.ndim == 0:
        return float(mu), float(sig)
    return mu, sig


def calibrate(date: DateRecord, curve: CalibrationCurve, grid: TimeGrid) -> DensitySeries:
    """Normalized calibrated posterior of ``date`` on ``grid``.

    Raises :class:`ZeroMassError` if the likelihood underflows everywhere on
    the grid, i.e. the date is incompatible with the curve over that span.
    ``meta["warnings"]`` flags posteriors with noticeable mass next to a grid
    edge (truncation by the grid).
    """
    lo, hi = curve.span
    if grid.start_calbp < lo or grid.end_calbp > hi:
        raise OutOfCurveRangeError(
            f"grid [{grid.start_calbp}, {grid.end_calbp}] not inside curve span [{lo}, {hi}]"
        )
    t = grid.values
    mu, sig = interpolate_curve(curve, t)
    var = date.s**2 + sig**2
    dens = np.exp(-((date.r - mu) ** 2) / (2.0 * var)) / np.sqrt(var)
    z = math.fsum(dens) * grid.step
    if not z > 0:
        raise ZeroMassError(f"{date.id}: {date.r}+/-{date.s} BP has no likelihood over the grid")
    dens = dens / z

    warnings = []
    edge_frac = _edge_mass(dens, grid, var)
    if edge_frac > EDGE_MASS_WARN:
        warnings.append(
            f"{date.id}: {edge_frac:.3g} of posterior mass within {EDGE_SIGMAS:g} sigma of a grid edge"
        )
    meta = {
        "id": date.id,
        "likelihood": LIKELIHOOD_ID,
        "prior": PRIOR_ID,
        "curve": curve.name,
        "warnings": warnings,
    }
    return DensitySeries(grid, dens, meta)


def _edge_mass(dens, grid, var):
    step = grid.step
    w_lo = EDGE_SIGMAS * math.sqrt(var[0])
    w_hi = EDGE_SIGMAS * math.sqrt(var[-1])
    k_lo = min(grid.count, int(math.ceil(w_lo / step)) + 1)
    k_hi = min(grid.count, int(math.ceil(w_hi / step)) + 1)
    near = np.zeros(grid.count, dtype=bool)
    near[:k_lo] = True
    near[grid.count - k_hi:] = True
    return float(dens[near].sum() * step)


def calibrate_many(dates: Sequence[DateRecord], curve: CalibrationCurve, grid: TimeGrid):
    """Calibrate each date; returns ``(posteriors, failures)``.

    ``failures`` maps date id to the error raised for it; successful
    posteriors keep input order.
    """
    posteriors, failures = [], {}
    for d in dates:
        try:
            posteriors.append(calibrate(d, curve, grid))
        except (ZeroMassError, OutOfCurveRangeError) as exc:
            failures[d.id] = str(exc)
    return posteriors, failures


def joint_posterior(p1: DensitySeries, p2: DensitySeries) -> np.ndarray:
    """Joint density of two independent dates on the product grid.

    Entry ``[j, k]`` is ``p1(t_j) * p2(t_k)``.
    """
    return np.outer(p1.values, p2.values)


def joint_map(posteriors: Sequence[DensitySeries]) -> tuple[float, ...]:
    """Mode of the joint posterior: under independence, the vector of marginal modes."""
    return tuple(argmax_map(p) for p in posteriors)

