"""Smoothed SPD: a kernel-weighted moving average across a summed distribution.

The SPD is treated as piecewise constant over grid cells, so the smoothing
integral reduces exactly to a discrete convolution with per-cell kernel
masses (:func:`tempfreq.kde.kernel_cell_weights`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.signal import convolve

from .aggregation import SpdResult
from .errors import DegenerateSampleError, DomainError, GridMismatchError, ZeroMassError
from .grid import DensitySeries, TimeGrid, mass, quantile
from .kde import _check_shape, kernel_cell_weights

IQR_RULE_FACTOR = -1.0 / math.log(0.05)
# kernel support kept, in bandwidths; Laplace tail mass beyond 20h is e^-20
TRUNCATION = {"laplace": 20.0, "gaussian": 10.0}
MASS_WARN_TOL = 1e-6


@dataclass(frozen=True)
class WkdeConfig:
    """``bandwidth`` is ``"iqr"`` (data-driven rule) or a fixed positive number."""

    shape: str = "laplace"
    bandwidth: Union[str, float] = "iqr"

    def __post_init__(self):
        _check_shape(self.shape)
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "iqr":
                raise DomainError(f"unknown bandwidth rule {self.bandwidth!r}")
        elif not (math.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise DomainError("fixed bandwidth must be > 0")


def iqr_rule(iqr: float, n: int) -> float:
    """``h = -1/ln(0.05) * IQR * n**(-1/6)``."""
    if not iqr > 0:
        raise DegenerateSampleError("interquartile range is zero")
    if n < 1:
        raise DomainError("sample size must be >= 1")
    return IQR_RULE_FACTOR * iqr * n ** (-1.0 / 6.0)


def spd_iqr(series: DensitySeries) -> float:
    return abs(quantile(series, 0.25) - quantile(series, 0.75))


def iqr_rule_bandwidth(spd: SpdResult) -> float:
    """Bandwidth from the SPD's interquartile range and the sample size."""
    return iqr_rule(spd_iqr(spd.series), spd.n)


def weighted_kde(spd: SpdResult, cfg: WkdeConfig = WkdeConfig(), grid: Optional[TimeGrid] = None) -> DensitySeries:
    """Kernel-smoothed SPD, normalized by the SPD's own mass.

    Output mass falls short of 1 only through kernel mass pushed past the grid
    edges; that case is flagged in ``meta["warnings"]``.
    """
    series = spd.series
    if grid is not None and grid != series.grid:
        raise GridMismatchError("weighted KDE grid differs from the SPD grid")
    grid = series.grid
    m = mass(series)
    if not m > 0:
        raise ZeroMassError("cannot smooth a zero-mass SPD")
    h = iqr_rule_bandwidth(spd) if cfg.bandwidth == "iqr" else float(cfg.bandwidth)
    w = smoothing_weights(cfg.shape, h, grid)
    values = convolve(series.values, w, mode="same") * grid.step / m
    # FFT round-off can leave tiny negatives where the true value is ~0
    values = np.maximum(values, 0.0)
    out = DensitySeries(
        grid,
        values,
        {"method": "wkde", "kernel": cfg.shape, "bandwidth": h, "bandwidth_rule": str(cfg.bandwidth), "n": spd.n},
    )
    lost = 1.0 - mass(out)
    out.meta["warnings"] = [f"{lost:.3g} of mass smoothed past the grid edges"] if lost > MASS_WARN_TOL else []
    return out


def smoothing_weights(shape: str, h: float, grid: TimeGrid) -> np.ndarray:
    reach = TRUNCATION.get(shape, 1.0) * h
    half = min(int(math.ceil(reach / grid.step)) + 1, grid.count - 1)
    return kernel_cell_weights(shape, h, grid.step, half)
