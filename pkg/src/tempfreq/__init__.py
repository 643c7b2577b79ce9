"""Temporal frequency distributions from probabilistic age estimates.

Summed probability distributions, kernel density estimates (plain, composite
over Monte Carlo guesses, and kernel-smoothed SPDs) and human occupation
indices on a shared discretized cal BP timeline.
"""

__version__ = "0.1.0"

from .aggregation import SpdResult, spd
from .calibration import CalibrationCurve, DateRecord, calibrate, interpolate_curve
from .grid import (
    DensitySeries,
    TimeGrid,
    argmax_map,
    mass,
    normalize,
    point_estimates,
    quantile,
    sum_series,
)
from .hoi import OccupationWindow, SiteRecord, choid, hoid, occupation_window
from .kde import BandwidthSelector, KernelSpec, kde, kde_from_posterior_points, kernel_eval, select_bandwidth
from .montecarlo import McConfig, ckde, degenerate_mixture, plugin_estimator, sample_guess
from .weighted_kde import WkdeConfig, iqr_rule_bandwidth, weighted_kde
