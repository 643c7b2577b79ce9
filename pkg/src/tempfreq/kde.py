"""Kernels, bandwidth selection and fixed-bandwidth kernel density estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import erf, ndtr

from .errors import DegenerateSampleError, DomainError, EmptyInputError
from .grid import DensitySeries, TimeGrid, point_estimates

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
SHAPES = ("gaussian", "epanechnikov", "rectangular", "triangular", "laplace")


# Unit kernels of the scaled distance u = |t - center| / h, u >= 0.

def _gaussian(u):
    return np.exp(-0.5 * u * u) * INV_SQRT_2PI


def _epanechnikov(u):
    return np.where(u <= 1.0, 0.75 * (1.0 - u * u), 0.0)


def _rectangular(u):
    # value at the jump is the mean of the one-sided limits
    return np.where(u < 1.0, 0.5, np.where(u == 1.0, 0.25, 0.0))


def _triangular(u):
    return np.where(u <= 1.0, 1.0 - u, 0.0)


def _laplace(u):
    return 0.5 * np.exp(-u)


# Self-convolutions (K*K)(u), used by the cross-validation score.

def _gaussian_conv(u):
    return np.exp(-0.25 * u * u) / (2.0 * math.sqrt(math.pi))


def _epanechnikov_conv(u):
    v = np.minimum(u, 2.0)
    return 3.0 / 160.0 * (2.0 - v) ** 3 * (v * v + 6.0 * v + 4.0)


def _rectangular_conv(u):
    return np.maximum(2.0 - u, 0.0) / 4.0


def _triangular_conv(u):
    inner = 2.0 / 3.0 - u * u + 0.5 * u**3
    outer = np.maximum(2.0 - u, 0.0) ** 3 / 6.0
    return np.where(u <= 1.0, inner, outer)


def _laplace_conv(u):
    return 0.25 * (1.0 + u) * np.exp(-u)


_UNIT = {
    "gaussian": _gaussian,
    "epanechnikov": _epanechnikov,
    "rectangular": _rectangular,
    "triangular": _triangular,
    "laplace": _laplace,
}
_CONV = {
    "gaussian": _gaussian_conv,
    "epanechnikov": _epanechnikov_conv,
    "rectangular": _rectangular_conv,
    "triangular": _triangular_conv,
    "laplace": _laplace_conv,
}
# Beyond this many bandwidths the float64 kernel value is exactly 0, so
# skipping those cells cannot change any sum.
ZERO_RADIUS = {
    "gaussian": 40.0,
    "epanechnikov": 1.0,
    "rectangular": 1.0,
    "triangular": 1.0,
    "laplace": 746.0,
}


def _check_shape(shape):
    if shape not in _UNIT:
        raise DomainError(f"unknown kernel {shape!r}; choose from {', '.join(SHAPES)}")


@dataclass(frozen=True)
class KernelSpec:
    shape: str
    h: float

    def __post_init__(self):
        _check_shape(self.shape)
        if not (math.isfinite(self.h) and self.h > 0):
            raise DomainError(f"bandwidth must be > 0, got {self.h}")

    def __call__(self, t, center):
        return kernel_eval(self, center, t)


def kernel_eval(spec: KernelSpec, center, t):
    """``K(t | center, h)``; works on scalars and arrays alike."""
    u = np.abs(np.asarray(t, dtype=float) - center) / spec.h
    val = _UNIT[spec.shape](u) / spec.h
    return float(val) if np.ndim(val) == 0 else val


def kernel_self_convolution(shape: str, u):
    """``(K*K)(u)`` of the unit kernel, evaluated at ``|u|``."""
    _check_shape(shape)
    return _CONV[shape](np.abs(np.asarray(u, dtype=float)))


@dataclass(frozen=True)
class BandwidthSelector:
    """``method`` is ``"ucv"``, ``"silverman"`` or ``"fixed"`` (with ``h``)."""

    method: str = "ucv"
    h: Optional[float] = None

    def __post_init__(self):
        if self.method not in ("ucv", "silverman", "fixed"):
            raise DomainError(f"unknown bandwidth method {self.method!r}")
        if self.method == "fixed" and not (self.h is not None and math.isfinite(self.h) and self.h > 0):
            raise DomainError("fixed bandwidth requires h > 0")

    @classmethod
    def fixed(cls, h: float) -> "BandwidthSelector":
        return cls("fixed", float(h))

    @classmethod
    def parse(cls, text: str) -> "BandwidthSelector":
        """Parse ``ucv``, ``silverman`` or ``fixed:H``."""
        if text.startswith("fixed:"):
            try:
                return cls.fixed(float(text.split(":", 1)[1]))
            except ValueError:
                raise DomainError(f"bad fixed bandwidth {text!r}") from None
        return cls(text)

    def __str__(self):
        return f"fixed:{self.h!r}" if self.method == "fixed" else self.method


def _sample(timestamps) -> np.ndarray:
    x = np.asarray(timestamps, dtype=float).ravel()
    if x.size == 0:
        raise EmptyInputError("no timestamps")
    if not np.all(np.isfinite(x)):
        raise DomainError("timestamps must be finite")
    return x


def _require_spread(x):
    if x.size < 2:
        raise DegenerateSampleError(f"need at least 2 timestamps, got {x.size}")
    if np.all(x == x[0]):
        raise DegenerateSampleError("all timestamps identical (zero spread)")


def silverman_bandwidth(timestamps) -> float:
    """Rule of thumb ``1.06 * min(sd, IQR/1.34) * n**(-1/5)``.

    Falls back to the sd alone when the IQR is zero but the sample is not.
    """
    x = _sample(timestamps)
    _require_spread(x)
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    return 1.06 * spread * x.size ** (-0.2)


class _UcvObjective:
    """Unbiased (least-squares) cross-validation score as a function of h.

    ``UCV(h) = int fhat^2 - (2/n) sum_i fhat_{-i}(x_i)``, with both terms
    written through pairwise distances so that only the kernel and its
    self-convolution are needed.
    """

    def __init__(self, x, shape):
        self.n = x.size
        self.shape = shape
        i, j = np.triu_indices(self.n, k=1)
        self.d = np.abs(x[i] - x[j])
        self.kk0 = float(_CONV[shape](np.array(0.0)))

    def __call__(self, h):
        n = self.n
        u = self.d / h
        sq = (n * self.kk0 + 2.0 * _CONV[self.shape](u).sum()) / (n * n * h)
        loo = 2.0 * _UNIT[self.shape](u).sum() / ((n - 1) * h)
        return sq - 2.0 * loo / n


def ucv_score(timestamps, h: float, shape: str = "gaussian") -> float:
    _check_shape(shape)
    x = _sample(timestamps)
    _require_spread(x)
    return float(_UcvObjective(x, shape)(h))


UCV_SCAN_POINTS = 61
UCV_RANGE = 10.0


def ucv_bandwidth(timestamps, shape: str = "gaussian") -> float:
    """Minimize the UCV score over ``[silverman/10, silverman*10]``.

    A log-spaced scan locates the best candidate, then golden-section search
    refines it inside the bracket formed by its neighbours. If the minimum
    sits on the edge of the range, that edge is returned.
    """
    _check_shape(shape)
    x = _sample(timestamps)
    _require_spread(x)
    ref = silverman_bandwidth(x)
    obj = _UcvObjective(x, shape)
    logh = np.linspace(math.log(ref / UCV_RANGE), math.log(ref * UCV_RANGE), UCV_SCAN_POINTS)
    scores = np.array([obj(math.exp(v)) for v in logh])
    k = int(np.argmin(scores))
    if k == 0 or k == len(logh) - 1:
        return float(math.exp(logh[k]))
    res = minimize_scalar(
        lambda v: obj(math.exp(v)),
        bracket=(logh[k - 1], logh[k], logh[k + 1]),
        method="golden",
        options={"xtol": 1e-6},
    )
    best = res.x if res.fun <= scores[k] else logh[k]
    return float(math.exp(best))


def select_bandwidth(timestamps, method: BandwidthSelector, shape: str = "gaussian") -> float:
    if method.method == "fixed":
        return float(method.h)
    if method.method == "silverman":
        return silverman_bandwidth(timestamps)
    return ucv_bandwidth(timestamps, shape)


def kernel_sum(x, spec: KernelSpec, grid: TimeGrid) -> np.ndarray:
    # accumulates in timestamp order; cells outside a kernel's exact-zero
    # radius would only ever receive +0.0
    t = grid.values
    acc = np.zeros(grid.count)
    reach = ZERO_RADIUS[spec.shape] * spec.h
    for tau in x:
        lo = max(int(math.floor((tau - reach - grid.start_calbp) / grid.step)) - 1, 0)
        hi = min(int(math.ceil((tau + reach - grid.start_calbp) / grid.step)) + 2, grid.count)
        if lo >= hi:
            continue
        acc[lo:hi] += kernel_eval(spec, tau, t[lo:hi])
    return acc


def kde(
    timestamps: Sequence[float],
    shape: str,
    selector: BandwidthSelector,
    grid: TimeGrid,
    h: Optional[float] = None,
) -> DensitySeries:
    """``fhat(t) = (1/n) sum_i K(t | x_i, h)`` evaluated at the grid points.

    ``h`` overrides the selector when the bandwidth is already known.
    """
    _check_shape(shape)
    x = _sample(timestamps)
    if h is None:
        h = select_bandwidth(x, selector, shape)
    spec = KernelSpec(shape, h)
    values = kernel_sum(x, spec, grid) / x.size
    meta = {"method": "kde", "kernel": shape, "bandwidth": float(h), "selector": str(selector), "n": int(x.size)}
    return DensitySeries(grid, values, meta)


def kde_from_posterior_points(
    posteriors: Sequence[DensitySeries],
    which: str,
    shape: str,
    selector: BandwidthSelector,
    grid: TimeGrid,
) -> DensitySeries:
    """KDE of one point estimate (``mean``, ``median`` or ``map``) per posterior."""
    if which not in ("mean", "median", "map"):
        raise DomainError(f"unknown point estimate {which!r}")
    points = [getattr(point_estimates(p), which) for p in posteriors]
    out = kde(points, shape, selector, grid)
    out.meta.update(point_estimate=which, points=[float(v) for v in points])
    return out


def _survival(shape, u):
    """Upper-tail mass ``P(U > u)`` of the unit kernel, for ``u >= 0``."""
    if shape == "gaussian":
        return ndtr(-u)
    if shape == "laplace":
        return 0.5 * np.exp(-u)
    if shape == "epanechnikov":
        return np.where(u < 1.0, 0.5 - 0.75 * (u - u**3 / 3.0), 0.0)
    if shape == "rectangular":
        return np.maximum(1.0 - u, 0.0) / 2.0
    return np.where(u < 1.0, (1.0 - u) ** 2 / 2.0, 0.0)


def kernel_cell_weights(shape: str, h: float, step: float, half_width: int) -> np.ndarray:
    """Kernel mass in each grid cell at offsets ``-half_width .. half_width``, divided by step.

    Entry ``j`` is the average density of ``K(. | 0, h)`` over the cell
    centred on ``j * step``; the weights times ``step`` sum to the kernel mass
    inside the covered cells.
    """
    _check_shape(shape)
    a = step / h
    j = np.arange(1, half_width + 1, dtype=float)
    side = _survival(shape, (j - 0.5) * a) - _survival(shape, (j + 0.5) * a)
    centre = 1.0 - 2.0 * _survival(shape, np.array(0.5 * a))
    if shape == "laplace":
        centre = -np.expm1(-0.5 * a)
    elif shape == "gaussian":
        centre = erf(0.5 * a / math.sqrt(2.0))
    w = np.concatenate([side[::-1], [centre], side])
    return w / step
