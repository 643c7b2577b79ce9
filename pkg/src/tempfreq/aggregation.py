"""Summed probability distributions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from .errors import DomainError, EmptyInputError, NotNormalizedError
from .grid import DensitySeries, mass, sum_series

# constituents must be normalized to within this before summation
CONSTITUENT_TOL = 1e-6


@dataclass(frozen=True)
class SpdResult:
    series: DensitySeries
    n: int
    scale_c: float
    normalized: bool


def spd(posteriors: Sequence[DensitySeries], scale: Union[str, float] = "raw") -> SpdResult:
    """Sum normalized posteriors pointwise.

    ``scale`` is ``"raw"`` (C = 1, mass n), ``"normalized"`` (C = 1/n, mass 1)
    or a positive number used directly as C.
    """
    posteriors = list(posteriors)
    n = len(posteriors)
    if n == 0:
        raise EmptyInputError("an SPD needs at least one posterior")
    for i, p in enumerate(posteriors):
        m = mass(p)
        if abs(m - 1.0) > CONSTITUENT_TOL:
            raise NotNormalizedError(f"posterior {i} has mass {m!r}, expected 1")
    if scale == "raw":
        c = 1.0
    elif scale == "normalized":
        c = 1.0 / n
    elif isinstance(scale, str):
        raise DomainError(f"unknown SPD scale {scale!r}")
    else:
        c = float(scale)
    series = sum_series(posteriors, c)
    series.meta.update(method="spd", n=n, scale_c=c)
    return SpdResult(series, n, c, scale == "normalized" or c == 1.0 / n)
