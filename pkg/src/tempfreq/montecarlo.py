"""Seeded Monte Carlo over the joint posterior of a sample of dates.

Every guess ``g`` draws from its own counter-based stream, Philox keyed by
``(seed, g)``, so results never depend on how guesses are spread across
worker threads. Reductions run over fixed-size blocks of guesses in guess
order, which makes floating-point results bit-identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .errors import DegenerateSampleError, DomainError, EmptyInputError, GridMismatchError
from .grid import DensitySeries, TimeGrid, point_estimates
from .kde import BandwidthSelector, KernelSpec, _check_shape, kernel_sum, select_bandwidth, silverman_bandwidth

STREAM_POLICY = "philox4x64 key=(guess << 64) | seed, counter from 0"
BLOCK = 64  # guesses per reduction block; fixed so results ignore worker count


@dataclass(frozen=True)
class McConfig:
    seed: int = 0
    guesses: int = 1000
    stream_policy: str = STREAM_POLICY

    def __post_init__(self):
        if int(self.guesses) != self.guesses or self.guesses < 1:
            raise DomainError(f"guess count must be a positive integer, got {self.guesses}")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must fit in an unsigned 64-bit integer")
        if self.stream_policy != STREAM_POLICY:
            raise DomainError(f"unsupported stream policy {self.stream_policy!r}")


def guess_rng(seed: int, g: int) -> np.random.Generator:
    """Independent generator for guess ``g`` under ``seed``."""
    return np.random.Generator(np.random.Philox(key=(int(g) << 64) | int(seed)))


@dataclass(frozen=True, eq=False)
class GuessVector:
    timestamps: np.ndarray
    indices: np.ndarray
    guess_index: int = 0


class PosteriorSampler:
    """Inverse-CDF sampler over a set of posteriors sharing one grid.

    Only the span between each posterior's first and last nonzero cell is
    tabulated. Draws land on grid points.
    """

    def __init__(self, posteriors: Sequence[DensitySeries]):
        posteriors = list(posteriors)
        if not posteriors:
            raise EmptyInputError("no posteriors to sample")
        self.grid = posteriors[0].grid
        self.offsets = []
        self.cdfs = []
        for p in posteriors:
            if p.grid != self.grid:
                raise GridMismatchError("posteriors must share one grid")
            nz = np.flatnonzero(p.values > 0)
            if nz.size == 0:
                raise DomainError("cannot sample a zero-mass posterior")
            lo, hi = int(nz[0]), int(nz[-1]) + 1
            cdf = np.cumsum(p.values[lo:hi])
            self.offsets.append(lo)
            self.cdfs.append(cdf / cdf[-1])
        self.n = len(posteriors)

    def indices_from_uniforms(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms of shape ``(..., n)`` to grid indices, column by column."""
        u = np.asarray(u)
        out = np.empty(u.shape, dtype=np.int64)
        for i, (lo, cdf) in enumerate(zip(self.offsets, self.cdfs)):
            k = np.searchsorted(cdf, u[..., i], side="right")
            out[..., i] = lo + np.minimum(k, cdf.size - 1)
        return out

    def draw(self, seed: int, first: int, stop: int) -> np.ndarray:
        """Grid indices for guesses ``first .. stop-1``, shape ``(stop-first, n)``."""
        u = np.stack([guess_rng(seed, g).random(self.n) for g in range(first, stop)])
        return self.indices_from_uniforms(u)


def sample_guess(posteriors, rng: np.random.Generator, guess_index: int = 0) -> GuessVector:
    """One draw of all ``n`` timestamps, each independently from its marginal."""
    sampler = posteriors if isinstance(posteriors, PosteriorSampler) else PosteriorSampler(posteriors)
    idx = sampler.indices_from_uniforms(rng.random(sampler.n))
    return GuessVector(sampler.grid.values[idx], idx, guess_index)


def _blocks(total: int):
    return [(a, min(a + BLOCK, total)) for a in range(0, total, BLOCK)]


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def draw_guesses(posteriors, cfg: McConfig, workers: int = 1) -> np.ndarray:
    """Grid indices for every guess, shape ``(G, n)``."""
    sampler = posteriors if isinstance(posteriors, PosteriorSampler) else PosteriorSampler(posteriors)
    parts = _map(lambda b: sampler.draw(cfg.seed, *b), _blocks(cfg.guesses), workers)
    return np.concatenate(parts, axis=0)


def degenerate_mixture(guess: GuessVector, grid: TimeGrid) -> DensitySeries:
    """Equal point masses ``1/n`` at the guessed timestamps; duplicates stack."""
    idx = np.asarray(guess.indices)
    counts = np.bincount(idx, minlength=grid.count)
    return DensitySeries(grid, counts / (idx.size * grid.step))


def plugin_estimator(posteriors, cfg: McConfig, grid: TimeGrid, workers: int = 1) -> DensitySeries:
    """Average of ``G`` degenerate-mixture summaries of sampled guesses.

    Cell counts are accumulated as integers, so the result is exact up to the
    final division.
    """
    sampler = PosteriorSampler(posteriors)
    if sampler.grid != grid:
        raise GridMismatchError("posteriors are not on the requested grid")
    idx = draw_guesses(sampler, cfg, workers)
    counts = np.bincount(idx.ravel(), minlength=grid.count)
    values = counts / (sampler.n * cfg.guesses * grid.step)
    meta = {"method": "plugin", "seed": cfg.seed, "guesses": cfg.guesses, "stream_policy": cfg.stream_policy}
    return DensitySeries(grid, values, meta)


@dataclass(frozen=True, eq=False)
class CkdeResult:
    composite: DensitySeries
    per_guess_bandwidths: np.ndarray
    per_guess: Optional[List[DensitySeries]] = None
    fallback_guesses: tuple = ()


def _resolve_bandwidths(hs, posteriors):
    """Fill failed selections with the last good bandwidth in guess order.

    Guesses before the first success use Silverman on the posterior means.
    """
    failed = tuple(g for g, h in enumerate(hs) if h is None)
    if not failed:
        return np.array(hs, dtype=float), failed
    if hs[0] is None:
        means = [point_estimates(p).mean for p in posteriors]
        seed_h = silverman_bandwidth(means)
    out, last = [], None
    for h in hs:
        if h is not None:
            last = h
        out.append(last if last is not None else seed_h)
    return np.array(out, dtype=float), failed


def ckde(
    posteriors: Sequence[DensitySeries],
    shape: str,
    selector: BandwidthSelector,
    cfg: McConfig,
    grid: TimeGrid,
    workers: int = 1,
    keep_per_guess: bool = False,
) -> CkdeResult:
    """Composite KDE: average over guesses of each guess's own KDE.

    Each guess selects its bandwidth from its own sampled timestamps.
    """
    _check_shape(shape)
    posteriors = list(posteriors)
    sampler = PosteriorSampler(posteriors)
    if sampler.grid != grid:
        raise GridMismatchError("posteriors are not on the requested grid")
    idx = draw_guesses(sampler, cfg, workers)
    times = grid.values[idx]

    def pick(row):
        try:
            return select_bandwidth(row, selector, shape)
        except DegenerateSampleError:
            return None

    hs, failed = _resolve_bandwidths(_map(pick, list(times), workers), posteriors)

    def block_sum(b):
        acc = np.zeros(grid.count)
        kept = []
        for g in range(*b):
            f = kernel_sum(times[g], KernelSpec(shape, hs[g]), grid) / sampler.n
            acc += f
            if keep_per_guess:
                kept.append(DensitySeries(grid, f, {"guess": g, "bandwidth": float(hs[g])}))
        return acc, kept

    total = np.zeros(grid.count)
    per_guess = [] if keep_per_guess else None
    for acc, kept in _map(block_sum, _blocks(cfg.guesses), workers):
        total += acc
        if keep_per_guess:
            per_guess.extend(kept)
    meta = {
        "method": "ckde",
        "kernel": shape,
        "selector": str(selector),
        "seed": cfg.seed,
        "guesses": cfg.guesses,
        "stream_policy": cfg.stream_policy,
        "bandwidth_fallbacks": len(failed),
    }
    composite = DensitySeries(grid, total / cfg.guesses, meta)
    return CkdeResult(composite, hs, per_guess, failed)


def bandwidth_dispersion(hs) -> float:
    """Coefficient of variation of per-guess bandwidths."""
    hs = np.asarray(hs, dtype=float)
    return float(np.std(hs, ddof=1) / np.mean(hs)) if hs.size > 1 else 0.0
