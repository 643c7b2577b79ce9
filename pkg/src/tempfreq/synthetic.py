"""Synthetic calibration curves and date samples for tests and experiments."""

from __future__ import annotations

import math

import numpy as np

from .calibration import CalibrationCurve, DateRecord


def identity_curve(start=0.0, end=50000.0, step=10.0, sigma=1e-3) -> CalibrationCurve:
    """``mu(t) = t`` with a near-zero constant sigma."""
    t = np.arange(start, end + step / 2, step)
    return CalibrationCurve(t, t.copy(), np.full(t.size, sigma), "identity")


def wiggly_curve(start=0.0, end=6000.0, step=5.0) -> CalibrationCurve:
    """Identity trend plus two sinusoidal wiggles, loosely IntCal-like.

    The wiggles are strong enough to create plateaus and short reversals, so
    posteriors are frequently multimodal.
    """
    t = np.arange(start, end + step / 2, step)
    mu = t + 40.0 * np.sin(2 * math.pi * t / 300.0) + 15.0 * np.sin(2 * math.pi * t / 97.0)
    sigma = 12.0 + 4.0 * np.sin(2 * math.pi * t / 510.0)
    return CalibrationCurve(t, mu, sigma, "synthetic-wiggly")


def simulate_dates(curve: CalibrationCurve, true_ages, errors, seed=0, prefix="SYN") -> list:
    """Measurements of known calendar ages: ``r ~ N(mu(t), s**2 + sigma(t)**2)``, rounded to years."""
    rng = np.random.default_rng(seed)
    true_ages = np.asarray(true_ages, dtype=float)
    errors = np.broadcast_to(np.asarray(errors, dtype=float), true_ages.shape)
    mu = np.interp(true_ages, curve.cal_bp, curve.mu)
    sig = np.interp(true_ages, curve.cal_bp, curve.sigma)
    r = np.round(mu + rng.normal(size=true_ages.size) * np.sqrt(errors**2 + sig**2))
    return [DateRecord(f"{prefix}-{i + 1:03d}", float(r[i]), float(errors[i])) for i in range(true_ages.size)]


def phase_sample(curve: CalibrationCurve, n=20, center=1500.0, spread=15.0, error=15.0, seed=0) -> list:
    """``n`` dates from one occupation phase: true ages ~ N(center, spread)."""
    rng = np.random.default_rng(seed)
    ages = np.round(rng.normal(center, spread, n))
    return simulate_dates(curve, ages, error, seed=seed + 1)
