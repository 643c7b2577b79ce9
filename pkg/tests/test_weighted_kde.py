import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from tempfreq.aggregation import SpdResult, spd
from tempfreq.errors import DegenerateSampleError, DomainError, GridMismatchError
from tempfreq.grid import DensitySeries, TimeGrid, l1_distance, mass, normalize, total_variation, variance
from tempfreq.kde import kernel_cell_weights
from tempfreq.weighted_kde import (
    IQR_RULE_FACTOR,
    WkdeConfig,
    iqr_rule,
    iqr_rule_bandwidth,
    smoothing_weights,
    weighted_kde,
)

from conftest import gaussian_series, point_mass

GRID = TimeGrid.from_range(0, 3000, 1)


def as_spd(series, n=1):
    return SpdResult(series, n, 1.0, False)


def test_rule_constant():
    assert IQR_RULE_FACTOR == pytest.approx(0.333808, abs=5e-7)


def test_rule_reference_value():
    # independent arithmetic: 1000 / ln(20) / 253**(1/6)
    expected = 1000.0 / math.log(20.0) / 253.0 ** (1.0 / 6.0)
    assert iqr_rule(1000.0, 253) == pytest.approx(expected, rel=1e-14)
    assert iqr_rule(1000.0, 253) == pytest.approx(132.7, abs=0.1)


@settings(max_examples=50, deadline=None)
@given(st.floats(1.0, 1e4), st.floats(1.0, 1e4), st.integers(1, 5000), st.integers(1, 5000))
def test_rule_monotone(iqr_a, iqr_b, n_a, n_b):
    lo, hi = sorted((iqr_a, iqr_b))
    assert iqr_rule(lo, n_a) <= iqr_rule(hi, n_a)
    small, big = sorted((n_a, n_b))
    assert iqr_rule(lo, big) <= iqr_rule(lo, small)


def test_rule_rejects_zero_iqr():
    with pytest.raises(DegenerateSampleError):
        iqr_rule(0.0, 10)


def test_iqr_from_spd():
    s = normalize(gaussian_series(GRID, 1500, 100))
    h = iqr_rule_bandwidth(as_spd(s, 20))
    iqr = 2 * stats.norm.ppf(0.75) * 100
    assert h == pytest.approx(IQR_RULE_FACTOR * iqr * 20 ** (-1 / 6), rel=2e-3)


def test_point_mass_gives_kernel_cell_weights():
    h = 30.0
    out = weighted_kde(as_spd(point_mass(GRID, 1500)), WkdeConfig("laplace", h))
    w = kernel_cell_weights("laplace", h, 1.0, 200)
    np.testing.assert_allclose(out.values[1300:1701], w, rtol=1e-9, atol=1e-15)


def cdf_oracle(series, shape_cdf, h):
    """Smoothed density from kernel CDF differences over each SPD cell, in plain loops."""
    t = series.times
    step = series.grid.step
    m = math.fsum(series.values) * step
    nz = np.flatnonzero(series.values)
    out = np.zeros(t.size)
    for i in range(t.size):
        acc = 0.0
        for j in nz:
            a = (t[j] - step / 2 - t[i]) / h
            b = (t[j] + step / 2 - t[i]) / h
            acc += series.values[j] * (shape_cdf(b) - shape_cdf(a))
        out[i] = acc / m
    return out


@pytest.mark.parametrize("shape,cdf", [("laplace", stats.laplace.cdf), ("gaussian", stats.norm.cdf)])
def test_matches_cdf_oracle(shape, cdf):
    grid = TimeGrid.from_range(1000, 1400, 1)
    rng = np.random.default_rng(2)
    v = np.zeros(grid.count)
    v[150:250] = rng.random(100)
    s = DensitySeries(grid, v)
    h = 12.0
    out = weighted_kde(as_spd(s), WkdeConfig(shape, h))
    np.testing.assert_allclose(out.values, cdf_oracle(s, cdf, h), rtol=0, atol=1e-9)


def test_vanishing_bandwidth_recovers_spd():
    s = normalize(DensitySeries(GRID, gaussian_series(GRID, 1500, 40).values + 0.5 * gaussian_series(GRID, 1700, 25).values))
    out = weighted_kde(as_spd(s), WkdeConfig("laplace", GRID.step / 100))
    assert l1_distance(out, s) < 0.01


def test_interior_mass_one():
    s = normalize(gaussian_series(GRID, 1500, 80))
    out = weighted_kde(as_spd(s, 50))
    assert mass(out) == pytest.approx(1.0, abs=1e-6)
    assert out.meta["warnings"] == []


def test_edge_loss_warns():
    s = normalize(gaussian_series(GRID, 40, 15))
    out = weighted_kde(as_spd(s), WkdeConfig("laplace", 60.0))
    assert mass(out) < 1.0 - 1e-6
    assert out.meta["warnings"]


def test_mass_normalization_ignores_scale():
    s = gaussian_series(GRID, 1500, 50)
    a = weighted_kde(as_spd(s), WkdeConfig("laplace", 20.0))
    b = weighted_kde(as_spd(s.with_values(s.values * 37.0)), WkdeConfig("laplace", 20.0))
    np.testing.assert_allclose(a.values, b.values, rtol=1e-12, atol=1e-18)


def test_linear_in_mixtures():
    pa = normalize(gaussian_series(GRID, 1200, 30))
    pb = normalize(gaussian_series(GRID, 1800, 50))
    cfg = WkdeConfig("laplace", 25.0)
    both = weighted_kde(spd([pa, pb]), cfg)
    mixed = (weighted_kde(as_spd(pa), cfg).values + weighted_kde(as_spd(pb), cfg).values) / 2
    np.testing.assert_allclose(both.values, mixed, rtol=0, atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.floats(1100, 1900), st.floats(5, 80), st.floats(1, 100))
def test_smoothing_spreads_and_flattens(mu, sd, h):
    s = normalize(gaussian_series(GRID, mu, sd))
    out = weighted_kde(as_spd(s), WkdeConfig("laplace", h))
    assert variance(out) >= variance(s) - 1e-9
    assert total_variation(out) <= total_variation(s) + 1e-12


def test_iqr_default_meta():
    s = normalize(gaussian_series(GRID, 1500, 100))
    out = weighted_kde(as_spd(s, 253))
    assert out.meta["kernel"] == "laplace"
    assert out.meta["bandwidth_rule"] == "iqr"
    assert out.meta["bandwidth"] == pytest.approx(iqr_rule_bandwidth(as_spd(s, 253)))


def test_config_and_grid_validation():
    with pytest.raises(DomainError):
        WkdeConfig(bandwidth="silverman")
    with pytest.raises(DomainError):
        WkdeConfig(bandwidth=-3.0)
    s = normalize(gaussian_series(GRID, 1500, 100))
    with pytest.raises(GridMismatchError):
        weighted_kde(as_spd(s), grid=TimeGrid.from_range(0, 100, 1))


def test_weights_sum_to_one():
    for shape in ("laplace", "gaussian", "epanechnikov", "triangular", "rectangular"):
        w = smoothing_weights(shape, 17.3, GRID)
        assert math.fsum(w) == pytest.approx(1.0, abs=1e-8)
