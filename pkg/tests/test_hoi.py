import math

import numpy as np
import pytest

from hypothesis import given, settings
from hypothesis import strategies as st

from tempfreq.calibration import DateRecord
from tempfreq.errors import AlignmentError, CalibrationFailure, DomainError
from tempfreq.grid import TimeGrid, mass, normalize, total_variation
from tempfreq.hoi import (
    OccupationWindow,
    SiteRecord,
    choid,
    choid_from_posteriors,
    conversion_factor,
    hoid,
    occupation_window,
)
from tempfreq.montecarlo import GuessVector, McConfig

from conftest import gaussian_series, point_mass

GRID = TimeGrid.from_range(0, 3000, 1)


def site(i, area=100.0, r=1500.0, s=20.0):
    return SiteRecord(DateRecord(f"D{i}", r, s), f"S{i}", area)


def test_window_plateau_and_support():
    w = occupation_window(OccupationWindow(1000, 50, 100), GRID)
    inside = GRID.values[w.values > 0]
    assert np.all(w.values[w.values > 0] == 1.0)
    # the window [1050, 950) holds 1050 but not 950
    assert inside.max() == 1050 and inside.min() == 951
    assert inside.size == 100
    assert mass(w) == pytest.approx(100.0)


def test_window_area_ratio():
    a = occupation_window(OccupationWindow(1000, 50, 100), GRID)
    b = occupation_window(OccupationWindow(1000, 50, 200), GRID)
    assert mass(b) / mass(a) == pytest.approx(2.0)
    assert conversion_factor(250) == 2.5


def test_window_bounds_and_validation():
    w = OccupationWindow(1000, 50)
    assert w.bounds == (1050, 950) and w.duration == 100
    with pytest.raises(DomainError):
        OccupationWindow(1000, 0)
    with pytest.raises(DomainError):
        OccupationWindow(1000, 50, -1)


def test_hoid_overlap():
    sites = [site(i, a) for i, a in enumerate((100.0, 300.0))]
    f = hoid(GuessVector(np.array([1000.0, 1020.0]), np.array([1000, 1020])), sites, 50, GRID)
    assert f.values[GRID.index_of(1000)] == 4.0
    assert f.values[GRID.index_of(980)] == 4.0
    assert f.values[GRID.index_of(1060)] == 3.0
    assert f.values[GRID.index_of(955)] == 1.0
    assert mass(f) == pytest.approx(100 * 1 + 100 * 3)


def test_hoid_alignment():
    with pytest.raises(AlignmentError):
        hoid(GuessVector(np.array([1000.0]), np.array([1000])), [site(0), site(1)], 50, GRID)


def test_choid_point_masses_equal_hoid():
    sites = [site(i, a) for i, a in enumerate((100.0, 250.0, 40.0))]
    ts = [900, 1000, 1500]
    posts = [point_mass(GRID, t) for t in ts]
    res = choid_from_posteriors(posts, sites, GRID, McConfig(guesses=17))
    direct = hoid(GuessVector(np.array(ts, float), np.array(ts)), sites, 50, GRID)
    np.testing.assert_allclose(res.series.values, direct.values, rtol=1e-15)


def test_choid_mass_identity(phase_posteriors, phase_grid):
    areas = np.linspace(50, 400, len(phase_posteriors))
    sites = [site(i, a) for i, a in enumerate(areas)]
    res = choid_from_posteriors(phase_posteriors, sites, phase_grid, McConfig(seed=3, guesses=300))
    expected = math.fsum(conversion_factor(a) * 100 for a in areas)
    assert mass(res.series) == pytest.approx(expected, rel=1e-12)
    assert sum(res.site_masses.values()) == pytest.approx(expected, rel=1e-12)


def test_choid_mass_invariant_in_guess_count(phase_posteriors, phase_grid):
    sites = [site(i, 100 + 10 * i) for i in range(len(phase_posteriors))]
    masses = [mass(choid_from_posteriors(phase_posteriors, sites, phase_grid, McConfig(seed=1, guesses=G)).series)
              for G in (1, 10, 1000)]
    assert max(masses) - min(masses) <= 1e-9


def test_choid_linear_in_area(phase_posteriors, phase_grid):
    cfg = McConfig(seed=2, guesses=50)
    a = choid_from_posteriors(phase_posteriors, [site(i, 100) for i in range(20)], phase_grid, cfg)
    b = choid_from_posteriors(phase_posteriors, [site(i, 300) for i in range(20)], phase_grid, cfg)
    np.testing.assert_allclose(b.series.values, 3 * a.series.values, rtol=1e-14)


def test_wider_windows_flatten_normalized_shape(phase_posteriors, phase_grid):
    # raw TV can only grow with h (edge jumps stop cancelling), capped at 2 * sum(a/100);
    # the shape per unit mass is what flattens
    sites = [site(i) for i in range(20)]
    cfg = McConfig(seed=1, guesses=300)
    rel = []
    for h in (5, 10, 25, 50, 100, 200):
        f = choid_from_posteriors(phase_posteriors, sites, phase_grid, cfg, h=h).series
        assert total_variation(f) <= 2 * 20 * conversion_factor(100) + 1e-9
        rel.append(total_variation(f) / mass(f))
    assert all(b < a for a, b in zip(rel, rel[1:]))


def test_choid_workers_identical(phase_posteriors, phase_grid):
    sites = [site(i) for i in range(20)]
    cfg = McConfig(seed=8, guesses=200)
    a = choid_from_posteriors(phase_posteriors, sites, phase_grid, cfg, workers=1)
    b = choid_from_posteriors(phase_posteriors, sites, phase_grid, cfg, workers=4)
    np.testing.assert_array_equal(a.series.values, b.series.values)


def test_choid_calibration_failures(curve):
    grid = TimeGrid.from_range(1000, 2500, 1)
    sites = [site(0, r=1700), site(1, r=99999)]
    with pytest.raises(CalibrationFailure):
        choid(sites, curve, grid, McConfig(guesses=5))
    res = choid(sites, curve, grid, McConfig(guesses=5), skip_failed=True)
    assert "D1" in res.failures
    assert mass(res.series) == pytest.approx(100.0)


def test_site_area_validation():
    with pytest.raises(DomainError):
        site(0, area=0.0)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.tuples(st.integers(500, 2500), st.floats(1, 1000)), min_size=1, max_size=8),
    st.integers(1, 200),
    st.integers(1, 20),
)
def test_mass_identity_property(placed, h, G):
    posts = [point_mass(GRID, t) for t, _ in placed]
    sites = [site(i, a) for i, (_, a) in enumerate(placed)]
    res = choid_from_posteriors(posts, sites, GRID, McConfig(guesses=G), h=h)
    assert mass(res.series) == pytest.approx(math.fsum(a / 100 * 2 * h for _, a in placed), rel=1e-12)


def test_hoid_coincident_windows_stack():
    sites = [site(0, 100.0), site(1, 300.0)]
    f = hoid(GuessVector(np.array([1000.0, 1000.0]), np.array([1000, 1000])), sites, 50, GRID)
    plateau = f.values[f.values > 0]
    assert plateau.size == 100 and np.all(plateau == 4.0)
