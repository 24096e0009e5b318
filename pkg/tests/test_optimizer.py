import math

import numpy as np
import pytest

from ring_analyzer import (
    BracketError,
    DomainError,
    SegmentSpec,
    SingularityError,
    default_nu,
    find_t_star,
    limit_mean_derivative_t,
    limit_mean_t,
    mean_rounds,
    round_table,
    scan_segment,
    segment_bounds_2_3,
)
from ring_analyzer import optimizer

OPEN = SegmentSpec.open02()
INT23 = SegmentSpec.int2to3()


def test_limit_at_t1():
    assert abs(limit_mean_t(1.0, 30, OPEN) - 2.441715879) <= 1e-9


def test_limit_at_t2():
    assert 2.2797 <= limit_mean_t(2.0, 30, INT23) <= 2.34726


@pytest.mark.parametrize("t", [0.4, 1.0, 1.6])
def test_limit_matches_large_ring(t):
    # M(n, t) - M(oo, t) = O(1/n)
    m = limit_mean_t(t)
    assert abs(mean_rounds(4000, t).mean - m) < 2.0 / 4000


@pytest.mark.parametrize("t", [2.2, 2.6])
def test_int2to3_limit_matches_large_ring(t):
    m = limit_mean_t(t, segment=INT23)
    assert abs(mean_rounds(4000, t, INT23.fixed).mean - m) < 5.0 / 4000


def test_divergence_near_poles():
    assert limit_mean_t(1e-5, segment=OPEN) > 1e3
    assert limit_mean_t(2 - 1e-5, segment=OPEN) > 1e3
    with pytest.raises(SingularityError):
        limit_mean_t(1e-7, segment=OPEN)
    with pytest.raises(SingularityError):
        limit_mean_t(2 - 1e-7, segment=OPEN)


def test_segment_errors():
    with pytest.raises(DomainError):
        limit_mean_t(2.5, segment=OPEN)
    with pytest.raises(SingularityError):
        limit_mean_t(3.0, segment=INT23)
    with pytest.raises(DomainError):
        limit_mean_t(1.0, nu=1)
    with pytest.raises(DomainError):
        limit_mean_t(1.5, nu=3.5)


def test_segment_spec():
    assert SegmentSpec.parse("open02") == OPEN
    assert SegmentSpec.parse("int2to3") == INT23
    assert SegmentSpec.parse("2") == INT23
    g = SegmentSpec.parse("xi:4")
    assert (g.lo, g.hi, g.xi, g.base_convention) == (4.0, 5.0, 4, 2.0)
    assert g.fixed == {2: 1.0, 3: 2.0, 4: 2.0}
    assert INT23.fixed == {2: 1.0}
    assert OPEN.fixed == {}
    assert SegmentSpec.for_t(3.5) == SegmentSpec.general(3)
    with pytest.raises(DomainError):
        SegmentSpec.parse("nonsense")
    with pytest.raises(DomainError):
        SegmentSpec.general(2)


def test_default_nu():
    assert default_nu(1.0) == 30
    assert default_nu(7.2) == 33


def test_closed_forms():
    for t in np.linspace(0.05, 1.95, 39):
        m2 = 2 / (t * (2 - t))
        m3 = (18 - 3 * t - 2 * t * t) / (3 * t * (2 - t) * (3 - t))
        assert abs(mean_rounds(2, t).mean - m2) <= 1e-12
        assert abs(mean_rounds(3, t).mean - m3) <= 1e-12


@pytest.mark.parametrize("t", [0.3, 0.8, 1.065, 1.7])
def test_derivative_exactness(t):
    h = 1e-5
    fd = (limit_mean_t(t + h) - limit_mean_t(t - h)) / (2 * h)
    assert abs(limit_mean_derivative_t(t) - fd) <= 1e-5


@pytest.mark.parametrize("t", [2.05, 2.5, 2.9, 3.5])
def test_derivative_exactness_beyond_2(t):
    seg = SegmentSpec.for_t(t)
    h = 1e-5
    fd = (limit_mean_t(t + h, segment=seg) - limit_mean_t(t - h, segment=seg)) / (2 * h)
    assert limit_mean_derivative_t(t, segment=seg) == pytest.approx(fd, rel=1e-6)


def test_derivative_signs():
    t_star, _ = find_t_star(1e-10)
    assert abs(limit_mean_derivative_t(t_star)) <= 1e-8
    assert limit_mean_derivative_t(1.0) < 0
    assert limit_mean_derivative_t(2.5, segment=INT23) > 2.26605840


def test_find_t_star():
    t_star, m_star = find_t_star(1e-8)
    assert abs(t_star - 1.0654388051) <= 1e-6
    assert abs(m_star - 2.4348109638) <= 1e-8
    m1 = limit_mean_t(1.0)
    assert (m1 - m_star) / m1 == pytest.approx(0.0028278945, abs=1e-9)


def test_find_t_star_tolerance_floor():
    with pytest.raises(DomainError):
        find_t_star(1e-12)


def test_find_t_star_bracket_error(monkeypatch):
    monkeypatch.setattr(optimizer, "limit_mean_derivative_t", lambda t, nu=None, seg=None: 1.0)
    with pytest.raises(BracketError):
        find_t_star()


def test_convexity_grid():
    t = np.round(0.1 + 0.02 * np.arange(91), 12)
    m = np.array([limit_mean_t(float(x)) for x in t])
    assert np.all(np.diff(m, 2) > 0)


@pytest.mark.parametrize("t", [0.5, 1.0, 1.5])
def test_monotone_in_n_below_limit(t):
    M = round_table(201, t).mean
    assert np.all(np.diff(M[1:]) >= 0)
    assert M[201] <= limit_mean_t(t)


def test_segment_bounds_at_2():
    b = segment_bounds_2_3(2.0)
    # published as truncated decimals 2.2797... and 2.34726...
    assert math.floor(b.lower * 1e4) / 1e4 == pytest.approx(2.2797, abs=1e-12)
    assert math.floor(b.upper * 1e5) / 1e5 == pytest.approx(2.34726, abs=1e-12)
    assert b.upper == pytest.approx(2 * math.exp(2) / 8 + 0.5, rel=1e-14)
    assert b.lower == pytest.approx(2.27973335775, abs=1e-10)
    assert b.mean_bracketed


def test_segment_bounds_lower_uses_m3():
    t = 2.4
    m3 = (9 + 3 * t * t - t**3) / (3 * t * (3 - t))
    assert mean_rounds(3, t, {2: 1.0}).mean == pytest.approx(m3, rel=1e-13)


def test_segment_bounds_at_2_9():
    assert segment_bounds_2_3(2.9).dprime_lower > 0


def test_segment_bounds_domain():
    with pytest.raises(DomainError):
        segment_bounds_2_3(1.9)
    with pytest.raises(DomainError):
        segment_bounds_2_3(3.0)


def test_published_slope_bound_is_not_a_bound():
    # the closed-form slope "bound" exceeds the true slope near t = 2
    b = segment_bounds_2_3(2.0)
    assert b.dprime_lower == pytest.approx(2.26605841, abs=1e-8)
    assert b.m_prime == pytest.approx(0.70272358, abs=1e-8)
    assert not b.slope_bound_holds


def test_scan_open02():
    scan = scan_segment(OPEN, 0.05)
    assert scan.convexity_ok is True
    assert scan.extremum is not None
    assert abs(scan.extremum[0] - 1.065) < 1e-3
    assert scan.monotone_ok is None
    _, m_star = find_t_star()
    samples = dict((round(t, 6), m) for t, m, _ in scan.samples)
    assert samples[0.5] > m_star and samples[1.9] > m_star


def test_scan_3_4():
    scan = scan_segment(SegmentSpec.general(3), 0.05)
    assert scan.monotone_ok is True
    assert scan.extremum is None
    assert np.all(np.diff(scan.m) > 0)
    assert scan.t.min() > 3.0 and scan.t.max() < 4.0


def test_scan_int2to3_includes_left_end():
    scan = scan_segment(INT23, 0.25)
    assert scan.t[0] == 2.0
    assert scan.monotone_ok is True


def test_scan_step_validation():
    with pytest.raises(DomainError):
        scan_segment(OPEN, 0.0)
