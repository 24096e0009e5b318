import math

import numpy as np
import pytest

from ring_analyzer import (
    DomainError,
    FitError,
    asym_constants,
    binomial_weights,
    bound_sequence,
    c1_tail_bound,
    correction_c1,
    correction_c2_fit,
    factorial_tail,
    laplace_tail,
    limit_distribution,
    limit_mean,
    limit_mgf,
    limit_second_moment,
    limits,
    mean_rounds,
    round_table,
)
from ring_analyzer.asymptotics import _c2_samples

E1 = math.exp(-1)


def test_limit_mean_values():
    assert abs(limit_mean(15).m_inf - 2.441715879) <= 1e-9
    assert abs(limit_mean(30).m_inf - limit_mean(15).m_inf) <= 1e-12


def test_limit_mean_nu2_by_hand():
    want = (1 + E1) / (1 - E1)
    assert limit_mean(2).m_inf == pytest.approx(want, abs=1e-14)
    assert want == pytest.approx(2.163953, abs=1e-6)


def test_limit_report_identities():
    r = limit_second_moment(30)
    assert r.m_inf == pytest.approx((1 + r.s1) / (1 - E1), abs=1e-12)
    assert r.m2_inf == pytest.approx((-1 + 2 * r.m_inf + r.s2) / (1 - E1), abs=1e-12)
    assert abs(r.var_inf - (r.m2_inf - r.m_inf**2)) <= 1e-12


def test_second_moment_values():
    r = limit_second_moment(20)
    assert abs(r.m2_inf - 8.794530817) <= 1e-8
    assert abs(r.var_inf - 2.832554383) <= 1e-8


def test_tail_bound():
    r = limit_mean(30)
    assert r.tail_bound == pytest.approx(factorial_tail(30) / (1 - E1))
    assert r.tail_bound < 1e-30
    ref = limit_mean(40).m_inf
    for nu in range(5, 36):
        lm = limit_mean(nu)
        assert abs(lm.m_inf - ref) <= lm.tail_bound + 1e-15


def test_factorial_tail_direct():
    assert factorial_tail(3) == pytest.approx(math.e - 1 - 1 - 0.5 - 1 / 6, rel=1e-13)


def test_limit_mgf():
    assert abs(limit_mgf(0.0, 20) - 1.0) <= 1e-12
    m = limit_mean(20).m_inf
    assert abs(limit_mgf(1e-6, 20) - (1 - 1e-6 * m)) <= 1e-10
    p = limit_distribution(200, 30).probs
    j = np.arange(1, 201)
    assert abs(limit_mgf(1.0, 20) - np.exp(-j) @ p) <= 1e-8
    with pytest.raises(DomainError):
        limit_mgf(-1.0)


def test_c1_value():
    assert abs(correction_c1(20) - (-0.7438715372)) <= 1e-8


def test_c1_matches_large_n_slope():
    n = 10_000
    emp = n * (mean_rounds(n, 1.0).mean - limit_mean(30).m_inf)
    assert abs(emp - correction_c1(30)) <= 1e-3


def test_c1_from_independent_expansion():
    # C1 by Richardson on exact values: n (M(n) - M_inf) = C1 + C2/n + O(1/n^2)
    m_inf = limit_mean(30).m_inf
    M = round_table(4000, 1.0).mean
    a = 2000 * (M[2000] - m_inf)
    b = 4000 * (M[4000] - m_inf)
    assert abs((2 * b - a) - correction_c1(30)) <= 1e-6


def test_c1_truncation_within_bound():
    assert abs(correction_c1(3) - correction_c1(20)) <= c1_tail_bound(3)
    with pytest.raises(DomainError):
        correction_c1(2)


def test_c2_fit():
    assert abs(correction_c2_fit(250, 300) - (-0.1974635346)) <= 2e-3
    assert abs(correction_c2_fit(1000, 1100) - (-0.1974635346)) <= 5e-4


def test_c2_small_range_flagged():
    # at n = 3..5 higher-order terms are large: the sample spread, though under
    # the 10% FitError threshold, is far above the spread at n = 250..300
    _, y_small = _c2_samples(3, 5, 30)
    _, y_big = _c2_samples(250, 300, 30)
    assert np.ptp(y_small) > 100 * np.ptp(y_big)
    c2 = correction_c2_fit(3, 5)
    assert abs(c2 - (-0.1974635346)) > 1e-2


def test_c2_fit_errors():
    with pytest.raises(FitError):
        correction_c2_fit(3, 40)
    with pytest.raises(DomainError):
        correction_c2_fit(250, 20_000)
    with pytest.raises(DomainError):
        correction_c2_fit(2, 10)


def test_limits_bundle():
    r = limits()
    assert r.nu == 30
    for name in ("m_inf", "m2_inf", "var_inf", "s1", "s2", "c1", "c2", "tail_bound", "c1_tail_bound", "c2_spread"):
        assert getattr(r, name) is not None


def test_asym_constant_identities():
    c = asym_constants()
    e = math.e
    assert abs(c.c0 - (e - 2) / (e - 1)) <= 1e-14
    assert abs(c.c5 - (c.c1 * c.c2 * c.c6 + c.c3)) <= 1e-14
    assert abs(c.c6 - 1 / (1 - c.c0)) <= 1e-14
    assert abs(c.c7 - c.c0 / (1 - c.c0) ** 2) <= 1e-14
    assert abs(c.c8 - (c.c1 * c.c7 + c.c5 * c.c6)) <= 1e-14
    assert c.c1 * c.c6 == pytest.approx(e / 2)


def test_bound_sequence_start():
    seq = bound_sequence(5)
    assert seq[0].b_n == 0.0 and seq[0].delta_n == math.e
    assert seq[1].a_n == pytest.approx(0.0, abs=1e-15)


def test_bound_sequence_against_direct_iteration():
    seq = bound_sequence(60)
    B = 0.0
    for n in range(2, 61):
        q = (1 - 1 / n) ** (n - 1)
        B = B + (1 - B * q) / (1 - (1 - 1 / n) ** n - (1 / n) ** n)
        assert seq[n - 1].b_n == pytest.approx(B, rel=1e-12)


def test_bound_sequence_properties():
    seq = bound_sequence(10_000)
    b = np.array([s.b_n for s in seq])
    d = np.array([s.delta_n for s in seq])
    a = np.array([s.a_n for s in seq[2:]])
    bc = np.array([s.bcoef_n for s in seq[2:]])
    assert np.all(d > 0)
    assert np.all(np.diff(b[9:]) > 0)
    assert np.all(np.diff(d[9:]) < 0)
    assert np.all((a > 0) & (a < 0.5))
    assert np.all((bc > 0) & (bc < 1))


def test_mean_below_bound():
    seq = bound_sequence(1000)
    M = round_table(1000, 1.0).mean
    assert all(M[s.n] <= s.b_n + 1e-12 for s in seq)


def test_delta_rate():
    c = asym_constants()
    last = bound_sequence(10_000)[-1]
    assert last.n * last.delta_n == pytest.approx(c.c1 * c.c6, rel=0.01)


def test_laplace_tail():
    want = E1 * math.exp(10) / (math.sqrt(2 * math.pi) * 10**10.5 * 0.9)
    assert laplace_tail(10**6, 10) == pytest.approx(want, rel=1e-12)
    assert math.isfinite(laplace_tail(100, 2))
    with pytest.raises(DomainError):
        laplace_tail(100, 1)


def test_laplace_tail_order_of_magnitude():
    exact = binomial_weights(10**6, 1.0)[15:].sum()
    ratio = laplace_tail(10**6, 15) / exact
    assert 0.1 < ratio < 10
