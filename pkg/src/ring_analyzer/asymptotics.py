"""Large-n limits of the round-count moments at t = 1.

As ``n -> oo`` the candidate count in the first round becomes Poisson(1), so
every limit is a Poisson-weighted sum of *finite* exact values::

    M(oo)  = (1 + S1) / (1 - 1/e),          S1 = sum_k>=2 e^-1/k! M(k)
    M2(oo) = (-1 + 2 M(oo) + S2) / (1 - 1/e), S2 = sum_k>=2 e^-1/k! M2(k)

The sums are truncated at ``nu`` and each result carries the truncation bound
``sum_{k>nu} 1/k! / (1 - 1/e)`` (valid because ``M(k) <= e``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, FitError
from .exact import _check_int, mgf_table, round_table

__all__ = [
    "AsymConstants",
    "BoundSequence",
    "LimitReport",
    "asym_constants",
    "bound_sequence",
    "c1_tail_bound",
    "correction_c1",
    "correction_c2_fit",
    "factorial_tail",
    "laplace_tail",
    "limit_mean",
    "limit_mgf",
    "limit_second_moment",
    "limits",
    "poisson_weights",
]

E = math.e
EM1 = math.exp(-1.0)
_ONE_MINUS = 1.0 - EM1
DEFAULT_NU = 30


def poisson_weights(nu: int, t: float = 1.0) -> np.ndarray:
    """``e^-t t^k / k!`` for ``k = 0..nu``."""
    k = np.arange(nu + 1, dtype=float)
    if t == 0.0:
        return (k == 0).astype(float)
    return np.exp(-t + k * math.log(t) - gammaln(k + 1.0))


def factorial_tail(nu: int) -> float:
    """``sum_{k > nu} 1/k!`` summed directly (no ``e - partial`` cancellation)."""
    k = np.arange(nu + 1, nu + 80, dtype=float)
    return float(np.exp(-gammaln(k + 1.0)).sum())


def _truncation_bound(nu: int) -> float:
    return factorial_tail(nu) / _ONE_MINUS


@dataclass(frozen=True)
class LimitReport:
    """n -> oo constants at t = 1; fields not computed by a call stay ``None``."""

    nu: int
    m_inf: float | None = None
    m2_inf: float | None = None
    var_inf: float | None = None
    s1: float | None = None
    s2: float | None = None
    c1: float | None = None
    c2: float | None = None
    tail_bound: float | None = None
    c1_tail_bound: float | None = None
    c2_spread: float | None = None


def _sums(nu: int) -> tuple[float, float]:
    tab = round_table(nu, 1.0)
    w = poisson_weights(nu)
    return float(w[2:] @ tab.mean[2:]), float(w[2:] @ tab.second[2:])


def limit_mean(nu: int = DEFAULT_NU) -> LimitReport:
    """``M(oo)`` truncated after ``k = nu``.

    >>> round(limit_mean(15).m_inf, 9)
    2.441715879
    """
    nu = _check_int("nu", nu, 2)
    s1, _ = _sums(nu)
    return LimitReport(nu, m_inf=(1.0 + s1) / _ONE_MINUS, s1=s1, tail_bound=_truncation_bound(nu))


def limit_second_moment(nu: int = DEFAULT_NU) -> LimitReport:
    """``M2(oo)`` and the limiting variance.

    The variance is formed from ``S1`` and ``S2`` directly,
    ``(e^-1 + (1 - e^-1) S2 - S1^2) / (1 - e^-1)^2``, which agrees with
    ``m2_inf - m_inf**2`` to rounding.
    """
    nu = _check_int("nu", nu, 2)
    s1, s2 = _sums(nu)
    m_inf = (1.0 + s1) / _ONE_MINUS
    m2_inf = (-1.0 + 2.0 * m_inf + s2) / _ONE_MINUS
    var_inf = (EM1 + _ONE_MINUS * s2 - s1 * s1) / _ONE_MINUS**2
    return LimitReport(
        nu, m_inf=m_inf, m2_inf=m2_inf, var_inf=var_inf, s1=s1, s2=s2,
        tail_bound=_truncation_bound(nu),
    )


def limit_mgf(alpha: float, nu: int = DEFAULT_NU) -> float:
    """``lim phi(n) = e^-a / (1 - e^-(a+1)) * (e^-1 + sum_k>=2 e^-1/k! phi(k))``."""
    nu = _check_int("nu", nu, 2)
    alpha = float(alpha)
    if not alpha >= 0.0:
        raise DomainError(f"alpha must be >= 0, got {alpha}")
    phi = mgf_table(nu, alpha, 1.0)
    w = poisson_weights(nu)
    return math.exp(-alpha) / (1.0 - math.exp(-(alpha + 1.0))) * (EM1 + float(w[2:] @ phi[2:]))


def correction_c1(nu: int = DEFAULT_NU) -> float:
    """Coefficient ``C1`` of ``1/n`` in ``M(n) = M(oo) + C1/n + C2/n^2 + ...``.

    Obtained by expanding ``b(n, k) ~ e^-1/k! (1 - (k^2 - 3k + 1)/(2n))`` and
    ``(1 - 1/n)^n ~ e^-1 (1 - 1/(2n))`` in the recurrence::

        C1 = -e^-1 / (2 (1-e^-1)^2)
             + sum_k>=2 e^-1 ((1-e^-1) k (3-k) - 1) M(k) / (2 (1-e^-1)^2 k!)
    """
    nu = _check_int("nu", nu, 3)
    M = round_table(nu, 1.0).mean
    k = np.arange(2, nu + 1, dtype=float)
    coef = EM1 * (_ONE_MINUS * k * (3.0 - k) - 1.0) / (2.0 * _ONE_MINUS**2) * np.exp(-gammaln(k + 1.0))
    return -EM1 / (2.0 * _ONE_MINUS**2) + float(coef @ M[2:])


def c1_tail_bound(nu: int) -> float:
    """Bound on the terms ``k > nu`` dropped by :func:`correction_c1`."""
    k = np.arange(nu + 1, nu + 80, dtype=float)
    # |(1-e^-1) k (3-k) - 1| <= k^2 + 1 and e^-1 M(k) <= 1
    return float(((k * k + 1.0) * np.exp(-gammaln(k + 1.0))).sum() / (2.0 * _ONE_MINUS**2))


def _c2_samples(n_lo: int, n_hi: int, nu: int) -> tuple[np.ndarray, np.ndarray]:
    m_inf = limit_mean(nu).m_inf
    c1 = correction_c1(nu)
    n = np.arange(n_lo, n_hi + 1)
    M = round_table(n_hi, 1.0).mean[n_lo:]
    return n, n.astype(float) ** 2 * (M - m_inf - c1 / n)


def correction_c2_fit(n_lo: int = 250, n_hi: int = 300, nu: int = DEFAULT_NU) -> float:
    """Least-squares constant through ``n^2 (M(n) - M(oo) - C1/n)`` on ``[n_lo, n_hi]``.

    No closed form is attempted for ``C2``.  Raises :class:`FitError` when the
    samples spread by more than 10% of the fitted value (higher-order terms
    still dominate).
    """
    n_lo = _check_int("n_lo", n_lo, 3)
    n_hi = _check_int("n_hi", n_hi, n_lo + 1)
    if n_hi > 10_000:
        raise DomainError("n_hi must be <= 10000")
    _, y = _c2_samples(n_lo, n_hi, nu)
    c2 = float(y.mean())
    spread = float(y.max() - y.min())
    if spread > 0.1 * abs(c2):
        raise FitError(f"C2 samples on [{n_lo}, {n_hi}] spread {spread:.3g} around {c2:.6g}")
    return c2


def limits(nu: int = DEFAULT_NU, c2_range: tuple[int, int] = (250, 300)) -> LimitReport:
    """Every constant at once, with its error bound."""
    sm = limit_second_moment(nu)
    n, y = _c2_samples(*c2_range, nu)
    c2 = correction_c2_fit(*c2_range, nu=nu)
    return LimitReport(
        nu,
        m_inf=sm.m_inf, m2_inf=sm.m2_inf, var_inf=sm.var_inf, s1=sm.s1, s2=sm.s2,
        c1=correction_c1(nu), c2=c2,
        tail_bound=sm.tail_bound, c1_tail_bound=c1_tail_bound(nu),
        c2_spread=float(y.max() - y.min()),
    )


# ---------------------------------------------------------------------------
# boundedness sequence


@dataclass(frozen=True)
class AsymConstants:
    c0: float
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    c6: float
    c7: float
    c8: float


def asym_constants() -> AsymConstants:
    """Constants governing ``Delta(n) ~ c1 c6 / n + c8 / n^2``."""
    e = E
    c0 = (e - 2.0) / (e - 1.0)
    c1 = 0.5 * e / (e - 1.0)
    c2 = -0.5 * (e - 2.0) / (e - 1.0) ** 2
    c3 = e * (7.0 * e - 13.0) / (24.0 * (e - 1.0) ** 2)
    c4 = (-7.0 * e * e + 25.0 * e - 24.0) / (24.0 * (e - 1.0) ** 2)
    c6 = 1.0 / (1.0 - c0)
    c7 = c0 / (1.0 - c0) ** 2
    c5 = c1 * c2 * c6 + c3
    c8 = c1 * c7 + c5 * c6
    return AsymConstants(c0, c1, c2, c3, c4, c5, c6, c7, c8)


@dataclass(frozen=True)
class BoundSequence:
    """Upper bound ``b_n >= M(n)`` and its defect ``delta_n = e - b_n``.

    ``a_n`` and ``bcoef_n`` drive ``Delta(n) = a(n) Delta(n-1) + b(n)/n``;
    both are NaN at ``n = 1``.
    """

    n: int
    b_n: float
    delta_n: float
    a_n: float
    bcoef_n: float


def bound_sequence(n_max: int) -> list[BoundSequence]:
    """``B(n)`` for ``n = 1..n_max``, iterated through ``Delta`` to keep precision."""
    n_max = _check_int("n_max", n_max, 2)
    out = [BoundSequence(1, 0.0, E, math.nan, math.nan)]
    delta = E
    for n in range(2, n_max + 1):
        lq = math.log1p(-1.0 / n)
        t_prev = math.exp((n - 1) * lq)
        denom = -math.expm1(n * lq) - n ** (-float(n))
        a = 1.0 - t_prev / denom
        bc = n * math.expm1(1.0 + (n - 1) * lq) / denom
        delta = a * delta + bc / n
        out.append(BoundSequence(n, E - delta, delta, a, bc))
    return out


def laplace_tail(n: int, r: int) -> float:
    """Saddle-point estimate of ``sum_{k >= r} b(n, k)`` for large ``n``.

    ``e^-1 e^r / (sqrt(2 pi) r^(r + 1/2) (1 - 1/r))``.  A diagnostic for
    choosing truncation points; it never feeds back into a result.
    """
    r = _check_int("r", r, 2)
    n = _check_int("n", n, r)
    log_val = -1.0 + r - 0.5 * math.log(2.0 * math.pi) - (r + 0.5) * math.log(r) - math.log1p(-1.0 / r)
    return math.exp(log_val)
