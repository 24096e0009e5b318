"""Exact finite-n recurrences for the Itai-Rodeh round count.

With ``n`` active processors, each one becomes a candidate independently with
probability ``t / n``.  ``X(n)`` is the number of rounds until a single
candidate remains.  This module evaluates, bottom-up and in double precision,

* the candidate-count weights ``b(n, k; t)`` (log space, no overflow),
* the normaliser ``lambda(n, t) = 1 / (1 - (1 - t/n)**n - (t/n)**n)``,
* ``M(n, t) = E[X(n)]``, ``M2(n, t) = E[X(n)**2]`` and ``dM/dt``,
* the Laplace transform ``phi(n) = E[exp(-alpha X(n))]``.

Every recurrence is lower triangular in ``n``; the terms that refer back to
``n`` itself (zero candidates, all candidates) are moved to the left-hand side
and divided out.  Tables are memoised per ``(t, fixed)`` and only ever grow.

``fixed`` maps small ring sizes to conventional round counts.  It is how the
segments ``t >= 2`` are handled, where ``t / k > 1`` for the smallest ``k``
and the protocol itself cannot break symmetry (see :mod:`.optimizer`).
"""
from __future__ import annotations

import math
import numbers
import threading
import warnings
from collections import OrderedDict
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, NamedTuple

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, SingularityError

__all__ = [
    "RoundMoments",
    "RoundTable",
    "binomial_weight",
    "binomial_weights",
    "log_binomial_weights",
    "normalizer",
    "normalizer_bounds",
    "mean_rounds",
    "second_moment_rounds",
    "mean_rounds_derivative",
    "round_table",
    "mgf",
    "mgf_table",
]

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
# exp(x) is exactly 0.0 in double precision below this
_LOG_UNDERFLOW = -746.0
_SINGULAR_EPS = 1e-15
_VARIANCE_CLAMP = 1e-12


# ---------------------------------------------------------------------------
# validation


def _check_int(name: str, value, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise DomainError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def _check_t(t) -> float:
    t = float(t)
    if not math.isfinite(t) or t < 0.0:
        raise DomainError(f"t must be a finite nonnegative real, got {t!r}")
    return t


# ---------------------------------------------------------------------------
# binomial weights
#
# log C(n,k) p^k q^(n-k) is evaluated with Loader's saddle-point split
# (Stirling remainders plus deviance terms).  The naive lgamma sum loses
# ~1e-11 relative accuracy at n = 1e4 through cancellation of O(n log n)
# terms; this form keeps row sums at 1 +- a few ulp up to n = 1e6.


def _stirlerr(x: np.ndarray) -> np.ndarray:
    """log(x!) - log(sqrt(2 pi x) (x/e)^x) for x >= 1."""
    out = np.empty_like(x)
    small = x <= 15.0
    xs = x[small]
    out[small] = gammaln(xs + 1.0) - (xs + 0.5) * np.log(xs) + xs - _HALF_LOG_2PI
    xl = x[~small]
    x2 = xl * xl
    out[~small] = (
        1.0 / 12 - (1.0 / 360 - (1.0 / 1260 - (1.0 / 1680 - 1.0 / (1188 * x2)) / x2) / x2) / x2
    ) / xl
    return out


def _bd0(x: np.ndarray, m: float) -> np.ndarray:
    """Deviance x log(x/m) + m - x, stable for x close to m."""
    out = x * (np.log(x) - math.log(m)) + m - x
    near = np.abs(x - m) < 0.1 * m
    d = (x[near] - m) / m
    out[near] = m * ((1.0 + d) * np.log1p(d) - d)
    return out


def _log_pmf(n: int, k: np.ndarray, p: float) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    out = np.empty_like(k)
    if p == 0.0:
        out[:] = np.where(k == 0, 0.0, -np.inf)
        return out
    if p == 1.0:
        out[:] = np.where(k == n, 0.0, -np.inf)
        return out
    lo = k == 0
    hi = k == n
    mid = ~(lo | hi)
    out[lo] = n * math.log1p(-p)
    out[hi] = n * math.log(p)
    km = k[mid]
    nk = n - km
    out[mid] = (
        _stirlerr(np.array([float(n)]))[0]
        - _stirlerr(km)
        - _stirlerr(nk)
        - _bd0(km, n * p)
        - _bd0(nk, n * (1.0 - p))
        + 0.5 * np.log(n / (2.0 * math.pi * km * nk))
    )
    return out


@lru_cache(maxsize=1024)
def _support_limit(t: float) -> int:
    """Smallest K with t**k / k! below exp(_LOG_UNDERFLOW) for all k > K.

    b(n, k; t) <= t**k / k! for t <= n, so weights past K underflow anyway.
    """
    if t == 0.0:
        return 0
    lt = math.log(t)

    def f(k: int) -> float:
        return k * lt - math.lgamma(k + 1.0) - _LOG_UNDERFLOW

    lo = max(int(math.ceil(t)), 1)
    hi = max(2 * lo, 32)
    while f(hi) > 0.0:
        lo, hi = hi, 2 * hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return hi


def _check_weight_args(n: int, t: float) -> float:
    p = t / n
    if p > 1.0:
        raise DomainError(f"candidacy probability t/n = {t}/{n} exceeds 1")
    return p


def log_binomial_weights(n: int, t: float = 1.0) -> np.ndarray:
    """Row ``log b(n, k; t)`` for ``k = 0..n`` (``-inf`` where it underflows)."""
    n = _check_int("n", n, 1)
    t = _check_t(t)
    p = _check_weight_args(n, t)
    K = min(n, _support_limit(t))
    out = np.full(n + 1, -np.inf)
    out[: K + 1] = _log_pmf(n, np.arange(K + 1), p)
    out[n] = _log_pmf(n, np.array([n]), p)[0]
    return out


def binomial_weights(n: int, t: float = 1.0) -> np.ndarray:
    """Row ``b(n, k; t)``, ``k = 0..n``; sums to 1 within a few ulp."""
    return np.exp(log_binomial_weights(n, t))


def binomial_weight(n: int, k: int, t: float = 1.0) -> float:
    """Probability that exactly ``k`` of ``n`` active processors stand.

    >>> round(binomial_weight(3, 2, 1.0), 12)
    0.222222222222
    """
    n = _check_int("n", n, 1)
    k = _check_int("k", k, 0)
    if k > n:
        raise DomainError(f"k = {k} exceeds n = {n}")
    t = _check_t(t)
    p = _check_weight_args(n, t)
    return float(np.exp(_log_pmf(n, np.array([k]), p)[0]))


# ---------------------------------------------------------------------------
# normaliser


def _stay_prob(n: int, p: float) -> float:
    """(1 - p)**n computed without cancellation."""
    if p == 1.0:
        return 0.0
    return math.exp(n * math.log1p(-p))


def normalizer(n: int, t: float = 1.0) -> float:
    """``1 / (1 - (1 - t/n)**n - (t/n)**n)``.

    Removes the two outcomes (no candidate, every processor a candidate) that
    leave the active count unchanged.
    """
    n = _check_int("n", n, 2)
    t = _check_t(t)
    p = _check_weight_args(n, t)
    if p == 1.0:
        raise SingularityError(f"lambda({n}, {t}) is singular: every processor always stands")
    denom = -math.expm1(n * math.log1p(-p)) - p**n
    if denom <= _SINGULAR_EPS:
        raise SingularityError(f"lambda({n}, {t}) is singular (denominator {denom:.3g})")
    return 1.0 / denom


def normalizer_bounds(n: int, t: float) -> tuple[float, float]:
    """Lower and upper bracket for :func:`normalizer`.

    ``(1 - e^-t (1 - t^2/n) - t^2/n^2)^-1 <= lambda <= (1 - e^-t - (t/2)^n)^-1``.
    The bracket is only informative for ``0 < t < 2`` and moderate ``n``;
    for small ``n`` the lower side can exceed the true value.
    """
    n = _check_int("n", n, 2)
    t = _check_t(t)
    et = math.exp(-t)
    lower = 1.0 / (1.0 - et * (1.0 - t * t / n) - t * t / (n * n))
    upper = 1.0 / (1.0 - et - (t / 2.0) ** n)
    return lower, upper


# ---------------------------------------------------------------------------
# memoised moment tables


class RoundTable(NamedTuple):
    """Read-only views indexed by ring size (index 0 unused)."""

    mean: np.ndarray
    second: np.ndarray
    dmean: np.ndarray


class _Builder:
    """Growing table of M, M2 and dM/dt for one ``(t, fixed)`` pair."""

    def __init__(self, t: float, fixed: Mapping[int, float]):
        self.t = t
        self.fixed = dict(fixed)
        self.size = 1  # rows 0..size are valid; row 1 is the base case
        self.mean = np.zeros(2)
        self.second = np.zeros(2)
        self.dmean = np.zeros(2)
        self.lock = threading.Lock()

    def _grow(self, n: int) -> None:
        cap = len(self.mean)
        if n < cap:
            return
        new = max(n + 1, 2 * cap)
        for name in ("mean", "second", "dmean"):
            arr = np.zeros(new)
            arr[:cap] = getattr(self, name)
            setattr(self, name, arr)

    def ensure(self, n: int) -> RoundTable:
        with self.lock:
            if n > self.size:
                self._grow(n)
                for m in range(self.size + 1, n + 1):
                    self._row(m)
                    self.size = m
            views = []
            for arr in (self.mean, self.second, self.dmean):
                v = arr[: n + 1].view()
                v.flags.writeable = False
                views.append(v)
        return RoundTable(*views)

    def _row(self, m: int) -> None:
        M, M2, dM = self.mean, self.second, self.dmean
        if m in self.fixed:
            v = float(self.fixed[m])
            # a conventional count is deterministic
            M[m], M2[m], dM[m] = v, v * v, 0.0
            return
        t = self.t
        lam = normalizer(m, t)
        p = t / m
        w = binomial_weights(m, t)
        stay = _stay_prob(m, p)
        inner = w[2:m] @ M[2:m]
        mean = lam * (1.0 + inner)
        M[m] = mean
        M2[m] = lam * (1.0 + 2.0 * stay * mean + 2.0 * (inner + w[m] * mean) + w[2:m] @ M2[2:m])
        k = np.arange(2, m + 1)
        dw = w[2:] * (k / t - (m - k) / (m - t))
        one_fewer = math.exp((m - 1) * math.log1p(-p))
        dM[m] = lam * (-one_fewer * mean + dw @ M[2 : m + 1] + w[2:m] @ dM[2:m])


_BUILDERS: OrderedDict[tuple, _Builder] = OrderedDict()
_BUILDERS_LOCK = threading.Lock()
_MAX_BUILDERS = 512


def _builder(t: float, fixed: Mapping[int, float] | None) -> _Builder:
    fixed = {} if fixed is None else {int(k): float(v) for k, v in fixed.items()}
    for k in fixed:
        if k < 2:
            raise DomainError("fixed conventions apply to ring sizes >= 2")
    key = (t, tuple(sorted(fixed.items())))
    with _BUILDERS_LOCK:
        b = _BUILDERS.get(key)
        if b is None:
            b = _Builder(t, fixed)
            _BUILDERS[key] = b
            if len(_BUILDERS) > _MAX_BUILDERS:
                _BUILDERS.popitem(last=False)
        else:
            _BUILDERS.move_to_end(key)
    return b


def round_table(n_max: int, t: float = 1.0, fixed: Mapping[int, float] | None = None) -> RoundTable:
    """Tables of ``M``, ``M2`` and ``dM/dt`` for ring sizes ``0..n_max``.

    Raises :class:`DomainError` if some non-fixed size ``k <= n_max`` has
    ``t / k > 1`` and :class:`SingularityError` if ``t`` hits a pole.
    """
    n_max = _check_int("n_max", n_max, 1)
    t = _check_t(t)
    return _builder(t, fixed).ensure(n_max)


@dataclass(frozen=True)
class RoundMoments:
    n: int
    t: float
    mean: float
    second_moment: float | None = None
    variance: float | None = None


def mean_rounds(n: int, t: float = 1.0, fixed: Mapping[int, float] | None = None) -> RoundMoments:
    """Expected number of rounds ``M(n, t)`` starting from ``n`` active processors.

    >>> mean_rounds(3, 1.0).mean
    2.1666666666666665
    """
    n = _check_int("n", n, 1)
    t = _check_t(t)
    if n == 1:
        return RoundMoments(1, t, 0.0)
    tab = round_table(n, t, fixed)
    return RoundMoments(n, t, float(tab.mean[n]))


def second_moment_rounds(
    n: int, t: float = 1.0, fixed: Mapping[int, float] | None = None
) -> RoundMoments:
    """Mean, second moment and variance of ``X(n)``.

    A variance in ``(-1e-12, 0)`` is rounding noise; it is clamped to 0 with
    a warning.
    """
    n = _check_int("n", n, 1)
    t = _check_t(t)
    if n == 1:
        return RoundMoments(1, t, 0.0, 0.0, 0.0)
    tab = round_table(n, t, fixed)
    mean = float(tab.mean[n])
    second = float(tab.second[n])
    var = second - mean * mean
    if var < 0.0:
        if var > -_VARIANCE_CLAMP:
            warnings.warn(f"variance {var:.3g} clamped to 0 at n={n}, t={t}", RuntimeWarning)
        var = 0.0
    return RoundMoments(n, t, mean, second, var)


def mean_rounds_derivative(
    n: int, t: float = 1.0, fixed: Mapping[int, float] | None = None
) -> float:
    """``dM(n, t)/dt`` from the differentiated recurrence (exact, not a difference quotient)."""
    n = _check_int("n", n, 1)
    t = _check_t(t)
    if n == 1:
        return 0.0
    return float(round_table(n, t, fixed).dmean[n])


# ---------------------------------------------------------------------------
# Laplace transform of X(n)


@lru_cache(maxsize=128)
def _mgf_table(n_max: int, alpha: float, t: float) -> np.ndarray:
    phi = np.zeros(n_max + 1)
    phi[1] = 1.0
    if alpha == 0.0:
        phi[2:] = 1.0  # E[exp(0)] = 1 exactly, no rounding from the solve
        phi.flags.writeable = False
        return phi
    ea = math.exp(-alpha)
    for m in range(2, n_max + 1):
        normalizer(m, t)  # domain and pole checks
        w = binomial_weights(m, t)
        stay = _stay_prob(m, t / m)
        rhs = ea * (w[1] + w[2:m] @ phi[2:m])
        phi[m] = rhs / (1.0 - ea * (stay + w[m]))
    phi.flags.writeable = False
    return phi


def mgf_table(n_max: int, alpha: float, t: float = 1.0) -> np.ndarray:
    """``phi(n) = E[exp(-alpha X(n))]`` for ``n = 0..n_max`` (index 0 unused)."""
    n_max = _check_int("n_max", n_max, 1)
    alpha = float(alpha)
    if not alpha >= 0.0:
        raise DomainError(f"alpha must be >= 0, got {alpha}")
    return _mgf_table(n_max, alpha, _check_t(t))


def mgf(n: int, alpha: float, t: float = 1.0) -> float:
    """``E[exp(-alpha X(n))]``; equals 1 at ``alpha = 0``."""
    n = _check_int("n", n, 1)
    return float(mgf_table(n, alpha, t)[n])
