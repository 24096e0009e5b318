"""The limit functional ``M(oo, t)`` and its minimiser over the candidacy numerator.

For large rings the first-round candidate count is Poisson(t), so::

    M(oo, t) (1 - e^-t) = 1 + sum_{k>=2} e^-t t^k / k! * M(k, t)

with the finite ``M(k, t)`` taken from :mod:`.exact`.  Differentiating gives

    M'(oo, t) (1 - e^-t) = 1 - M(oo, t) + sum_{k>=2} e^-t t^(k-1)/(k-1)! M(k, t)
                                        + sum_{k>=2} e^-t t^k/k! M'(k, t).

The poles of ``M(k, t)`` sit at the integers 0, 2, 3, ... and split the
t axis into segments.  On ``(0, 2)`` the recurrence applies as is.  For
``t >= 2`` small rings cannot break symmetry (``t / k >= 1``), and their
round counts are fixed by convention: ``M(k, t) = ceil(log2 k)`` for
``2 <= k <= xi`` on ``[2, 3)`` (``xi = 2``) and on ``(xi, xi + 1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import poisson_weights
from .errors import BracketError, DomainError, SingularityError
from .exact import _check_int, _check_t, round_table

__all__ = [
    "ParamScan",
    "SegmentBounds",
    "SegmentSpec",
    "default_nu",
    "find_t_star",
    "limit_mean_derivative_t",
    "limit_mean_t",
    "scan_segment",
    "segment_bounds_2_3",
]

GUARD = 1e-6
_BISECT_MAX_ITER = 60

OPEN02 = "open02"
INT2TO3 = "int2to3"
GENERAL_XI = "general_xi"


@dataclass(frozen=True)
class SegmentSpec:
    """A pole-free stretch of the t axis together with its small-ring convention."""

    kind: str
    lo: float
    hi: float
    xi: int | None = None
    base_convention: float | None = None

    @classmethod
    def open02(cls) -> "SegmentSpec":
        return cls(OPEN02, 0.0, 2.0)

    @classmethod
    def int2to3(cls) -> "SegmentSpec":
        return cls(INT2TO3, 2.0, 3.0, 2, 1.0)

    @classmethod
    def general(cls, xi: int) -> "SegmentSpec":
        xi = _check_int("xi", xi, 3)
        return cls(GENERAL_XI, float(xi), float(xi + 1), xi, float(math.ceil(math.log2(xi))))

    @classmethod
    def for_t(cls, t: float) -> "SegmentSpec":
        """The segment whose interior (or closed left end, for ``[2, 3)``) holds ``t``."""
        t = _check_t(t)
        if t < 2.0:
            return cls.open02()
        if t < 3.0:
            return cls.int2to3()
        return cls.general(int(math.floor(t)))

    @classmethod
    def parse(cls, text: str) -> "SegmentSpec":
        """``open02``, ``int2to3``, or ``xi:N`` / ``N`` for ``(N, N+1)``."""
        text = text.strip().lower()
        if text == OPEN02:
            return cls.open02()
        if text == INT2TO3:
            return cls.int2to3()
        if text.startswith("xi:"):
            text = text[3:]
        try:
            xi = int(text)
        except ValueError:
            raise DomainError(f"unknown segment {text!r}") from None
        return cls.int2to3() if xi == 2 else cls.general(xi)

    @property
    def label(self) -> str:
        return self.kind if self.kind != GENERAL_XI else f"xi:{self.xi}"

    @property
    def fixed(self) -> dict[int, float]:
        """Conventional round counts for rings too small to elect at this t."""
        if self.kind == OPEN02:
            return {}
        return {k: float(math.ceil(math.log2(k))) for k in range(2, self.xi + 1)}

    @property
    def closed_left(self) -> bool:
        return self.kind == INT2TO3

    def check(self, t: float) -> float:
        t = _check_t(t)
        if t < self.lo or t > self.hi:
            raise DomainError(f"t = {t} lies outside segment {self.label} ({self.lo:g}, {self.hi:g})")
        if t >= self.hi - GUARD:
            raise SingularityError(f"t = {t} is at the pole t = {self.hi:g}")
        if not self.closed_left and t <= self.lo + GUARD:
            raise SingularityError(f"t = {t} is at the pole t = {self.lo:g}")
        return t


def default_nu(t: float) -> int:
    """Poisson(t) weights peak near ``k = t``; keep 25 terms beyond it."""
    return max(30, int(math.ceil(t)) + 25)


def _prepare(t, nu, segment):
    seg = SegmentSpec.for_t(t) if segment is None else segment
    t = seg.check(t)
    nu = default_nu(t) if nu is None else _check_int("nu", nu, 3)
    if nu < max(3, int(math.ceil(t)) + 1):
        raise DomainError(f"nu = {nu} too small for t = {t}")
    return t, nu, seg


def _limit_and_slope(t: float, nu: int, seg: SegmentSpec) -> tuple[float, float]:
    tab = round_table(nu, t, seg.fixed)
    p = poisson_weights(nu, t)
    one_minus = -math.expm1(-t)
    m = (1.0 + p[2:] @ tab.mean[2:]) / one_minus
    dm = (1.0 - m + p[1:-1] @ tab.mean[2:] + p[2:] @ tab.dmean[2:]) / one_minus
    return float(m), float(dm)


def limit_mean_t(t: float, nu: int | None = None, segment: SegmentSpec | None = None) -> float:
    """``M(oo, t)`` on the segment containing ``t`` (or the one given).

    >>> round(limit_mean_t(1.0), 9)
    2.441715879
    """
    t, nu, seg = _prepare(t, nu, segment)
    return _limit_and_slope(t, nu, seg)[0]


def limit_mean_derivative_t(
    t: float, nu: int | None = None, segment: SegmentSpec | None = None
) -> float:
    """``dM(oo, t)/dt``, with ``M'(k, t)`` from the differentiated finite recurrence."""
    t, nu, seg = _prepare(t, nu, segment)
    return _limit_and_slope(t, nu, seg)[1]


def _bisect_slope(lo: float, hi: float, tol: float, nu: int | None) -> float:
    seg = SegmentSpec.open02()
    f_lo = limit_mean_derivative_t(lo, nu, seg)
    f_hi = limit_mean_derivative_t(hi, nu, seg)
    if not (f_lo < 0.0 < f_hi):
        raise BracketError(f"M'(oo, t) does not change sign on [{lo}, {hi}]")
    for _ in range(_BISECT_MAX_ITER):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if limit_mean_derivative_t(mid, nu, seg) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_t_star(tolerance: float = 1e-10, nu: int | None = None) -> tuple[float, float]:
    """Unique minimiser ``t*`` of ``M(oo, t)`` on ``(0, 2)`` and ``M(oo, t*)``.

    Bisects the sign change of ``M'(oo, t)`` on ``[0.5, 1.5]``.  A sign scan
    over ``(0, 2)`` at step 0.01 first checks there is exactly one change.
    """
    if not tolerance >= 1e-10:
        raise DomainError(f"tolerance must be >= 1e-10, got {tolerance}")
    seg = SegmentSpec.open02()
    grid = np.round(np.arange(1, 200) * 0.01, 12)
    signs = np.sign([limit_mean_derivative_t(float(t), nu, seg) for t in grid])
    changes = np.flatnonzero(np.diff(signs) != 0)
    if len(changes) != 1:
        raise BracketError(f"expected one sign change of M'(oo, t) on (0, 2), found {len(changes)}")
    t_star = _bisect_slope(0.5, 1.5, tolerance, nu)
    return t_star, limit_mean_t(t_star, nu, seg)


# ---------------------------------------------------------------------------
# segment [2, 3)


def _m3_on_2_3(t: float) -> float:
    # lambda(3, t) (1 + b(3, 2; t)) with M(2, t) = 1
    return (9.0 + 3.0 * t * t - t**3) / (3.0 * t * (3.0 - t))


@dataclass(frozen=True)
class SegmentBounds:
    t: float
    upper: float
    lower: float
    dprime_lower: float
    m_inf: float
    m_prime: float

    @property
    def mean_bracketed(self) -> bool:
        return self.lower <= self.m_inf <= self.upper

    @property
    def slope_bound_holds(self) -> bool:
        return self.m_prime >= self.dprime_lower


def segment_bounds_2_3(t: float, nu: int | None = None) -> SegmentBounds:
    """Closed-form bounds on ``M(oo, t)`` and ``M'(oo, t)`` for ``t`` in ``[2, 3)``.

    ``upper = 2 e^t / (t (t+2)) + t / (t+2)`` and
    ``lower = (1 + t^2 e^-t / 2 + M(3,t) e^-t (e^t - t^2/2 - t - 1)) / (1 - e^-t)``
    rest on ``M(k, t)`` increasing in ``k``, which only holds near ``t = 2``;
    they bracket the computed limit up to ``t ~ 2.1``.  ``dprime_lower`` is
    returned as published and is *not* a valid bound (it exceeds the true
    slope at ``t = 2``); compare with ``m_prime`` via ``slope_bound_holds``.
    """
    t = _check_t(t)
    if not 2.0 <= t < 3.0:
        raise DomainError(f"t = {t} outside [2, 3)")
    et = math.exp(t)
    emt = math.exp(-t)
    m3 = _m3_on_2_3(t)
    upper = 2.0 * et / (t * (t + 2.0)) + t / (t + 2.0)
    lower = (1.0 + 0.5 * t * t * emt + m3 * emt * (et - 0.5 * t * t - t - 1.0)) / (1.0 - emt)
    dprime_lower = (
        2.0 * et / (t * (t + 2.0))
        - 2.0 * et * (2.0 * et + t * t) / (t * t * (t + 2.0) ** 2)
        + 2.0 * (et - t - 1.0) * m3 / (t + 2.0)
    )
    seg = SegmentSpec.int2to3()
    m, dm = _limit_and_slope(seg.check(t), default_nu(t) if nu is None else nu, seg)
    return SegmentBounds(t, upper, lower, dprime_lower, m, dm)


# ---------------------------------------------------------------------------
# scans


@dataclass
class ParamScan:
    segment: SegmentSpec
    t: np.ndarray
    m: np.ndarray
    dm: np.ndarray
    extremum: tuple[float, float] | None = None
    convexity_ok: bool | None = None
    monotone_ok: bool | None = None
    gaps: list[float] = field(default_factory=list)

    @property
    def samples(self) -> list[tuple[float, float, float]]:
        return list(zip(self.t.tolist(), self.m.tolist(), self.dm.tolist()))


def _grid(seg: SegmentSpec, step: float) -> np.ndarray:
    start = 0 if seg.closed_left else 1
    count = int(math.floor((seg.hi - seg.lo) / step + 1e-9))
    t = np.round(seg.lo + step * np.arange(start, count + 1), 12)
    return t[t < seg.hi - GUARD]


def scan_segment(segment: SegmentSpec, step: float = 0.05, nu: int | None = None) -> ParamScan:
    """Sample ``M(oo, t)`` and ``M'(oo, t)`` on a uniform grid inside ``segment``.

    On ``(0, 2)`` reports strict convexity of the samples (positive second
    differences) and the refined minimiser; elsewhere reports whether the
    samples increase.  Points that fail to evaluate are listed in ``gaps``.
    """
    if not step > 0.0:
        raise DomainError(f"step must be positive, got {step}")
    ts, ms, dms, gaps = [], [], [], []
    for t in _grid(segment, step):
        try:
            m, dm = _limit_and_slope(*_prepare(float(t), nu, segment)[:2], segment)
        except (DomainError, SingularityError):
            gaps.append(float(t))
            continue
        ts.append(float(t))
        ms.append(m)
        dms.append(dm)
    scan = ParamScan(segment, np.array(ts), np.array(ms), np.array(dms), gaps=gaps)
    if len(ts) < 3:
        return scan
    if segment.kind == OPEN02:
        scan.convexity_ok = bool(np.all(np.diff(scan.m, 2) > 0.0)) and not gaps
        i = int(np.argmin(scan.m))
        if 0 < i < len(ts) - 1:
            t_star = _bisect_slope(ts[i - 1], ts[i + 1], 1e-10, nu)
            scan.extremum = (t_star, limit_mean_t(t_star, nu, segment))
    else:
        scan.monotone_ok = bool(np.all(np.diff(scan.m) > 0.0)) and not gaps
    return scan
