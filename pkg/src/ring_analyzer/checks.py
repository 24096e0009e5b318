"""Acceptance checks against published constants and the Monte Carlo oracle.

Each check returns ``(passed, detail)``; :func:`run_checks` adds timing and
enforces the runtime budget attached to each criterion.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import chi2

from .asymptotics import (
    asym_constants,
    bound_sequence,
    correction_c1,
    correction_c2_fit,
    limit_mean,
    limit_second_moment,
)
from .distribution import exact_distribution, limit_distribution, tail_law
from .exact import mean_rounds, round_table
from .optimizer import SegmentSpec, find_t_star, limit_mean_derivative_t, limit_mean_t
from .simulator import SimConfig, simulate

# published values
M_INF = 2.441715879
M2_INF = 8.794530817
VAR_INF = 2.832554383
C1 = -0.7438715372
C2 = -0.1974635346
P_INF = [
    0.3678794411, 0.2625161028, 0.1634224110, 0.0946536614, 0.0524658088,
    0.0282518527, 0.0149122813, 0.0077602315, 0.0039970064, 0.0020432067,
    0.0010386252, 0.0005257697, 0.0002653262,
]
RHO = 0.2950911517
TAIL_COEF = 2.233499118
T_STAR = 1.0654388051
M_STAR = 2.4348109638
GAIN_PERCENT = 0.28
M_INF_2_RANGE = (2.2797, 2.34726)
SLOPE_FLOOR_2_3 = 2.26605840

SIM_SEED = 7
SIM_TRIALS = 100_000


@dataclass(frozen=True)
class CheckResult:
    key: str
    title: str
    passed: bool
    detail: str
    seconds: float
    budget: float


def _close(name: str, got: float, want: float, tol: float) -> tuple[bool, str]:
    err = abs(got - want)
    return err <= tol, f"{name}={got:.12g} (want {want} +- {tol:g}, err {err:.2g})"


def _all(parts: list[tuple[bool, str]]) -> tuple[bool, str]:
    return all(p for p, _ in parts), "; ".join(d for _, d in parts)


def check_limit_mean():
    return _close("M_inf", limit_mean(30).m_inf, M_INF, 1e-9)


def check_second_moment():
    r = limit_second_moment(30)
    return _all([_close("M2_inf", r.m2_inf, M2_INF, 1e-8), _close("var_inf", r.var_inf, VAR_INF, 1e-8)])


def check_corrections():
    return _all([
        _close("C1", correction_c1(30), C1, 1e-8),
        _close("C2_fit[250,300]", correction_c2_fit(250, 300), C2, 2e-3),
    ])


def check_limit_distribution():
    probs = limit_distribution(13, 30).probs
    err = np.abs(probs - np.array(P_INF))
    worst = int(np.argmax(err))
    return bool(np.all(err <= 1e-9)), f"max |P(oo,j) - published| = {err[worst]:.2g} at j={worst + 1} (tol 1e-9)"


def check_tail_law():
    law = tail_law(15)
    p25 = limit_distribution(25, 30).probs[24]
    return _all([
        _close("rho", law.rho, RHO, 1e-9),
        _close("coef", law.coefficient, TAIL_COEF, 1e-8),
        _close("P(oo,25)/(coef 2^-25)", p25 / law(25), 1.0, 1e-3),
    ])


def check_t_star():
    t_star, m_star = find_t_star(1e-10)
    m1 = limit_mean_t(1.0)
    gain = 100.0 * (m1 - m_star) / m1
    return _all([
        _close("t*", t_star, T_STAR, 1e-6),
        _close("M(oo,t*)", m_star, M_STAR, 1e-8),
        _close("gain%", gain, GAIN_PERCENT, 0.01),
    ])


def check_segment_value():
    m2 = limit_mean_t(2.0, segment=SegmentSpec.int2to3())
    lo, hi = M_INF_2_RANGE
    return lo <= m2 <= hi, f"M(oo,2)={m2:.10g} in [{lo}, {hi}]"


def check_segment_slope():
    seg = SegmentSpec.int2to3()
    grid = np.round(2.0 + 0.05 * np.arange(20), 12)
    slopes = np.array([limit_mean_derivative_t(float(t), segment=seg) for t in grid])
    bad = grid[slopes <= SLOPE_FLOOR_2_3]
    i = int(np.argmin(slopes))
    detail = f"min M'(oo,t)={slopes[i]:.10g} at t={grid[i]:g} (want > {SLOPE_FLOOR_2_3})"
    if bad.size:
        detail += f"; violated at {bad.size}/{grid.size} grid points t in [{bad.min():g}, {bad.max():g}]"
    return not bad.size, detail


def check_convexity():
    # grid [0.1, 1.9] at step 0.02
    t = np.round(0.1 + 0.02 * np.arange(91), 12)
    m = np.array([limit_mean_t(float(x)) for x in t])
    d2 = np.diff(m, 2)
    return bool(np.all(d2 > 0.0)), f"min second difference {d2.min():.3g} over {d2.size} triples"


def check_simulation(trials: int = SIM_TRIALS, seed: int = SIM_SEED):
    N = 10_000
    rep = simulate(SimConfig(N, 1.0, trials, seed, j_max=10))
    exact = mean_rounds(N, 1.0).mean
    z_mean = (rep.mean_rounds - exact) / rep.mean_rounds_se
    dist = exact_distribution(N, 10, 1.0)
    expected = np.append(dist.probs, dist.tail_mass) * rep.trials_run
    observed = np.append(rep.round_histogram, rep.tail_fraction) * rep.trials_run
    stat = float(((observed - expected) ** 2 / expected).sum())
    q = float(chi2.ppf(0.999, len(expected) - 1))
    z_bits = rep.bits_minus_rounds / rep.bits_minus_rounds_se
    return _all([
        (abs(z_mean) < 3.0, f"mean {rep.mean_rounds:.5f} vs M(1e4,1)={exact:.5f}, z={z_mean:.2f}"),
        (stat < q, f"chi2={stat:.2f} < q999={q:.2f}"),
        (abs(z_bits) < 3.0, f"bits/N - rounds = {rep.bits_minus_rounds:.4f}, z={z_bits:.2f}"),
    ])


def check_small_cases(trials: int = SIM_TRIALS, seed: int = SIM_SEED):
    rep = simulate(SimConfig(2, 1.0, trials, seed, j_max=10))
    j = np.arange(1, 11)
    p = 0.5**j
    se = np.sqrt(p * (1 - p) / rep.trials_run)
    z = (rep.round_histogram - p) / se
    ts = np.linspace(0.05, 1.95, 39)
    m2 = np.array([mean_rounds(2, float(t)).mean for t in ts])
    m3 = np.array([mean_rounds(3, float(t)).mean for t in ts])
    e2 = np.max(np.abs(m2 - 2.0 / (ts * (2.0 - ts))))
    e3 = np.max(np.abs(m3 - (18.0 - 3.0 * ts - 2.0 * ts**2) / (3.0 * ts * (2.0 - ts) * (3.0 - ts))))
    return _all([
        (bool(np.all(np.abs(z) < 3.0)), f"N=2 histogram max |z| = {np.abs(z).max():.2f} over j=1..10"),
        (e2 <= 1e-12, f"M(2,t) closed form err {e2:.2g}"),
        (e3 <= 1e-12, f"M(3,t) closed form err {e3:.2g}"),
    ])


def check_moment_identities():
    dist = limit_distribution(60, 30)
    ref = limit_second_moment(30)
    s1 = dist.moment(1)
    s2 = dist.moment(2)
    return _all([
        _close("sum j P", s1, M_INF, 1e-8),
        _close("sum j^2 P", s2, M2_INF, 1e-7),
        _close("sum j P - M_inf(computed)", s1 - ref.m_inf, 0.0, 1e-8),
        _close("sum j^2 P - M2_inf(computed)", s2 - ref.m2_inf, 0.0, 1e-7),
    ])


def check_bounds():
    seq = bound_sequence(10_000)
    M = round_table(1000, 1.0).mean
    B = np.array([s.b_n for s in seq[:1000]])
    excess = float(np.max(M[1:] - B))
    c = asym_constants()
    target = c.c1 * c.c6
    scaled = seq[-1].n * seq[-1].delta_n
    rel = abs(scaled / target - 1.0)
    return _all([
        (excess <= 1e-12, f"max M(n)-B(n) over n<=1000 = {excess:.2g}"),
        (rel <= 0.01, f"n Delta(n) at 1e4 = {scaled:.6f} vs c1 c6 = {target:.6f} (rel {rel:.2g})"),
    ])


# (key, title, check, runtime budget in seconds; inf where none is set)
CRITERIA: list[tuple[str, str, Callable, float]] = [
    ("1", "M(oo) limit", check_limit_mean, 1.0),
    ("2", "second moment and variance", check_second_moment, 1.0),
    ("3", "C1 closed form, C2 fit", check_corrections, 5.0),
    ("4", "P(oo, 1..13)", check_limit_distribution, 1.0),
    ("5", "rho, tail coefficient, 2^-j regime", check_tail_law, 1.0),
    ("6", "t*, M(oo, t*), relative gain", check_t_star, 10.0),
    ("7a", "M(oo, 2) on [2, 3)", check_segment_value, 10.0),
    ("7b", "M'(oo, t) > 2.26605840 on [2, 2.95]", check_segment_slope, 10.0),
    ("8", "convexity of M(oo, t) on [0.1, 1.9]", check_convexity, 30.0),
    ("9", "simulation vs exact at N = 1e4", check_simulation, 300.0),
    ("10", "small-case exactness", check_small_cases, math.inf),
    ("11", "moment identities from P(oo, j)", check_moment_identities, math.inf),
    ("12", "B(n) bound and Delta(n) rate", check_bounds, math.inf),
]


def run_check(key: str) -> CheckResult:
    for k, title, fn, budget in CRITERIA:
        if k == key:
            start = time.perf_counter()
            try:
                passed, detail = fn()
            except Exception as exc:  # a crash is a failed check, not an aborted run
                passed, detail = False, f"{type(exc).__name__}: {exc}"
            secs = time.perf_counter() - start
            if secs > budget:
                passed = False
                detail += f"; took {secs:.1f}s > {budget:g}s budget"
            return CheckResult(k, title, bool(passed), detail, secs, budget)
    raise KeyError(key)


def run_checks(keys=None) -> list[CheckResult]:
    keys = [k for k, *_ in CRITERIA] if keys is None else keys
    return [run_check(k) for k in keys]


def format_result(r: CheckResult) -> str:
    status = "PASS" if r.passed else "FAIL"
    return f"[{status}] {r.key:>3} {r.title}: {r.detail} ({r.seconds:.2f}s)"
