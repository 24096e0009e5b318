"""Monte Carlo simulation of the Itai-Rodeh election on an anonymous ring.

Each round, every active processor stands with probability ``t / n``; each
candidate's pebble then travels once around the ring (``N`` hops), which is
how the active processors learn the new count.  One candidate is the leader;
zero candidates repeat the round with the same active set; otherwise the
candidates become the new active set.

Randomness: trial ``i`` of a run seeded with ``master_seed`` draws from
``PCG64(SeedSequence(master_seed, spawn_key=(i,)))``.  Trials are therefore
independent of one another and of how they are scheduled across workers.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError, LivelockError
from .exact import _check_int, _check_t, mean_rounds
from .optimizer import SegmentSpec

__all__ = [
    "RNG_NAME",
    "SimConfig",
    "SimReport",
    "empirical_t_curve",
    "run_election",
    "simulate",
    "trial_rng",
]

RNG_NAME = "numpy PCG64 via SeedSequence(master_seed, spawn_key=(trial,))"
MAX_ROUNDS = 10**6
THREADS_ENV = "RING_ANALYZER_THREADS"


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(trial,))))


def run_election(
    n_active: int,
    t: float,
    rng: np.random.Generator,
    ring_size: int | None = None,
    fixed: Mapping[int, float] | None = None,
    per_processor: bool = False,
    max_rounds: int = MAX_ROUNDS,
    trace: list | None = None,
) -> tuple[int, int]:
    """Run one election; return ``(rounds, pebble_hops)``.

    ``fixed`` maps active counts at which the protocol cannot break symmetry
    to a conventional number of further rounds; every active processor is
    then taken to stand in each of those rounds.  With ``per_processor`` the
    candidate count is built from individual coin flips instead of a single
    binomial draw.  ``trace``, if given, receives ``(n, k, hops)`` per round.
    """
    n = _check_int("n_active", n_active, 1)
    t = _check_t(t)
    N = n if ring_size is None else _check_int("ring_size", ring_size, n)
    fixed = fixed or {}
    rounds = 0
    hops = 0
    while n > 1:
        if n in fixed:
            extra = int(fixed[n])
            rounds += extra
            hops += extra * n * N
            if trace is not None:
                trace.extend((n, n, n * N) for _ in range(extra))
            break
        p = t / n
        if p > 1.0:
            raise DomainError(f"candidacy probability t/n = {t}/{n} exceeds 1")
        if rounds >= max_rounds:
            raise LivelockError(f"no leader after {max_rounds} rounds (n = {n}, t = {t})")
        if per_processor:
            k = int(np.count_nonzero(rng.random(n) < p))
        else:
            k = int(rng.binomial(n, p))
        rounds += 1
        hops += k * N
        if trace is not None:
            trace.append((n, k, k * N))
        if k == 1:
            break
        if k >= 2:
            n = k
    return rounds, hops


@dataclass(frozen=True)
class SimConfig:
    ring_size: int
    t: float = 1.0
    trials: int = 10_000
    master_seed: int = 0
    j_max: int = 40
    segment: str | None = None
    per_processor: bool = False

    def __post_init__(self):
        _check_int("ring_size", self.ring_size, 1)
        _check_int("trials", self.trials, 1)
        _check_int("j_max", self.j_max, 1)
        _check_int("master_seed", self.master_seed, 0)
        t = _check_t(self.t)
        if self.master_seed >= 2**64:
            raise DomainError("master_seed must fit in 64 bits")
        if t == 0.0 and self.ring_size > 1:
            raise DomainError("t = 0: no processor ever stands")
        if self.segment is None and t >= 2.0 and self.ring_size >= 2:
            raise DomainError(f"t = {t} >= 2 needs a segment convention for small rings")
        if t > self.ring_size and self.ring_size > 1:
            raise DomainError(f"t = {t} exceeds the ring size")

    @property
    def fixed(self) -> dict[int, float]:
        if self.segment is None:
            return {}
        seg = SegmentSpec.parse(self.segment)
        seg.check(self.t)
        return seg.fixed


@dataclass
class SimReport:
    config: SimConfig
    trials_run: int
    mean_rounds: float
    mean_rounds_se: float
    round_histogram: np.ndarray  # fraction of trials with j rounds, j = 1..j_max
    tail_fraction: float  # fraction with more than j_max rounds
    tail_contribution: float  # sum over those trials of rounds / trials_run
    mean_bits: float
    mean_bits_se: float
    bits_minus_rounds: float  # mean of hops/N - rounds per trial
    bits_minus_rounds_se: float
    analytic_mean: float | None
    z_score: float | None
    rng: str = RNG_NAME
    numpy_version: str = np.__version__
    guard_trips: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def bit_ratio(self) -> float:
        """Mean pebble hops per round per ring link."""
        return self.mean_bits / (self.config.ring_size * self.mean_rounds)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["round_histogram"] = self.round_histogram.tolist()
        d["bit_ratio"] = self.bit_ratio
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _run_chunk(args) -> tuple[np.ndarray, np.ndarray, int]:
    cfg, start, stop = args
    fixed = cfg.fixed
    rounds = np.zeros(stop - start, dtype=np.int64)
    hops = np.zeros(stop - start, dtype=np.int64)
    trips = 0
    for i in range(start, stop):
        try:
            r, h = run_election(
                cfg.ring_size, cfg.t, trial_rng(cfg.master_seed, i), fixed=fixed,
                per_processor=cfg.per_processor,
            )
        except LivelockError:
            r, h = -1, -1
            trips += 1
        rounds[i - start] = r
        hops[i - start] = h
    return rounds, hops, trips


def _workers(requested: int | None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else 1


def _se(x: np.ndarray) -> float:
    return float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else math.nan


def simulate(config: SimConfig, workers: int | None = None) -> SimReport:
    """Run ``config.trials`` elections and summarise them.

    ``analytic_mean`` is the exact ``M(N, t)``; ``z_score`` measures the
    simulated mean against it in standard errors.  Trials that trip the round
    guard are dropped and counted in ``guard_trips``.
    """
    nw = _workers(workers)
    bounds = np.linspace(0, config.trials, min(nw, config.trials) + 1).astype(int)
    chunks = [(config, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
    if nw > 1:
        with ProcessPoolExecutor(nw) as ex:
            parts = list(ex.map(_run_chunk, chunks))
    else:
        parts = [_run_chunk(c) for c in chunks]
    rounds = np.concatenate([p[0] for p in parts])
    hops = np.concatenate([p[1] for p in parts])
    trips = sum(p[2] for p in parts)
    ok = rounds >= 0
    rounds, hops = rounds[ok], hops[ok]
    n_ok = len(rounds)
    N = config.ring_size
    counts = np.bincount(rounds, minlength=config.j_max + 1)
    hist = counts[1 : config.j_max + 1] / n_ok
    over = rounds > config.j_max
    bits = hops / N
    mean_r = float(rounds.mean())
    se_r = _se(rounds.astype(float))
    try:
        analytic = mean_rounds(N, config.t, config.fixed).mean
    except (DomainError, ArithmeticError):
        analytic = None
    z = None
    if analytic is not None and se_r and se_r > 0:
        z = (mean_r - analytic) / se_r
    notes = []
    if trips:
        notes.append(f"{trips} trials exceeded {MAX_ROUNDS} rounds and were dropped")
    diff = bits - rounds
    return SimReport(
        config=config,
        trials_run=n_ok,
        mean_rounds=mean_r,
        mean_rounds_se=se_r,
        round_histogram=hist,
        tail_fraction=float(over.mean()),
        tail_contribution=float(rounds[over].sum() / n_ok),
        mean_bits=float(hops.mean()),
        mean_bits_se=_se(hops.astype(float)),
        bits_minus_rounds=float(diff.mean()),
        bits_minus_rounds_se=_se(diff),
        analytic_mean=analytic,
        z_score=z,
        guard_trips=trips,
        notes=notes,
    )


def empirical_t_curve(
    N: int,
    t_grid: Sequence[float],
    trials: int,
    master_seed: int = 0,
    workers: int | None = None,
) -> list[tuple[float, float, float]]:
    """Simulated mean rounds at each ``t`` in ``t_grid`` (all in ``(0, 2)``).

    Every ``t`` reuses the same per-trial seed stream, so differences between
    grid points are not swamped by independent sampling noise.
    """
    out = []
    for t in t_grid:
        if not 0.0 < t < 2.0:
            raise DomainError(f"t = {t} outside (0, 2)")
        rep = simulate(SimConfig(N, t, trials, master_seed, j_max=1), workers)
        out.append((float(t), rep.mean_rounds, rep.mean_rounds_se))
    return out
