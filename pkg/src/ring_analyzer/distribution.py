"""Round-count distribution ``P(n, j) = Pr[X(n) = j]`` and its j -> oo tail."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .asymptotics import DEFAULT_NU, EM1, poisson_weights
from .errors import DomainError, SingularityError
from .exact import _check_int, _check_t, _stay_prob, binomial_weights

__all__ = [
    "RoundDistribution",
    "TailLaw",
    "distribution_table",
    "exact_distribution",
    "limit_distribution",
    "residues",
    "tail_law",
]

DEFAULT_J_MAX = 40
_TINY = 1e-300


@dataclass(frozen=True)
class RoundDistribution:
    """``probs[j - 1] = P(n, j)`` for ``j = 1..j_max``.

    ``n`` is ``math.inf`` for the limiting law.  ``tail_mass`` is the
    probability of more than ``j_max`` rounds.
    """

    n: float
    j_max: int
    probs: np.ndarray
    tail_mass: float

    def moment(self, power: int = 1) -> float:
        j = np.arange(1, self.j_max + 1, dtype=float)
        return float((j**power) @ self.probs)


@lru_cache(maxsize=32)
def _table(n_max: int, j_max: int, t: float) -> np.ndarray:
    P = np.zeros((n_max + 1, j_max + 1))
    if n_max >= 1:
        P[1, 0] = 1.0  # X(1) = 0
    for n in range(2, n_max + 1):
        w = binomial_weights(n, t)
        stay = _stay_prob(n, t / n)
        support = np.flatnonzero(w[2:n]) + 2
        hi = support[-1] + 1 if support.size else 2
        # contributions from strictly smaller active counts
        cross = w[2:hi] @ P[2:hi, :j_max]
        P[n, 1] = w[1]
        for j in range(2, j_max + 1):
            P[n, j] = (stay + w[n]) * P[n, j - 1] + cross[j - 1]
    P[P < _TINY] = 0.0
    P.flags.writeable = False
    return P


def distribution_table(n_max: int, j_max: int = DEFAULT_J_MAX, t: float = 1.0) -> np.ndarray:
    """Array ``P[n, j]`` for ``n = 0..n_max`` and ``j = 0..j_max``.

    Row ``n`` follows ``P(n, 1) = b(n, 1; t)`` and, for ``j > 1``,
    ``P(n, j) = (1 - t/n)^n P(n, j-1) + sum_{k=2..n} b(n, k; t) P(k, j-1)``.
    Requires ``0 < t < 2`` so every reachable active count can elect.
    """
    n_max = _check_int("n_max", n_max, 1)
    j_max = _check_int("j_max", j_max, 1)
    t = _check_t(t)
    if t >= 2.0 and n_max >= 2:
        raise DomainError(f"t = {t} >= 2: two active processors can never elect")
    if t == 0.0 and n_max >= 2:
        raise SingularityError("t = 0: no processor ever stands")
    return _table(n_max, j_max, t)


def exact_distribution(n: int, j_max: int = DEFAULT_J_MAX, t: float = 1.0) -> RoundDistribution:
    """Distribution of ``X(n)`` truncated at ``j_max`` rounds.

    >>> exact_distribution(2, 3).probs
    array([0.5  , 0.25 , 0.125])
    """
    n = _check_int("n", n, 2)
    P = distribution_table(n, j_max, t)
    probs = P[n, 1:].copy()
    return RoundDistribution(n, j_max, probs, max(0.0, 1.0 - float(probs.sum())))


def limit_distribution(j_max: int = DEFAULT_J_MAX, nu: int = DEFAULT_NU) -> RoundDistribution:
    """``P(oo, j)`` from ``P(oo, 1) = e^-1`` and
    ``P(oo, j) = e^-1 P(oo, j-1) + sum_{k=2..nu} e^-1/k! P(k, j-1)``.
    """
    j_max = _check_int("j_max", j_max, 1)
    nu = _check_int("nu", nu, 2)
    P = distribution_table(nu, j_max, 1.0)
    w = poisson_weights(nu)
    D = w[2:] @ P[2:, :]
    out = np.zeros(j_max + 1)
    out[1] = EM1
    for j in range(2, j_max + 1):
        out[j] = EM1 * out[j - 1] + D[j - 1]
    probs = out[1:]
    probs[probs < _TINY] = 0.0
    return RoundDistribution(math.inf, j_max, probs, max(0.0, 1.0 - float(probs.sum())))


def residues(k_max: int) -> np.ndarray:
    """``R(k) = lim_{z->2} (1 - z/2) sum_j P(k, j) z^j`` for ``k = 0..k_max``.

    Every ``P(k, .)`` decays like ``R(k) 2^-j`` because two survivors elect
    with probability 1/2 per round.  ``R(2) = 1`` and, for ``k >= 3``,
    ``R(k) (1 - 2 (1-1/k)^k - 2 b(k,k)) = 2 sum_{l=2..k-1} b(k, l) R(l)``.
    Entries 0 and 1 are unused (zero).
    """
    k_max = _check_int("k_max", k_max, 2)
    R = np.zeros(k_max + 1)
    R[2] = 1.0
    for k in range(3, k_max + 1):
        w = binomial_weights(k, 1.0)
        lhs = 1.0 - 2.0 * _stay_prob(k, 1.0 / k) - 2.0 * w[k]
        if lhs <= 1e-15:
            raise SingularityError(f"residue equation degenerate at k = {k}")
        R[k] = 2.0 * (w[2:k] @ R[2:k]) / lhs
    return R


@dataclass(frozen=True)
class TailLaw:
    """``P(oo, j) ~ coefficient * base**j`` as ``j -> oo``."""

    rho: float
    coefficient: float
    base: float = 0.5

    def __call__(self, j):
        return self.coefficient * np.power(self.base, j)


def tail_law(k_max: int = 15) -> TailLaw:
    """``rho = sum_{k=2..k_max} e^-1/k! R(k)``; coefficient ``2 rho / (1 - 2/e)``."""
    R = residues(k_max)
    rho = float(poisson_weights(k_max)[2:] @ R[2:])
    return TailLaw(rho, 2.0 * rho / (1.0 - 2.0 * EM1))
