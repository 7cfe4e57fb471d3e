"""Closed-form unseen/once-seen probabilities, asymptotic relative variances
of the two corrected estimators, and the sketch/reservoir budget split.

All functions are pure.  ``are`` is the asymptotic relative efficiency of the
cardinality sketch: the sketch contributes ``1 / (are * m)`` to the relative
variance.  ``are=1`` is the idealized ``1/m`` term; HyperLogLog is
``HLL_ARE = 1/1.08``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

HLL_ARE = 1.0 / 1.08

P0Source = Literal["mass", "distinct", "coverage"]
P0_SOURCES = ("mass", "distinct", "coverage")


class InfeasibleBudget(ValueError):
    pass


def _freqs(freqs: Sequence[int] | np.ndarray) -> np.ndarray:
    f = np.asarray(freqs, dtype=np.float64)
    if f.size == 0:
        raise ValueError("frequency list is empty")
    if np.any(f <= 0):
        raise ValueError("frequencies must be positive")
    return f


def _check_rate(P: float) -> None:
    if not 0.0 < P <= 1.0:
        raise ValueError(f"sampling rate must be in (0, 1], got {P}")


def expected_p0(freqs, P: float, exact: bool = False) -> float:
    """Expected fraction of distinct elements never sampled.

    Default is the small-``P`` limit ``mean(exp(-P f))``; ``exact=True`` gives
    the finite-``P`` value ``mean((1 - P)^f)``.
    """
    f = _freqs(freqs)
    _check_rate(P)
    if exact:
        return float(np.mean(np.exp(f * math.log1p(-P)))) if P < 1 else 0.0
    return float(np.mean(np.exp(-P * f)))


def expected_p1(freqs, P: float, exact: bool = False) -> float:
    """Expected fraction of distinct elements sampled exactly once.

    Limit form ``P * mean(f exp(-P f))``; exact form ``mean(f P (1-P)^(f-1))``.
    """
    f = _freqs(freqs)
    _check_rate(P)
    if exact:
        if P >= 1:
            return float(np.mean(f == 1))
        return float(np.mean(f * P * np.exp((f - 1) * math.log1p(-P))))
    return float(P * np.mean(f * np.exp(-P * f)))


def expected_unseen_mass(freqs, P: float, exact: bool = False) -> float:
    """Occurrence-weighted share of the stream belonging to unsampled elements.

    This is the limit of the Good-Turing statistic ``|E1| / l``:
    ``sum(f exp(-P f)) / sum(f)``, or ``sum(f (1-P)^(f-1)) / sum(f)`` exactly.
    It equals :func:`expected_p0` only when all frequencies are equal.
    """
    f = _freqs(freqs)
    _check_rate(P)
    if exact:
        if P >= 1:
            return float(np.sum(f == 1) / np.sum(f))
        return float(np.sum(f * np.exp((f - 1) * math.log1p(-P))) / np.sum(f))
    return float(np.sum(f * np.exp(-P * f)) / np.sum(f))


def expected_singleton_mass(freqs, P: float, exact: bool = False) -> float:
    """Occurrence-weighted share of the stream belonging to elements sampled once.

    Limit of the Good-Turing statistic ``2 |E2| / l``:
    ``sum(f P f exp(-P f)) / sum(f)``; exactly, ``sum(f (f-1) P (1-P)^(f-2)) / sum(f)``.
    """
    f = _freqs(freqs)
    _check_rate(P)
    if exact:
        if P >= 1:
            return float(np.sum(f * (f == 2)) / np.sum(f))
        w = f * (f - 1) * P * np.exp(np.maximum(f - 2, 0) * math.log1p(-P))
        return float(np.sum(w) / np.sum(f))
    return float(np.sum(f * P * f * np.exp(-P * f)) / np.sum(f))


def plugin_probabilities(freqs, P: float, p0_source: P0Source = "mass",
                         exact: bool = False) -> tuple[float, float]:
    """(p0, p1) to plug into the variance formulas for a frequency profile.

    ``"mass"``: p0 from :func:`expected_unseen_mass` (what ``|E1|/l``
    converges to), p1 from :func:`expected_p1`.  ``"distinct"``: both per
    distinct element, :func:`expected_p0` and :func:`expected_p1`.
    ``"coverage"``: both occurrence-weighted, :func:`expected_unseen_mass`
    and :func:`expected_singleton_mass`; this pair is the limit of the
    run's own Good-Turing statistics and predicts the spread of the
    correction factor most closely.
    """
    if p0_source == "mass":
        return expected_unseen_mass(freqs, P, exact), expected_p1(freqs, P, exact)
    if p0_source == "distinct":
        return expected_p0(freqs, P, exact), expected_p1(freqs, P, exact)
    if p0_source == "coverage":
        return expected_unseen_mass(freqs, P, exact), expected_singleton_mass(freqs, P, exact)
    raise ValueError(f"unknown p0 source {p0_source!r}")


def _check_p0(p0: float) -> None:
    if not 0.0 <= p0 < 1.0:
        raise ValueError(f"p0 must be in [0, 1), got {p0}")


def correction_variance_alg1(p0: float, p1: float, l: float) -> float:
    _check_p0(p0)
    return (p0 * (1 - p0) + p1) / (1 - p0) ** 2 / l


def correction_variance_alg2(p0: float, p1: float, u: float) -> float:
    _check_p0(p0)
    return (2 * p0 * (1 - p0) + p1) / (1 - p0) ** 2 / u


def rel_variance_alg1(p0: float, p1: float, l: float, m: float, are: float = 1.0) -> float:
    """Relative variance of the exact-tally estimator:
    ``(p0(1-p0) + p1) / ((1-p0)^2 l) + 1/(are m)``."""
    if l < 1 or m < 1 or are <= 0:
        raise ValueError("need l >= 1, m >= 1, are > 0")
    return correction_variance_alg1(p0, p1, l) + 1.0 / (are * m)


def rel_variance_alg2(p0: float, p1: float, u: float, m: float, are: float = 1.0) -> float:
    """Relative variance of the subsampled estimator:
    ``(2 p0(1-p0) + p1) / ((1-p0)^2 u) + 1/(are m)``."""
    if u < 1 or m < 1 or are <= 0:
        raise ValueError("need u >= 1, m >= 1, are > 0")
    return correction_variance_alg2(p0, p1, u) + 1.0 / (are * m)


@dataclass(frozen=True)
class BudgetSplit:
    B: int
    m: int
    u: int
    predicted_rel_variance: float


def optimal_split(B: int, p0: float, p1: float, are: float = 1.0) -> BudgetSplit:
    """Integer ``m + u = B`` minimizing :func:`rel_variance_alg2`.

    Setting the derivative of ``A/u + 1/(are m)`` to zero gives
    ``u/m = sqrt(are A)``.  Both integer neighbours of the real optimum are
    scored; ties go to the larger ``m``.
    """
    if B < 2:
        raise InfeasibleBudget(f"budget must be at least 2 units, got {B}")
    _check_p0(p0)
    if are <= 0:
        raise ValueError("are must be positive")
    B = int(B)
    a = (2 * p0 * (1 - p0) + p1) / (1 - p0) ** 2
    root = math.sqrt(are * a)
    u_star = B * root / (1 + root)
    candidates = {min(max(u, 1), B - 1) for u in (math.floor(u_star), math.ceil(u_star))}
    best = None
    for u in sorted(candidates):
        v = rel_variance_alg2(p0, p1, u, B - u, are)
        if best is None or v < best[0]:
            best = (v, u)
    v, u = best
    return BudgetSplit(B=B, m=B - u, u=u, predicted_rel_variance=v)


def scan_split(B: int, p0: float, p1: float, are: float = 1.0) -> BudgetSplit:
    """Exhaustive search over every integer split; reference for :func:`optimal_split`."""
    if B < 2:
        raise InfeasibleBudget(f"budget must be at least 2 units, got {B}")
    u = np.arange(1, B, dtype=np.float64)
    a = (2 * p0 * (1 - p0) + p1) / (1 - p0) ** 2
    v = a / u + 1.0 / (are * (B - u))
    k = int(np.argmin(v))
    return BudgetSplit(B=B, m=int(B - u[k]), u=int(u[k]), predicted_rel_variance=float(v[k]))
