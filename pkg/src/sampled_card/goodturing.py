"""Exact Good-Turing tallies over a sample and the unseen-mass estimate."""

from __future__ import annotations

from typing import Iterable

import numpy as np

CAP = 3


class EmptySample(ValueError):
    """Raised when an estimate needs at least one sampled element."""


class SampleSummary:
    """Running tallies of sample length and of once/twice-seen identifiers.

    By default per-identifier counts saturate at 3, which is all the
    singleton and doubleton counts need.  ``capped=False`` keeps exact
    multiplicities, needed for :func:`gt_frequency` with ``i >= 2``.
    """

    def __init__(self, capped: bool = True) -> None:
        self.capped = capped
        self.l = 0
        self.e1 = 0
        self.e2 = 0
        self.counts: dict[int, int] = {}

    def __repr__(self) -> str:
        return f"SampleSummary(l={self.l}, e1={self.e1}, e2={self.e2}, distinct={len(self.counts)})"

    def _bump(self, ident: int, by: int) -> None:
        old = self.counts.get(ident, 0)
        new = old + by
        if self.capped and new > CAP:
            new = CAP
        if old == 1:
            self.e1 -= 1
        elif old == 2:
            self.e2 -= 1
        if new == 1:
            self.e1 += 1
        elif new == 2:
            self.e2 += 1
        self.counts[ident] = new

    def offer(self, ident: int) -> None:
        self.l += 1
        self._bump(int(ident), 1)

    def offer_many(self, idents: Iterable[int] | np.ndarray) -> None:
        ids = np.asarray(idents, dtype=np.uint64)
        if ids.size == 0:
            return
        self.l += int(ids.size)
        uniq, cnt = np.unique(ids, return_counts=True)
        for ident, c in zip(uniq.tolist(), cnt.tolist()):
            self._bump(ident, c)

    @property
    def distinct(self) -> int:
        return len(self.counts)

    def frequency_of_frequencies(self) -> dict[int, int]:
        """``{i: |E_i|}``; the top bucket means ">= 3" in capped mode."""
        out: dict[int, int] = {}
        for c in self.counts.values():
            out[c] = out.get(c, 0) + 1
        return out


def summary_offer(s: SampleSummary, ident: int) -> SampleSummary:
    s.offer(ident)
    return s


def _require_nonempty(s: SampleSummary) -> None:
    if s.l == 0:
        raise EmptySample("sample is empty")


def p0_hat(s: SampleSummary) -> float:
    """Good-Turing unseen mass, ``|E1| / l``."""
    _require_nonempty(s)
    return s.e1 / s.l


def gt_frequency(s: SampleSummary, i: int) -> float:
    """Good-Turing estimate ``(i + 1) |E_{i+1}| / l``."""
    _require_nonempty(s)
    if i < 0:
        raise ValueError("i must be nonnegative")
    k = i + 1
    if k == 1:
        count = s.e1
    elif k == 2:
        count = s.e2
    elif s.capped:
        raise ValueError(f"|E_{k}| needs an uncapped summary (capped=False)")
    else:
        count = sum(1 for c in s.counts.values() if c == k)
    return k * count / s.l


def p0_variance_from_counts(e1: int, e2: int, l: int) -> float:
    if l == 0:
        raise EmptySample("sample is empty")
    a = e1 / l
    return max((e1 + 2 * e2) / l - a * a, 0.0) / l


def p0_empirical_variance(s: SampleSummary) -> float:
    """Asymptotic variance of ``|E1|/l``: ``((|E1| + 2|E2|)/l - (|E1|/l)^2) / l``."""
    _require_nonempty(s)
    return p0_variance_from_counts(s.e1, s.e2, s.l)
