"""Bernoulli thinning of a stream and one-pass bottom-u reservoir subsampling."""

from __future__ import annotations

import heapq
from collections import Counter
from typing import Iterable, Literal

import numpy as np

from .sketch import hash_u64

KeyedBy = Literal["position", "element"]


class BernoulliSampler:
    """Keeps each offered position independently with probability ``rate``.

    Draws come from a seeded PCG64 stream, one double per offer, so
    :meth:`offer_many` over a chunk makes exactly the decisions that repeated
    :meth:`offer` calls would.
    """

    def __init__(self, rate: float, seed: int = 0) -> None:
        if not 0.0 < rate <= 1.0:
            raise ValueError(f"sampling rate must be in (0, 1], got {rate}")
        self.rate = rate
        self.seed = seed
        self.emitted = 0
        self.offered = 0
        self._rng = np.random.default_rng(seed)

    def offer(self, element: object = None) -> bool:
        self.offered += 1
        kept = self.rate >= 1.0 or self._rng.random() < self.rate
        if kept:
            self.emitted += 1
        return kept

    def offer_many(self, count: int) -> np.ndarray:
        """Keep-mask for the next ``count`` positions."""
        self.offered += count
        if self.rate >= 1.0:
            mask = np.ones(count, dtype=bool)
        else:
            mask = self._rng.random(count) < self.rate
        self.emitted += int(mask.sum())
        return mask


def bernoulli_offer(sampler: BernoulliSampler, element: object = None) -> bool:
    return sampler.offer(element)


class ReservoirSubsample:
    """Bottom-``u`` subsample of stream positions ordered by (tag, position).

    ``keyed_by="position"`` gives every position an independent uniform 64-bit
    tag, so the retained set is a uniform ``u``-subset of positions.

    ``keyed_by="element"`` uses a seeded hash of the element identifier as the
    tag, so every occurrence of an element shares it.  The reservoir then holds
    all occurrences of the smallest-tag elements (the boundary element may be
    cut short), and the fraction of retained entries whose element appears once
    tracks ``|E1| / l`` of the whole sample.  This is the mode the subsampled
    estimator uses.

    Ties on the tag go to the earlier position.  Entries are kept in a max-heap
    on (tag, position) so each offer is O(log u).
    """

    def __init__(self, capacity: int, seed: int = 0, keyed_by: KeyedBy = "position") -> None:
        if capacity < 1:
            raise ValueError(f"reservoir capacity must be positive, got {capacity}")
        if keyed_by not in ("position", "element"):
            raise ValueError(f"keyed_by must be 'position' or 'element', got {keyed_by!r}")
        self.capacity = capacity
        self.seed = seed
        self.keyed_by = keyed_by
        self.processed = 0
        # heap items: (-tag, -position, identifier)
        self._heap: list[tuple[int, int, int]] = []
        self._bits = np.random.default_rng(seed).bit_generator

    def __len__(self) -> int:
        return len(self._heap)

    def _tags(self, idents: np.ndarray) -> np.ndarray:
        if self.keyed_by == "element":
            return hash_u64(idents, self.seed)
        return np.asarray(self._bits.random_raw(len(idents)), dtype=np.uint64)

    def offer(self, ident: int) -> None:
        self.offer_many(np.array([ident], dtype=np.uint64))

    def offer_many(self, idents: Iterable[int] | np.ndarray) -> None:
        ids = np.asarray(idents, dtype=np.uint64)
        if ids.size == 0:
            return
        tags = self._tags(ids)
        start = self.processed
        self.processed += ids.size
        heap = self._heap
        u = self.capacity

        if len(heap) == u and ids.size > 4 * u:
            # cheap pre-filter: only entries below the current maximum can enter
            worst_tag = -heap[0][0]
            keep = tags <= np.uint64(worst_tag)
            cand = np.flatnonzero(keep)
        else:
            cand = np.arange(ids.size)
        if cand.size > 4 * u:
            # chunk much larger than the reservoir: take its own bottom-u first
            ctags = tags[cand]
            threshold = np.partition(ctags, u - 1)[u - 1]
            cand = cand[ctags <= threshold]
            order = np.lexsort((cand, tags[cand]))[:u]
            cand = cand[order]

        for j in cand.tolist():
            item = (-int(tags[j]), -(start + j), int(ids[j]))
            if len(heap) < u:
                heapq.heappush(heap, item)
            elif item > heap[0]:
                heapq.heapreplace(heap, item)

    def entries(self) -> list[tuple[int, int, int]]:
        """Retained (tag, position, identifier), sorted by (tag, position)."""
        return sorted((-t, -p, i) for t, p, i in self._heap)

    def identifiers(self) -> list[int]:
        return [i for _, _, i in self._heap]

    def positions(self) -> list[int]:
        return sorted(-p for _, p, _ in self._heap)

    def multiplicities(self) -> Counter:
        return Counter(self.identifiers())

    def count_singletons(self) -> int:
        """Number of identifiers occurring exactly once among retained entries."""
        return sum(1 for c in self.multiplicities().values() if c == 1)

    def count_doubletons(self) -> int:
        return sum(1 for c in self.multiplicities().values() if c == 2)

    def prefix_singletons(self, k: int) -> tuple[int, int]:
        """(singletons, size) of the bottom-``k`` reservoir this one contains.

        Bottom-k by (tag, position) is a prefix of bottom-u for ``k <= u``, so a
        single large reservoir answers every smaller capacity exactly.
        """
        if k > self.capacity:
            raise ValueError(f"prefix {k} exceeds capacity {self.capacity}")
        kept = Counter(i for _, _, i in self.entries()[:k])
        return sum(1 for c in kept.values() if c == 1), min(k, len(self._heap))


def reservoir_offer(res: ReservoirSubsample, ident: int) -> ReservoirSubsample:
    res.offer(ident)
    return res


def reservoir_count_singletons(res: ReservoirSubsample) -> int:
    return res.count_singletons()
