"""Synthetic sampled streams and multi-trial Monte-Carlo runs.

The full stream is never materialized.  Element ``i`` occurs ``f_i`` times in
the full stream, so under Bernoulli(P) thinning it occurs
``Binomial(f_i, P)`` times in the sample; the generator draws those counts
directly and lays the occurrences out in a shuffled order.

Trial ``t`` of a run is driven entirely by ``default_rng(base_seed + t)``.
:func:`run_grid` evaluates several (algorithm, m, u) settings on the same
trial streams, and each setting gets exactly the numbers :func:`run_trials`
would give it alone.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence, Union

import numpy as np

from .estimators import DegenerateSample, corrected_estimate
from .goodturing import SampleSummary
from .sampling import ReservoirSubsample
from .sketch import HllSketch, hash_u64

Algorithm = Literal["alg1", "alg2", "naive"]


class AllTrialsDegenerate(RuntimeError):
    pass


@dataclass(frozen=True)
class UniformModel:
    lo: int
    hi: int

    def __post_init__(self) -> None:
        if self.lo < 1 or self.hi < self.lo:
            raise ValueError(f"uniform model needs 1 <= lo <= hi, got {self.lo}, {self.hi}")

    @property
    def label(self) -> str:
        return f"uniform:{self.lo}:{self.hi}"

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(self.lo, self.hi + 1, size=n, dtype=np.int64)

    def quantile_grid(self, k: int = 10_000) -> np.ndarray:
        q = (np.arange(k) + 0.5) / k
        return self.lo + np.floor(q * (self.hi - self.lo + 1)).astype(np.int64)

    def mean(self) -> float:
        return (self.lo + self.hi) / 2


@dataclass(frozen=True)
class ParetoModel:
    alpha: float
    scale: float

    def __post_init__(self) -> None:
        if self.alpha <= 0 or self.scale <= 0:
            raise ValueError(f"pareto model needs alpha > 0 and scale > 0, got {self.alpha}, {self.scale}")

    @property
    def label(self) -> str:
        return f"pareto:{self.alpha:g}:{self.scale:g}"

    def _from_uniform(self, v: np.ndarray) -> np.ndarray:
        # v in (0, 1]; heavy draws are clipped to keep counts in int64
        f = np.ceil(self.scale * np.power(v, -1.0 / self.alpha))
        return np.minimum(f, 2.0**62).astype(np.int64)

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self._from_uniform(1.0 - rng.random(n))

    def quantile_grid(self, k: int = 10_000) -> np.ndarray:
        q = (np.arange(k) + 0.5) / k
        return self._from_uniform(1.0 - q)

    def mean(self) -> float:
        return math.inf if self.alpha <= 1 else self.alpha * self.scale / (self.alpha - 1)


FrequencyModel = Union[UniformModel, ParetoModel]


def parse_model(text: str) -> FrequencyModel:
    """Parse ``uniform:LO:HI`` or ``pareto:ALPHA:SCALE``."""
    parts = text.strip().lower().split(":")
    try:
        if parts[0] == "uniform" and len(parts) == 3:
            return UniformModel(int(parts[1]), int(parts[2]))
        if parts[0] == "pareto" and len(parts) == 3:
            return ParetoModel(float(parts[1]), float(parts[2]))
    except ValueError as exc:
        raise ValueError(f"invalid frequency model {text!r}: {exc}") from None
    raise ValueError(f"invalid frequency model {text!r}; expected uniform:LO:HI or pareto:ALPHA:S")


def draw_frequencies(model: FrequencyModel, n: int, seed: int | np.random.Generator) -> np.ndarray:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return model.draw(n, rng)


def sampled_counts(freqs: np.ndarray, P: float, rng: np.random.Generator) -> np.ndarray:
    if not 0.0 < P <= 1.0:
        raise ValueError(f"sampling rate must be in (0, 1], got {P}")
    f = np.asarray(freqs, dtype=np.int64)
    if P >= 1.0:
        return f.copy()
    return rng.binomial(f, P)


def simulate_sampled_stream(freqs: np.ndarray, P: float, seed: int | np.random.Generator,
                            shuffle: bool = True) -> np.ndarray:
    """Sampled stream of element ids ``0..n-1`` (uint64) under Bernoulli(P) thinning."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    counts = sampled_counts(freqs, P, rng)
    ids = np.repeat(np.arange(len(counts), dtype=np.uint64), counts)
    if shuffle:
        rng.shuffle(ids)
    return ids


@dataclass(frozen=True)
class TrialConfig:
    n: int
    model: FrequencyModel
    P: float
    m: int
    u: Optional[int] = None
    algorithm: Algorithm = "alg1"
    trials: int = 200
    base_seed: int = 0
    shuffle: bool = True

    def __post_init__(self) -> None:
        if self.n < 1 or self.trials < 1:
            raise ValueError("need n >= 1 and trials >= 1")
        if self.algorithm == "alg2" and (self.u is None or self.u < 1):
            raise ValueError("alg2 needs a reservoir capacity u")
        HllSketch(self.m)  # validates m


@dataclass
class TrialResult:
    config: TrialConfig
    mean_n_hat: float
    bias: float
    rel_variance: Optional[float]
    degenerate_count: int
    mean_sample_length: float
    per_trial: list = field(default_factory=list, repr=False)

    @property
    def variance_defined(self) -> bool:
        return self.rel_variance is not None

    @property
    def successes(self) -> int:
        return len(self.per_trial)


@dataclass(frozen=True)
class _Setting:
    algorithm: str
    m: int
    u: Optional[int]


def _trial(n: int, model: FrequencyModel, P: float, settings: Sequence[_Setting],
           seed: int, shuffle: bool) -> tuple[list, int]:
    rng = np.random.default_rng(seed)
    freqs = model.draw(n, rng)
    counts = sampled_counts(freqs, P, rng)
    hash_seed = int(rng.bit_generator.random_raw())
    reservoir_seed = int(rng.bit_generator.random_raw())
    length = int(counts.sum())

    if all(s.algorithm == "naive" for s in settings):
        # a sketch only sees the set of sampled elements; feed each once
        ids = np.flatnonzero(counts).astype(np.uint64)
    else:
        ids = np.repeat(np.arange(n, dtype=np.uint64), counts)
        if shuffle:
            rng.shuffle(ids)
    idents = hash_u64(ids, hash_seed)

    sketches: dict[int, float] = {}
    summary: Optional[SampleSummary] = None
    reservoir: Optional[ReservoirSubsample] = None
    u_max = max((s.u for s in settings if s.algorithm == "alg2"), default=0)
    out: list = []
    for s in settings:
        if s.m not in sketches:
            sk = HllSketch(s.m)
            sk.insert_many(idents)
            sketches[s.m] = sk.estimate()
        n_s_hat = sketches[s.m]
        if s.algorithm == "naive":
            out.append(n_s_hat)
            continue
        if length == 0:
            out.append(None)
            continue
        if s.algorithm == "alg1":
            if summary is None:
                summary = SampleSummary()
                summary.offer_many(idents)
            p0 = summary.e1 / summary.l
        else:
            if reservoir is None:
                reservoir = ReservoirSubsample(u_max, seed=reservoir_seed, keyed_by="element")
                reservoir.offer_many(idents)
            ones, size = reservoir.prefix_singletons(s.u)
            p0 = ones / size
        try:
            out.append(corrected_estimate(n_s_hat, p0)[1])
        except DegenerateSample:
            out.append(None)
    return out, length


def _trial_batch(args) -> list:
    n, model, P, settings, seeds, shuffle = args
    return [_trial(n, model, P, settings, s, shuffle) for s in seeds]


def _aggregate(config: TrialConfig, values: list, lengths: list[int]) -> TrialResult:
    ok = [v for v in values if v is not None]
    degenerate = len(values) - len(ok)
    if not ok:
        raise AllTrialsDegenerate(f"all {len(values)} trials were degenerate")
    ratios = np.asarray(ok, dtype=np.float64) / config.n
    mean = float(ratios.mean())
    rel_var = float(ratios.var(ddof=1)) if len(ok) > 1 else None
    return TrialResult(
        config=config,
        mean_n_hat=mean * config.n,
        bias=abs(mean - 1.0),
        rel_variance=rel_var,
        degenerate_count=degenerate,
        mean_sample_length=float(np.mean(lengths)),
        per_trial=list(ok),
    )


def run_grid(configs: Sequence[TrialConfig], jobs: int = 1) -> list[TrialResult]:
    """Run several configs that share (n, model, P, trials, base_seed, shuffle)
    on common trial streams."""
    if not configs:
        return []
    c0 = configs[0]
    for c in configs[1:]:
        if (c.n, c.model, c.P, c.trials, c.base_seed, c.shuffle) != (
            c0.n, c0.model, c0.P, c0.trials, c0.base_seed, c0.shuffle
        ):
            raise ValueError("run_grid configs must share n, model, P, trials, base_seed, shuffle")
    settings = [_Setting(c.algorithm, c.m, c.u) for c in configs]
    seeds = [c0.base_seed + t for t in range(c0.trials)]

    if jobs > 1 and len(seeds) > 1:
        chunks = [seeds[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_trial_batch, [
                (c0.n, c0.model, c0.P, settings, ch, c0.shuffle) for ch in chunks
            ]))
        by_seed = {}
        for ch, part in zip(chunks, parts):
            by_seed.update(zip(ch, part))
        trials = [by_seed[s] for s in seeds]
    else:
        trials = _trial_batch((c0.n, c0.model, c0.P, settings, seeds, c0.shuffle))

    lengths = [length for _, length in trials]
    return [
        _aggregate(c, [vals[k] for vals, _ in trials], lengths)
        for k, c in enumerate(configs)
    ]


def run_trials(config: TrialConfig, jobs: int = 1) -> TrialResult:
    """``config.trials`` independent trials, aggregated into bias and relative variance."""
    return run_grid([config], jobs=jobs)[0]
