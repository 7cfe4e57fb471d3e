"""End-to-end cardinality estimation from a sampled stream.

Three pipelines share one pass over the sample:

* ``alg1`` feeds every identifier to a HyperLogLog sketch and to exact
  Good-Turing tallies, then scales the sketch estimate by ``1 / (1 - |E1|/l)``.
* ``alg2`` replaces the exact tallies with an element-keyed bottom-``u``
  reservoir and uses ``|U1| / |U|`` as the unseen-mass estimate, so storage is
  ``m + u`` regardless of the sample length.
* ``naive`` reports the sketch estimate with no correction.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Literal, Optional

import numpy as np

from .analysis import HLL_ARE, correction_variance_alg1, correction_variance_alg2
from .goodturing import EmptySample, SampleSummary, p0_variance_from_counts
from .sampling import ReservoirSubsample
from .sketch import MASK64, Element, HllSketch, hash_element, hash_u64

Mode = Literal["alg1", "alg2", "naive"]

MIN_RESERVOIR = 10
_RESERVOIR_SEED_OFFSET = 0x9E3779B97F4A7C15


class DegenerateSample(ValueError):
    """Every sampled element is a singleton, so ``1/(1 - p0_hat)`` is unbounded."""

    def __init__(self, message: str, diagnostics: dict | None = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def default_reservoir_seed(hash_seed: int) -> int:
    return (hash_seed + _RESERVOIR_SEED_OFFSET) & MASK64


@dataclass(frozen=True)
class PipelineConfig:
    mode: Mode = "alg1"
    m: int = 1024
    u: Optional[int] = None
    hash_seed: int = 0
    reservoir_seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.mode not in ("alg1", "alg2", "naive"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "alg2":
            if self.u is None or self.u < MIN_RESERVOIR:
                raise ValueError(f"alg2 needs u >= {MIN_RESERVOIR}, got {self.u}")

    @property
    def effective_reservoir_seed(self) -> int:
        if self.reservoir_seed is None:
            return default_reservoir_seed(self.hash_seed)
        return self.reservoir_seed


@dataclass(frozen=True)
class EstimateReport:
    algorithm: str
    n_s_hat: float
    p0_hat: float
    correction: float
    n_hat: float
    sample_length: int
    tally_size: int
    singletons: int
    doubletons: int
    m: int
    u: Optional[int]
    storage_units: int
    predicted_rel_variance: Optional[float] = None
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        extras = d.pop("extras")
        if d["predicted_rel_variance"] is None:
            del d["predicted_rel_variance"]
        d.update(extras)
        return d


def corrected_estimate(n_s_hat: float, p0: float) -> tuple[float, float]:
    """(correction, n_hat) for a sketch estimate and an unseen-mass estimate."""
    if p0 >= 1.0:
        raise DegenerateSample("all sampled elements are singletons (p0_hat == 1)")
    correction = 1.0 / (1.0 - p0)
    return correction, n_s_hat * correction


def empirical_rel_variance(mode: Mode, singletons: int, doubletons: int, tally: int,
                           m: int, are: float = HLL_ARE) -> float:
    """Plug-in relative variance using the run's own tallies.

    ``alg1``: ``Var(|E1|/l) / (1-p0)^2 + 1/(are m)`` with the coverage variance
    of ``|E1|/l``; ``alg2`` uses the subsample analogue
    ``2/t ((U1 + U2)/t - (U1/t)^2)`` before the same scaling.
    """
    sketch_term = 1.0 / (are * m)
    if mode == "naive" or tally == 0:
        return sketch_term
    p0 = singletons / tally
    if p0 >= 1.0:
        return math.inf
    if mode == "alg1":
        var_p0 = p0_variance_from_counts(singletons, doubletons, tally)
    else:
        var_p0 = max(2.0 / tally * ((singletons + doubletons) / tally - p0 * p0), 0.0)
    return var_p0 / (1.0 - p0) ** 2 + sketch_term


def model_rel_variance(mode: Mode, p0: float, p1: float, tally: int, m: int,
                       are: float = HLL_ARE) -> float:
    """Relative variance predicted from model probabilities (p0, p1)."""
    sketch_term = 1.0 / (are * m)
    if mode == "naive":
        return sketch_term
    if mode == "alg1":
        return correction_variance_alg1(p0, p1, max(tally, 1)) + sketch_term
    return correction_variance_alg2(p0, p1, max(tally, 1)) + sketch_term


class CardinalityPipeline:
    """Single-pass, single-writer estimator over a sampled stream."""

    def __init__(self, config: PipelineConfig) -> None:
        self.config = config
        self.sketch = HllSketch(config.m)
        self.summary = SampleSummary() if config.mode == "alg1" else None
        self.reservoir = (
            ReservoirSubsample(config.u, seed=config.effective_reservoir_seed, keyed_by="element")
            if config.mode == "alg2"
            else None
        )
        self.length = 0

    def offer(self, element: Element) -> None:
        self.offer_hash(hash_element(element, self.config.hash_seed))

    def offer_hash(self, ident: int) -> None:
        self.length += 1
        self.sketch.insert(ident)
        if self.summary is not None:
            self.summary.offer(ident)
        if self.reservoir is not None:
            self.reservoir.offer(ident)

    def offer_hashes(self, idents: np.ndarray) -> None:
        ids = np.asarray(idents, dtype=np.uint64)
        self.length += int(ids.size)
        self.sketch.insert_many(ids)
        if self.summary is not None:
            self.summary.offer_many(ids)
        if self.reservoir is not None:
            self.reservoir.offer_many(ids)

    def offer_u64(self, values: np.ndarray) -> None:
        """Hash raw 64-bit element values and feed them."""
        self.offer_hashes(hash_u64(values, self.config.hash_seed))

    def tallies(self) -> tuple[int, int, int]:
        """(singletons, doubletons, tally size) behind the unseen-mass estimate."""
        if self.summary is not None:
            return self.summary.e1, self.summary.e2, self.summary.l
        if self.reservoir is not None:
            return (self.reservoir.count_singletons(), self.reservoir.count_doubletons(),
                    len(self.reservoir))
        return 0, 0, self.length

    def report(self, sampling_rate: float | None = None,
               model_probs: tuple[float, float] | None = None,
               are: float = HLL_ARE) -> EstimateReport:
        """Finish the pass and build the estimate.

        ``predicted_rel_variance`` is filled when ``model_probs`` (p0, p1) are
        given (analytic) or when ``sampling_rate`` is given (plug-in from the
        run's own tallies; just the sketch term when the rate is 1).
        """
        cfg = self.config
        if self.length == 0:
            raise EmptySample("sample is empty")
        n_s_hat = self.sketch.estimate()
        e1, e2, tally = self.tallies()
        p0 = 0.0 if cfg.mode == "naive" else e1 / tally
        if cfg.mode == "alg1":
            storage = cfg.m + self.summary.distinct
        elif cfg.mode == "alg2":
            storage = cfg.m + tally
        else:
            storage = cfg.m
        try:
            correction, n_hat = corrected_estimate(n_s_hat, p0)
        except DegenerateSample as exc:
            raise DegenerateSample(
                str(exc),
                {"algorithm": cfg.mode, "n_s_hat": n_s_hat, "sample_length": self.length,
                 "tally_size": tally, "singletons": e1},
            ) from None

        predicted = None
        if model_probs is not None:
            predicted = model_rel_variance(cfg.mode, model_probs[0], model_probs[1], tally, cfg.m, are)
        elif sampling_rate is not None:
            if sampling_rate >= 1.0:
                predicted = 1.0 / (are * cfg.m)
            else:
                predicted = empirical_rel_variance(cfg.mode, e1, e2, tally, cfg.m, are)

        return EstimateReport(
            algorithm=cfg.mode,
            n_s_hat=n_s_hat,
            p0_hat=p0,
            correction=correction,
            n_hat=n_hat,
            sample_length=self.length,
            tally_size=tally,
            singletons=e1,
            doubletons=e2,
            m=cfg.m,
            u=cfg.u if cfg.mode == "alg2" else None,
            storage_units=storage,
            predicted_rel_variance=predicted,
        )


def _run(config: PipelineConfig, stream: Iterable[Element] | np.ndarray) -> EstimateReport:
    pipe = CardinalityPipeline(config)
    if isinstance(stream, np.ndarray):
        pipe.offer_u64(stream)
    else:
        for element in stream:
            pipe.offer(element)
    return pipe.report()


def algorithm1(stream: Iterable[Element] | np.ndarray, m: int, hash_seed: int = 0) -> EstimateReport:
    """Sketch estimate corrected by exact Good-Turing singleton tallies."""
    return _run(PipelineConfig("alg1", m=m, hash_seed=hash_seed), stream)


def algorithm2(stream: Iterable[Element] | np.ndarray, m: int, u: int, hash_seed: int = 0,
               reservoir_seed: int | None = None) -> EstimateReport:
    """Sketch estimate corrected by singletons in a ``u``-entry subsample."""
    return _run(PipelineConfig("alg2", m=m, u=u, hash_seed=hash_seed,
                               reservoir_seed=reservoir_seed), stream)


def naive_estimate(stream: Iterable[Element] | np.ndarray, m: int, hash_seed: int = 0) -> float:
    """Uncorrected sketch estimate of the sample's cardinality."""
    return _run(PipelineConfig("naive", m=m, hash_seed=hash_seed), stream).n_hat
