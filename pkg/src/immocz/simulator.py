"""
Monte Carlo BER engine.

Every trial owns a counter-based Philox stream keyed by the master seed, with
the (point, trial) pair placed in the upper counter words, so a trial's
outcome depends only on ``(master_seed, point_index, trial_index)``.  Trials
are processed in fixed-size chunks that may run in worker processes; the
per-point result is a sum of integer counts and therefore does not depend on
the number of workers or on completion order.

Within a trial the stream is consumed in this order: message bits, channel
taps, noise samples, then any tie-break draws made by the decoder.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .channel import EBN0_CONVENTIONS, SCHEMES, complex_normal, convolve_batch, noise_variance, sample_channel
from .codebook import CodebookSet, SystemParams, build_codebook_set, encode_batch
from .detection import DETECTORS, decode_batch
from .errors import ParameterError

log = logging.getLogger(__name__)

CHUNK_SIZE = 2048
MAX_ROOT_FAILURE_RATE = 1e-4
NORMALIZATIONS = ("expectation", "per-realization")


def derive_rng_stream(master_seed: int, point_index: int, trial_index: int) -> np.random.Generator:
    """Independent generator for one trial: Philox keyed by the master seed."""
    if not 0 <= master_seed < 2**64:
        raise ParameterError(f"master seed must fit in 64 bits, got {master_seed}")
    bg = np.random.Philox(key=master_seed, counter=[0, 0, trial_index, point_index])
    return np.random.Generator(bg)


def scheduled_trials(ebn0_db: float) -> int:
    """Default trial count for an Eb/N0 point; higher SNR gets more trials."""
    if ebn0_db <= 7:
        return 20_000
    if ebn0_db <= 19:
        return 40_000
    if ebn0_db <= 31:
        return 60_000
    return 110_000


def spectral_efficiency(params: SystemParams, scheme: str) -> float:
    """Bits per channel use: N/(N+L_ch) for MOCZ, N/(K+L_ch) for IM-MOCZ."""
    if scheme == "mocz":
        return params.N / (params.N + params.L_ch)
    if scheme == "im-mocz":
        return params.N / (params.K + params.L_ch)
    raise ParameterError(f"unknown scheme {scheme!r}")


def spectral_efficiency_gain(params: SystemParams) -> float:
    return spectral_efficiency(params, "im-mocz") / spectral_efficiency(params, "mocz") - 1


@dataclass(frozen=True)
class SimConfig:
    params: SystemParams
    scheme: str = "im-mocz"
    detector: str = "dizet"
    ebn0_points: tuple[float, ...] = (10.0,)
    trials_per_point: tuple[int, ...] | int = 1000
    master_seed: int = 0
    workers: int = 1
    channel_normalization: str = "expectation"
    ebn0_convention: str = "paper"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ParameterError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "mocz" and self.params.K != self.params.N:
            object.__setattr__(self, "params", replace(self.params, K=self.params.N))
        if self.detector not in DETECTORS:
            raise ParameterError(f"unknown detector {self.detector!r}")
        if self.channel_normalization not in NORMALIZATIONS:
            raise ParameterError(f"unknown channel normalization {self.channel_normalization!r}")
        if self.ebn0_convention not in EBN0_CONVENTIONS:
            raise ParameterError(f"unknown Eb/N0 convention {self.ebn0_convention!r}")
        points = tuple(float(e) for e in self.ebn0_points)
        if not points or not all(math.isfinite(e) for e in points):
            raise ParameterError("ebn0_points must be a nonempty list of finite values")
        object.__setattr__(self, "ebn0_points", points)
        trials = self.trials_per_point
        trials = (trials,) * len(points) if isinstance(trials, (int, np.integer)) else tuple(trials)
        if len(trials) != len(points):
            raise ParameterError(f"{len(trials)} trial counts for {len(points)} Eb/N0 points")
        if any(int(t) != t or t < 1 for t in trials):
            raise ParameterError(f"trial counts must be positive integers, got {list(trials)}")
        object.__setattr__(self, "trials_per_point", tuple(int(t) for t in trials))
        if not 0 <= self.master_seed < 2**64:
            raise ParameterError(f"master seed must fit in 64 bits, got {self.master_seed}")
        if self.workers < 1:
            raise ParameterError(f"workers must be >= 1, got {self.workers}")

    def sigma2(self, point_index: int) -> float:
        spec = noise_variance(self.params, self.scheme, self.ebn0_points[point_index], self.ebn0_convention)
        return spec.sigma2


@dataclass(frozen=True)
class TrialOutcome:
    bit_errors_total: int
    bit_errors_implicit: int
    bit_errors_explicit: int
    codebook_error: int
    tie_events: int
    empty_sector_events: int
    root_failure: int = 0


COUNT_FIELDS = ("bit_errors", "implicit_errors", "explicit_errors", "codebook_errors", "ties", "empty_sectors", "root_failures")


@dataclass
class BerPoint:
    ebn0_db: float
    trials: int
    N: int
    K: int
    bit_errors: int = 0
    implicit_errors: int = 0
    explicit_errors: int = 0
    codebook_errors: int = 0
    ties: int = 0
    empty_sectors: int = 0
    root_failures: int = 0

    @property
    def decoded_trials(self) -> int:
        return self.trials - self.root_failures

    @property
    def bits(self) -> int:
        return self.N * self.decoded_trials

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else float("nan")

    @property
    def implicit_ber(self) -> float:
        n = (self.N - self.K) * self.decoded_trials
        return self.implicit_errors / n if n else 0.0

    @property
    def explicit_ber(self) -> float:
        n = self.K * self.decoded_trials
        return self.explicit_errors / n if n else float("nan")

    @property
    def codebook_error_rate(self) -> float:
        return self.codebook_errors / self.decoded_trials if self.decoded_trials else float("nan")

    @property
    def ci95(self) -> float:
        """Normal-approximation 95% half-width on the bit error proportion."""
        if not self.bits:
            return float("nan")
        p = self.ber
        return 1.96 * math.sqrt(p * (1 - p) / self.bits)


@dataclass
class BerCurve:
    config: SimConfig
    points: list[BerPoint] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return all(p.root_failures <= MAX_ROOT_FAILURE_RATE * p.trials for p in self.points)

    @property
    def ebn0(self) -> np.ndarray:
        return np.array([p.ebn0_db for p in self.points])

    @property
    def ber(self) -> np.ndarray:
        return np.array([p.ber for p in self.points])


# ---------------------------------------------------------------------------
# trial execution


@dataclass
class _Chunk:
    messages: np.ndarray
    decided: np.ndarray
    chosen: np.ndarray
    true_index: np.ndarray
    ties: np.ndarray
    empty_sectors: np.ndarray
    failed: np.ndarray


def _run_chunk(cfg: SimConfig, cbs: CodebookSet, point_index: int, trial_indices: Sequence[int], sigma2: float) -> _Chunk:
    p = cfg.params
    T = len(trial_indices)
    messages = np.empty((T, p.N), dtype=np.int8)
    taps = np.empty((T, p.L_ch), dtype=complex)
    noise = np.empty((T, p.K + p.L_ch), dtype=complex)
    rngs = []
    for row, trial in enumerate(trial_indices):
        g = derive_rng_stream(cfg.master_seed, point_index, trial)
        messages[row] = g.integers(0, 2, p.N)
        taps[row] = sample_channel(p, g, cfg.channel_normalization)
        noise[row] = complex_normal(g, p.K + p.L_ch, sigma2)
        rngs.append(g)
    y = convolve_batch(encode_batch(messages, cbs), taps) + noise
    dec = decode_batch(y, cbs, cfg.detector, rngs)
    weights = 1 << np.arange(p.implicit_bits - 1, -1, -1)
    true_index = messages[:, : p.implicit_bits].astype(np.int64) @ weights + 1
    return _Chunk(messages, dec.messages, dec.chosen, true_index, dec.ties, dec.empty_sectors, dec.failed)


def _chunk_counts(chunk: _Chunk, implicit_bits: int) -> dict[str, int]:
    ok = ~chunk.failed
    errors = chunk.messages != chunk.decided
    implicit = errors[:, :implicit_bits].sum(axis=1)
    explicit = errors[:, implicit_bits:].sum(axis=1)
    return {
        "bit_errors": int((implicit + explicit)[ok].sum()),
        "implicit_errors": int(implicit[ok].sum()),
        "explicit_errors": int(explicit[ok].sum()),
        "codebook_errors": int((chunk.chosen != chunk.true_index)[ok].sum()),
        "ties": int(chunk.ties[ok].sum()),
        "empty_sectors": int(chunk.empty_sectors[ok].sum()),
        "root_failures": int(chunk.failed.sum()),
    }


def run_trial(cfg: SimConfig, point_index: int, trial_index: int, sigma2: float | None = None) -> TrialOutcome:
    """One transmission; ``sigma2`` overrides the configured noise level."""
    cbs = build_codebook_set(cfg.params)
    s2 = cfg.sigma2(point_index) if sigma2 is None else sigma2
    c = _chunk_counts(_run_chunk(cfg, cbs, point_index, [trial_index], s2), cfg.params.implicit_bits)
    if c["root_failures"]:
        log.warning("root finding failed at point %d, trial %d", point_index, trial_index)
    return TrialOutcome(
        c["bit_errors"], c["implicit_errors"], c["explicit_errors"], c["codebook_errors"],
        c["ties"], c["empty_sectors"], c["root_failures"],
    )


def _chunk_job(args) -> dict[str, int]:
    cfg, point_index, start, stop, sigma2 = args
    cbs = build_codebook_set(cfg.params)
    return _chunk_counts(_run_chunk(cfg, cbs, point_index, range(start, stop), sigma2), cfg.params.implicit_bits)


def _jobs(cfg: SimConfig, point_index: int, sigma2: float | None, chunk_size: int):
    s2 = cfg.sigma2(point_index) if sigma2 is None else sigma2
    n = cfg.trials_per_point[point_index]
    return [(cfg, point_index, s, min(s + chunk_size, n), s2) for s in range(0, n, chunk_size)]


def run_sweep(cfg: SimConfig, sigma2: float | None = None, chunk_size: int = CHUNK_SIZE) -> BerCurve:
    """All Eb/N0 points of ``cfg``; identical counts for any worker count."""
    curve = BerCurve(cfg)
    pool = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for i, ebn0 in enumerate(cfg.ebn0_points):
            jobs = _jobs(cfg, i, sigma2, chunk_size)
            results = pool.map(_chunk_job, jobs) if pool else map(_chunk_job, jobs)
            point = BerPoint(ebn0, cfg.trials_per_point[i], cfg.params.N, cfg.params.K)
            for counts in results:
                for name in COUNT_FIELDS:
                    setattr(point, name, getattr(point, name) + counts[name])
            curve.points.append(point)
            log.info(
                "%s/%s N=%d K=%d Eb/N0=%g dB: %d trials, BER=%.3g, codebook errors=%d",
                cfg.scheme, cfg.detector, cfg.params.N, cfg.params.K, ebn0, point.trials, point.ber, point.codebook_errors,
            )
    finally:
        if pool:
            pool.shutdown()
    if not curve.valid:
        log.warning("root-finding failures exceed %.2g%% of trials; sweep marked invalid", 100 * MAX_ROOT_FAILURE_RATE)
    return curve


def ebn0_at_ber(curve: BerCurve, target: float) -> float:
    """
    Eb/N0 at which the curve first drops to ``target``.

    Interpolates linearly in log10(BER) between the two bracketing grid
    points; returns NaN if the target is never bracketed.
    """
    x, y = curve.ebn0, curve.ber
    for i in range(len(x) - 1):
        if y[i] >= target >= y[i + 1] and y[i + 1] > 0:
            l0, l1, lt = np.log10(y[i]), np.log10(y[i + 1]), np.log10(target)
            if l0 == l1:
                return float(x[i])
            return float(x[i] + (lt - l0) * (x[i + 1] - x[i]) / (l1 - l0))
    return float("nan")


def gain_db(reference: BerCurve, candidate: BerCurve, target: float = 1e-4) -> float:
    """Eb/N0 saved by ``candidate`` relative to ``reference`` at BER ``target``."""
    return ebn0_at_ber(reference, target) - ebn0_at_ber(candidate, target)
