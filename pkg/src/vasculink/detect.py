"""Sampling strategies, adaptive decision-feedback detection, and SER runs.

On-off keying: a 1 releases N molecules, a 0 none.  The receiver takes one
Poisson-distributed count per symbol interval and thresholds it against

    psi = d[0] / ln(1 + d[0] / lambda_isi_plus),

the exact maximum-likelihood boundary between the rates with and without
the current symbol, where lambda_isi_plus collects the interference of the
last L-1 symbols plus background noise.  In decision-feedback mode the
interference is estimated from previous decisions; a genie-aided variant
uses the true symbols and bounds the achievable performance.

Received counts are always generated with an extended memory covering the
physical support of the impulse response, so truncating the detector's
memory never truncates the channel itself.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .errors import ModelError
from .channel import ChannelModel, cir, expected_taps, flux_density
from .metrics import MultipathMetrics, mean_excess_delay, rms_delay_spread
from .rng import make_rng

_PEAK_PRESCAN_POINTS = 512
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class SamplingStrategy(enum.Enum):
    """How the per-symbol sampling instant t_s is chosen."""

    GLOBAL_PEAK = "global-peak"
    STRONGEST_PATH_PEAK = "strongest-path"
    MEAN_EXCESS_DELAY = "mean-delay"


@dataclass(frozen=True)
class LinkConfig:
    """Parameters of one OOK symbol-stream simulation."""

    symbol_duration: float
    memory: int
    molecules_per_one: int
    background: float
    strategy: SamplingStrategy
    symbol_count: int
    seed: int
    genie_aided: bool = False
    record_threshold_trace: bool = False

    def __post_init__(self) -> None:
        if not self.symbol_duration > 0:
            raise ModelError("symbol duration must be > 0")
        if self.memory < 1:
            raise ModelError("memory must be >= 1")
        if self.symbol_count < 1:
            raise ModelError("symbol count must be >= 1")
        if self.background < 0:
            raise ModelError("background rate must be >= 0")


@dataclass(frozen=True)
class LinkResult:
    """Outcome of a symbol-stream run."""

    ser: float
    errors: int
    symbol_count: int
    resolved_sampling_time: float
    generation_memory: int
    mean_threshold: float
    decision_threshold_trace: np.ndarray | None = None


def path_peak_time(mean: float, scale: float) -> float:
    """Time at which a path's flux peaks: the positive root of t^2 + 3 theta t - mu^2.

    Evaluated in the rationalized form 2 mu^2 / (3 theta + sqrt(9 theta^2
    + 4 mu^2)), which is algebraically identical to the quadratic-formula
    root but immune to cancellation for scale >> mean, and reduces exactly
    to the path mean at scale 0.
    """
    if not mean > 0:
        raise ModelError("path mean must be > 0")
    if scale < 0:
        raise ModelError("path scale must be >= 0")
    if scale == 0.0:
        return mean
    return 2.0 * mean**2 / (3.0 * scale + math.hypot(3.0 * scale, 2.0 * mean))


def min_symbol_duration(tau_rms: float, factor: float) -> float:
    """Symbol duration from the delay-spread rule T_s = c * tau_rms."""
    if not factor > 0:
        raise ModelError("duration factor must be > 0")
    return factor * tau_rms


def resolve_sampling_time(
    strategy: SamplingStrategy,
    model: ChannelModel,
    metrics: MultipathMetrics | None = None,
) -> float:
    """Concrete sampling time for a strategy.

    Global peak: numeric argmax of h(t) (dense pre-scan, then golden
    section; the pre-scan guards against capture by a local mode of a
    multimodal response).  Strongest path: analytic peak time of the path
    with the highest weighted flux peak.  Mean delay: E[T].
    """
    ensemble = model.ensemble
    if strategy is SamplingStrategy.MEAN_EXCESS_DELAY:
        if metrics is not None:
            return metrics.mean_excess_delay
        return mean_excess_delay(ensemble)

    peaks = [path_peak_time(p.mean, p.scale) for p in ensemble.paths]
    if strategy is SamplingStrategy.STRONGEST_PATH_PEAK:
        values = [
            p.fraction * flux_density(p.mean, p.scale, tp)
            for p, tp in zip(ensemble.paths, peaks)
        ]
        return peaks[int(np.argmax(values))]

    t_lo = min(peaks)
    t_hi = max(p.mean + 3.0 * math.sqrt(p.variance) for p in ensemble.paths)
    grid = np.linspace(t_lo, t_hi, _PEAK_PRESCAN_POINTS)
    h = cir(model, grid)
    if not np.all(np.isfinite(h)):
        raise ModelError("impulse response is non-finite; cannot locate its peak")
    best = int(np.argmax(h))
    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, len(grid) - 1)]
    return _golden_section_max(lambda t: cir(model, t), a, b)


def _golden_section_max(func, a: float, b: float, iterations: int = 100) -> float:
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = func(c), func(d)
    for _ in range(iterations):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = func(d)
    return 0.5 * (a + b)


def decision_threshold(d0: float, lam_isi_plus: float) -> float:
    """Adaptive ML decision threshold psi.

    For zero interference-plus-noise the likelihood under "0" vanishes for
    any nonzero count, so the rule degenerates to "decide 1 iff r >= 1",
    encoded as psi = 0.5.
    """
    if not d0 > 0:
        raise ModelError("channel tap zero at sampling time")
    if lam_isi_plus < 0:
        raise ModelError("interference-plus-noise rate must be >= 0")
    if lam_isi_plus == 0.0:
        return 0.5
    return d0 / math.log1p(d0 / lam_isi_plus)


def decide(count: int, d0: float, lam_isi_plus: float) -> int:
    """ML symbol decision for one received count."""
    return 1 if count > decision_threshold(d0, lam_isi_plus) else 0


def run_link(model: ChannelModel, metrics: MultipathMetrics, config: LinkConfig) -> LinkResult:
    """Simulate an OOK stream and measure the symbol error rate.

    Symbols are i.i.d. equiprobable.  Counts are generated with memory
    L_gen = max(L, ceil((E[T] + 8 tau_rms) / T_s) + 1) so that all
    physically relevant interference is present; the detector only knows
    the first L taps.  The first L_gen symbols warm the stream up and are
    excluded from the error count.  Identical seed and config give
    bit-identical results, and genie/feedback variants of the same seed
    share the exact same symbol and noise realization.
    """
    model = replace(model, released_molecules=config.molecules_per_one)
    t_s = resolve_sampling_time(config.strategy, model, metrics)

    memory = config.memory
    span = metrics.mean_excess_delay + 8.0 * metrics.rms_delay_spread
    generation_memory = max(memory, math.ceil(span / config.symbol_duration) + 1)

    taps_gen = expected_taps(model, config.symbol_duration, t_s, generation_memory)
    taps = taps_gen[:memory]
    d0 = float(taps[0])
    if not d0 > 0:
        raise ModelError("channel tap zero at sampling time")

    rng = make_rng(config.seed)
    n_total = config.symbol_count + generation_memory
    symbols = rng.integers(0, 2, size=n_total)
    rates = np.convolve(symbols.astype(float), taps_gen)[:n_total] + config.background
    received = rng.poisson(rates)

    if config.genie_aided:
        decisions, thresholds = _detect_genie(symbols, received, taps, config.background)
    else:
        decisions, thresholds = _detect_feedback(received, taps, config.background)

    counted = slice(generation_memory, n_total)
    errors = int(np.count_nonzero(decisions[counted] != symbols[counted]))
    return LinkResult(
        ser=errors / config.symbol_count,
        errors=errors,
        symbol_count=config.symbol_count,
        resolved_sampling_time=t_s,
        generation_memory=generation_memory,
        mean_threshold=float(np.mean(thresholds[counted])),
        decision_threshold_trace=thresholds if config.record_threshold_trace else None,
    )


def _detect_genie(
    symbols: np.ndarray, received: np.ndarray, taps: np.ndarray, background: float
) -> tuple[np.ndarray, np.ndarray]:
    n_total = len(symbols)
    d0 = float(taps[0])
    isi_kernel = np.concatenate(([0.0], taps[1:]))
    lam = np.convolve(symbols.astype(float), isi_kernel)[:n_total] + background
    with np.errstate(divide="ignore"):
        thresholds = np.where(lam > 0, d0 / np.log1p(d0 / lam), 0.5)
    return (received > thresholds).astype(np.int64), thresholds


def _detect_feedback(
    received: np.ndarray, taps: np.ndarray, background: float
) -> tuple[np.ndarray, np.ndarray]:
    n_total = len(received)
    d0 = float(taps[0])
    feedback_taps = [float(x) for x in taps[1:]]
    counts = received.tolist()
    history: deque[int] = deque([0] * len(feedback_taps), maxlen=max(len(feedback_taps), 1))
    decisions = np.empty(n_total, dtype=np.int64)
    thresholds = np.empty(n_total)
    log1p = math.log1p
    for k in range(n_total):
        lam = background
        for dv, s_prev in zip(feedback_taps, history):
            if s_prev:
                lam += dv
        psi = d0 / log1p(d0 / lam) if lam > 0 else 0.5
        s_hat = 1 if counts[k] > psi else 0
        decisions[k] = s_hat
        thresholds[k] = psi
        if feedback_taps:
            history.appendleft(s_hat)
    return decisions, thresholds


def wilson_interval(errors: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% (by default) binomial confidence interval for an error rate."""
    if trials < 1:
        raise ModelError("trials must be >= 1")
    p = errors / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def max_observation_probability(model: ChannelModel) -> float:
    """Largest per-path peak observation probability rx_gain * gamma * j(t_peak).

    Reported so users can judge the rare-event (Poisson) approximation,
    which assumes this number is small.
    """
    return max(
        model.rx_gain * p.fraction * flux_density(p.mean, p.scale, path_peak_time(p.mean, p.scale))
        for p in model.ensemble.paths
    )
