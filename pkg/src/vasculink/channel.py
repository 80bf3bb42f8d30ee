"""Closed-form path flux, channel impulse response, and Poisson observations.

The flux of one path is an inverse-Gaussian density in time, parameterized
by the path mean mu and scale theta:

    j(t) = mu / sqrt(2 pi theta t^3) * exp(-(t - mu)^2 / (2 theta t))

The impulse response superposes the fraction-weighted path fluxes and a
receiver gain l_Rx / u_b (window length over Rx-pipe velocity).  Released
molecules observed in the window follow a Poisson counting model whose
rate stacks the current and previous symbols' tap contributions on top of
a constant background.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr

from .errors import ModelError
from .flow import FlowSolution
from .network import TxRxPlacement, VesselNetwork
from .paths import PathEnsemble, TxRxPath, enumerate_paths

#: Heuristic bound on rx window length relative to its pipe, beyond which
#: the uniform-concentration receiver gain becomes questionable.
RX_WINDOW_FRACTION = 0.1


@dataclass(frozen=True)
class ChannelModel:
    """Path ensemble plus receiver gain and link-level counts."""

    ensemble: PathEnsemble
    rx_gain: float
    released_molecules: int
    background_rate: float = 0.0

    def __post_init__(self) -> None:
        if not self.rx_gain > 0:
            raise ModelError("receiver gain must be > 0")
        if self.background_rate < 0:
            raise ModelError("background rate must be >= 0")


def build_channel(
    network: VesselNetwork,
    flow: FlowSolution,
    placement: TxRxPlacement,
    background_rate: float = 0.0,
) -> ChannelModel:
    """Assemble the channel model for a solved network and placement."""
    rx_pipe = network.pipe(placement.rx_pipe)
    if placement.rx_length > RX_WINDOW_FRACTION * rx_pipe.length:
        warnings.warn(
            f"rx window ({placement.rx_length} m) exceeds {RX_WINDOW_FRACTION:g} of its pipe "
            f"length ({rx_pipe.length} m); the uniform-concentration gain is a heuristic "
            "approximation in this regime",
            stacklevel=2,
        )
    ensemble = enumerate_paths(network, flow, placement)
    return ChannelModel(
        ensemble=ensemble,
        rx_gain=placement.rx_length / flow.velocity[placement.rx_pipe],
        released_molecules=placement.released_molecules,
        background_rate=background_rate,
    )


def path_flux(path: TxRxPath, t):
    """Evaluate the path's first-passage density (1/s) at time(s) ``t``.

    Computed in log space so sharply peaked advection-dominated densities
    neither overflow nor lose the tails; underflow cleanly returns 0.
    Accepts scalars or arrays; t = 0 maps to the limit value 0.
    """
    return flux_density(path.mean, path.scale, t)


def flux_density(mean: float, scale: float, t):
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ModelError("flux is defined for t >= 0")
    out = np.zeros_like(t_arr)
    positive = t_arr > 0
    tp = t_arr[positive]
    with np.errstate(over="ignore"):
        log_j = (
            math.log(mean)
            - 0.5 * (math.log(2.0 * math.pi * scale) + 3.0 * np.log(tp))
            - (tp - mean) ** 2 / (2.0 * scale * tp)
        )
        out[positive] = np.exp(log_j)
    if np.isscalar(t) or t_arr.ndim == 0:
        return float(out)
    return out


def first_passage_cdf(mean: float, scale: float, t):
    """CDF of the inverse-Gaussian first-passage time with given mean and scale.

    Uses the standard two-term normal form with the exponentially weighted
    term evaluated in log space, which stays finite even when the shape
    parameter mean^2/scale is large.
    """
    t_arr = np.asarray(t, dtype=float)
    out = np.zeros_like(t_arr)
    positive = t_arr > 0
    tp = t_arr[positive]
    lam = mean**2 / scale
    root = np.sqrt(lam / tp)
    term1 = ndtr(root * (tp / mean - 1.0))
    log_term2 = 2.0 * lam / mean + log_ndtr(-root * (tp / mean + 1.0))
    out[positive] = term1 + np.exp(log_term2)
    if np.isscalar(t) or t_arr.ndim == 0:
        return float(out)
    return out


def cir(model: ChannelModel, t):
    """Channel impulse response h(t) = rx_gain * sum_g gamma_g j_g(t), in 1/m."""
    t_arr = np.asarray(t, dtype=float)
    total = np.zeros_like(t_arr)
    for path in model.ensemble.paths:
        total += path.fraction * flux_density(path.mean, path.scale, t_arr)
    total *= model.rx_gain
    if np.isscalar(t) or t_arr.ndim == 0:
        return float(total)
    return total


def per_path_models(model: ChannelModel) -> tuple[ChannelModel, ...]:
    """Single-path sub-models (fractions preserved), for per-path analysis."""
    return tuple(
        ChannelModel(
            ensemble=PathEnsemble.from_paths([path]),
            rx_gain=model.rx_gain,
            released_molecules=model.released_molecules,
            background_rate=model.background_rate,
        )
        for path in model.ensemble.paths
    )


def expected_taps(model: ChannelModel, symbol_duration: float, sampling_time: float, memory: int) -> np.ndarray:
    """Expected molecule counts d[l] = N h(l*T_s + t_s) for l = 0..memory-1.

    ``sampling_time`` is an absolute offset from each symbol's release and
    may exceed the symbol duration; later taps then simply index deeper
    into the impulse response.
    """
    if not symbol_duration > 0:
        raise ModelError("symbol duration must be > 0")
    if sampling_time < 0:
        raise ModelError("sampling time must be >= 0")
    if memory < 1:
        raise ModelError("memory must be >= 1")
    times = sampling_time + symbol_duration * np.arange(memory)
    return model.released_molecules * cir(model, times)


def sample_observation(
    taps: np.ndarray,
    symbols,
    background_rate: float,
    rng: np.random.Generator,
) -> int:
    """One Poisson-count sample for a symbol window.

    ``symbols[l]`` is the symbol sent l intervals ago (index 0 = current);
    the window length must match the tap vector.
    """
    taps = np.asarray(taps, dtype=float)
    window = np.asarray(symbols, dtype=float)
    if window.shape != taps.shape:
        raise ModelError("symbol window and tap vector must have equal length")
    rate = float(taps @ window) + background_rate
    return int(rng.poisson(rate))
