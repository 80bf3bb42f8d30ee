"""Closed-form channel frequency response, phase, and group delay.

Each path contributes

    H_g(f) = gain * gamma_g * exp( (mu_g/theta_g) * (1 - sqrt(1 + j 4 pi theta_g f)) )

with the principal complex square root (positive real part), which makes
H(0) real and every path magnitude a decaying low-pass curve.  The total
response is the sum over paths.  Group delay is obtained numerically from
the unwrapped phase; for single paths an analytic form exists and is used
as a cross-check in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ModelError
from .channel import ChannelModel
from .metrics import MultipathMetrics

DEFAULT_GRID_POINTS = 4096
DEFAULT_GRID_SPAN_COHERENCE = 50.0


@dataclass(frozen=True)
class SpectrumSample:
    """One frequency point: complex response (s/m), magnitude, unwrapped phase (rad), group delay (s)."""

    frequency: float
    response: complex
    magnitude: float
    phase: float
    group_delay: float


def frequency_response(model: ChannelModel, f):
    """Complex channel frequency response H(f); negative f gives the conjugate."""
    f_arr = np.asarray(f, dtype=float)
    total = np.zeros(f_arr.shape, dtype=complex)
    for path in model.ensemble.paths:
        exponent = (path.mean / path.scale) * (
            1.0 - np.sqrt(1.0 + 4j * math.pi * path.scale * f_arr)
        )
        total += path.fraction * np.exp(exponent)
    total *= model.rx_gain
    if np.isscalar(f) or f_arr.ndim == 0:
        return complex(total)
    return total


def phase_unwrapped(model: ChannelModel, f_grid) -> np.ndarray:
    """Continuous phase of H over an ascending grid starting at 0, in rad.

    The grid must be fine enough that the true phase advances by less than
    pi between samples (caller responsibility); a principal-value step at
    the unwrap ambiguity raises instead of guessing.
    """
    f_arr = np.asarray(f_grid, dtype=float)
    if f_arr.ndim != 1 or len(f_arr) < 2:
        raise ModelError("frequency grid must be a 1-D array with >= 2 points")
    if f_arr[0] != 0.0:
        raise ModelError("frequency grid must start at 0")
    if np.any(np.diff(f_arr) <= 0):
        raise ModelError("frequency grid must be strictly ascending")

    raw = np.angle(frequency_response(model, f_arr))
    steps = np.diff(raw)
    wrapped = (steps + math.pi) % (2.0 * math.pi) - math.pi
    # a principal-value step this close to pi cannot be told apart from a wrap
    if np.any(np.abs(wrapped) >= math.pi * 0.999):
        raise ModelError(
            "adjacent-sample phase jump reached pi; refine the frequency grid"
        )
    phase = np.concatenate(([raw[0]], raw[0] + np.cumsum(wrapped)))
    return phase


def group_delay(model: ChannelModel, f_grid) -> np.ndarray:
    """Group delay tau_g(f) = -(1/2 pi) dphi/df on the grid, in seconds.

    Central differences inside, second-order one-sided at the ends, so
    tau_g(0) reproduces the mean excess delay up to grid resolution.
    """
    f_arr = np.asarray(f_grid, dtype=float)
    phase = phase_unwrapped(model, f_arr)
    return -np.gradient(phase, f_arr, edge_order=2) / (2.0 * math.pi)


def default_frequency_grid(metrics: MultipathMetrics, points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Linear grid [0, 50 B_c]; uniform spacing keeps unwrapping reliable."""
    return np.linspace(0.0, DEFAULT_GRID_SPAN_COHERENCE * metrics.coherence_bandwidth, points)


def spectrum_samples(model: ChannelModel, f_grid) -> list[SpectrumSample]:
    """Per-frequency samples bundling response, magnitude, phase, group delay."""
    f_arr = np.asarray(f_grid, dtype=float)
    response = frequency_response(model, f_arr)
    phase = phase_unwrapped(model, f_arr)
    delay = -np.gradient(phase, f_arr, edge_order=2) / (2.0 * math.pi)
    return [
        SpectrumSample(
            frequency=float(f),
            response=complex(h),
            magnitude=float(abs(h)),
            phase=float(p),
            group_delay=float(g),
        )
        for f, h, p, g in zip(f_arr, response, phase, delay)
    ]
