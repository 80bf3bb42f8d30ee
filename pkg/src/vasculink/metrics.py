"""Multipath dispersion metrics of the network first-passage time.

The delay profile is the mixture of the path first-passage densities with
normalized weights w_g.  Its first moment is the mean excess delay and its
standard deviation the RMS delay spread, which splits exactly into a
diffusion-induced term (sum w mu theta) and a multipath term (the weighted
variance of the path means).  The coherence bandwidth follows as
1 / (2 pi tau_rms).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ModelError
from .channel import flux_density
from .paths import PathEnsemble


@dataclass(frozen=True)
class MultipathMetrics:
    mean_excess_delay: float
    rms_delay_spread: float
    diffusion_spread_sq: float
    multipath_spread_sq: float
    coherence_bandwidth: float


def pdp(ensemble: PathEnsemble, t):
    """Delay profile f_T(t): the weight-normalized mixture of path fluxes."""
    t_arr = np.asarray(t, dtype=float)
    total = np.zeros_like(t_arr)
    for weight, path in zip(ensemble.weights, ensemble.paths):
        total += weight * flux_density(path.mean, path.scale, t_arr)
    if np.isscalar(t) or t_arr.ndim == 0:
        return float(total)
    return total


def mean_excess_delay(ensemble: PathEnsemble) -> float:
    """First moment of the network first-passage time: sum_g w_g mu_g."""
    return sum(w * p.mean for w, p in zip(ensemble.weights, ensemble.paths))


def rms_delay_spread(ensemble: PathEnsemble) -> MultipathMetrics:
    """Delay-spread metrics with the diffusion/multipath decomposition.

    tau_rms^2 = sum w mu theta  +  (sum w mu^2 - (sum w mu)^2); the second
    term is clamped at zero against floating-point cancellation so the
    reported components always sum exactly to tau_rms^2.
    """
    first = mean_excess_delay(ensemble)
    diffusion = sum(w * p.mean * p.scale for w, p in zip(ensemble.weights, ensemble.paths))
    second_raw = sum(w * p.mean**2 for w, p in zip(ensemble.weights, ensemble.paths))
    multipath = max(0.0, second_raw - first**2)
    tau = math.sqrt(diffusion + multipath)
    return MultipathMetrics(
        mean_excess_delay=first,
        rms_delay_spread=tau,
        diffusion_spread_sq=diffusion,
        multipath_spread_sq=multipath,
        coherence_bandwidth=coherence_bandwidth(tau),
    )


def coherence_bandwidth(tau_rms: float) -> float:
    """Approximate coherence bandwidth 1 / (2 pi tau_rms) in Hz."""
    if not tau_rms > 0:
        raise ModelError("coherence bandwidth requires tau_rms > 0")
    return 1.0 / (2.0 * math.pi * tau_rms)
