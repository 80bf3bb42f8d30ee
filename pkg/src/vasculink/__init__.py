"""Channel analysis and link-level simulation for advective-diffusive
molecular communication in vessel networks.

The package models a vessel network as a directed multigraph of cylindrical
pipes, solves the steady hydraulics, enumerates transmitter-to-receiver
paths with their inverse-Gaussian first-passage statistics, and from these
evaluates the channel impulse response, multipath dispersion metrics, the
closed-form frequency response, and on-off-keying symbol error rates under
a Poisson observation model.  An independent Monte Carlo particle
simulator cross-validates the analytic results.
"""

from .errors import ModelError, SchemaError, VasculinkError
from .network import (
    CONNECTING,
    INLET,
    OUTLET,
    NodeRole,
    Pipe,
    TxRxPlacement,
    VesselNetwork,
    parse_network,
    serialize_network,
    topological_order,
    validate_dag,
    validate_placement,
)
from .flow import (
    FlowSolution,
    conductance,
    effective_diffusion,
    kirchhoff_residual,
    peclet_number,
    solve_flow,
    weak_advection_pipes,
)
from .paths import (
    PathEnsemble,
    TxRxPath,
    enumerate_paths,
    path_fraction,
    path_moments,
)
from .channel import (
    ChannelModel,
    build_channel,
    cir,
    expected_taps,
    first_passage_cdf,
    flux_density,
    path_flux,
    per_path_models,
    sample_observation,
)
from .metrics import (
    MultipathMetrics,
    coherence_bandwidth,
    mean_excess_delay,
    pdp,
    rms_delay_spread,
)
from .spectrum import (
    SpectrumSample,
    default_frequency_grid,
    frequency_response,
    group_delay,
    phase_unwrapped,
    spectrum_samples,
)
from .mcsim import ParticleSimulation, ParticleTrace, sample_pipe_fpt, simulate_particles
from .detect import (
    LinkConfig,
    LinkResult,
    SamplingStrategy,
    decide,
    decision_threshold,
    max_observation_probability,
    min_symbol_duration,
    path_peak_time,
    resolve_sampling_time,
    run_link,
    wilson_interval,
)
from .rng import make_rng

__version__ = "0.1.0"
