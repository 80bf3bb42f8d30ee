"""Tx->Rx path enumeration, molecule fractions, and first-passage moments.

Every directed path from the Tx pipe to the Rx pipe carries a fraction of
the released molecules set by the flow splits at the bifurcations it
passes through, and a first-passage-time distribution summarized by the
moment triple (mean, variance, scale).  Because the network is a DAG, the
Tx pipe is necessarily the first pipe of every such path and the Rx pipe
the last.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ModelError
from .flow import FlowSolution, weak_advection_pipes
from .network import TxRxPlacement, VesselNetwork

DEFAULT_MAX_PATHS = 10_000


@dataclass(frozen=True)
class TxRxPath:
    """One directed Tx->Rx path.

    ``fraction`` is the probability a released molecule takes this path
    (product of flow splits at traversed bifurcations); ``mean`` and
    ``variance`` are the first two moments (s, s^2) of its first-passage
    time measured Tx position to Rx position.
    """

    pipe_ids: tuple[str, ...]
    bifurcation_node_ids: tuple[str, ...]
    fraction: float
    mean: float
    variance: float

    def __post_init__(self) -> None:
        if not 0 < self.fraction <= 1:
            raise ModelError(f"path fraction {self.fraction} outside (0, 1]")
        if not self.mean > 0:
            raise ModelError("path mean must be > 0")
        if not self.variance > 0:
            raise ModelError("path variance must be > 0")

    @property
    def scale(self) -> float:
        """Scale parameter of the path first-passage density: variance / mean (s)."""
        return self.variance / self.mean


@dataclass(frozen=True)
class PathEnsemble:
    """All Tx->Rx paths with the reach probability and normalized weights."""

    paths: tuple[TxRxPath, ...]
    reach_probability: float
    weights: tuple[float, ...]

    @classmethod
    def from_paths(cls, paths: Sequence[TxRxPath]) -> "PathEnsemble":
        if not paths:
            raise ModelError("no Tx->Rx path exists")
        ordered = tuple(sorted(paths, key=lambda p: (p.mean, p.pipe_ids)))
        chi = sum(p.fraction for p in ordered)
        if chi > 1.0 + 1e-9:
            raise ModelError(f"path fractions sum to {chi} > 1")
        return cls(ordered, chi, tuple(p.fraction / chi for p in ordered))


def pipe_transit_mean(z: float, velocity: float) -> float:
    """Mean first-passage time over axial distance z at mean velocity u: z/u."""
    return z / velocity

def pipe_transit_variance(z: float, velocity: float, eff_diffusion: float) -> float:
    """First-passage-time variance over distance z: 2 Deff z / u^3."""
    return 2.0 * eff_diffusion * z / velocity**3


def path_moments(
    network: VesselNetwork,
    flow: FlowSolution,
    placement: TxRxPlacement,
    pipe_ids: Sequence[str],
) -> tuple[float, float, float]:
    """Moment triple (mean, variance, scale) for the path given as pipe ids.

    The first pipe contributes its residual length beyond the Tx, the last
    the distance up to the Rx, interior pipes their full length.  Means
    and variances add along the path.  When Tx and Rx share a single pipe
    the path reduces to the in-pipe distance, which must be positive.
    """
    if pipe_ids[0] != placement.tx_pipe or pipe_ids[-1] != placement.rx_pipe:
        raise ModelError("path must start at the Tx pipe and end at the Rx pipe")

    def segment(pipe_id: str, z: float) -> tuple[float, float]:
        u = flow.velocity[pipe_id]
        d = flow.effective_diffusion[pipe_id]
        return pipe_transit_mean(z, u), pipe_transit_variance(z, u, d)

    if len(pipe_ids) == 1:
        distance = placement.rx_position - placement.tx_position
        if distance <= 0:
            raise ModelError("no Tx->Rx path exists (Rx is upstream of Tx in the shared pipe)")
        mean, var = segment(pipe_ids[0], distance)
    else:
        tx_pipe = network.pipe(placement.tx_pipe)
        mean, var = segment(tx_pipe.id, tx_pipe.length - placement.tx_position)
        for pid in pipe_ids[1:-1]:
            m, v = segment(pid, network.pipe(pid).length)
            mean += m
            var += v
        m, v = segment(placement.rx_pipe, placement.rx_position)
        mean += m
        var += v
    if mean <= 0 or var <= 0:
        raise ModelError("degenerate path with zero transit time")
    return mean, var, var / mean


def path_fraction(
    network: VesselNetwork, flow: FlowSolution, pipe_ids: Sequence[str]
) -> float:
    """Fraction of molecules taking the path: product of bifurcation flow splits.

    Only bifurcations strictly between the first and last pipe contribute;
    a path with no traversed bifurcation keeps fraction 1.
    """
    fraction = 1.0
    for upstream, downstream in zip(pipe_ids[:-1], pipe_ids[1:]):
        node = network.pipe(upstream).target
        outgoing = network.pipes_from(node)
        if len(outgoing) > 1:
            total = sum(flow.flow_rate[p.id] for p in outgoing)
            fraction *= flow.flow_rate[downstream] / total
    return fraction


def interior_bifurcations(network: VesselNetwork, pipe_ids: Sequence[str]) -> tuple[str, ...]:
    """Bifurcation nodes the path travels through (path endpoints excluded)."""
    nodes = []
    for upstream in pipe_ids[:-1]:
        node = network.pipe(upstream).target
        if network.is_bifurcation(node):
            nodes.append(node)
    return tuple(nodes)


def enumerate_paths(
    network: VesselNetwork,
    flow: FlowSolution,
    placement: TxRxPlacement,
    max_paths: int = DEFAULT_MAX_PATHS,
) -> PathEnsemble:
    """Enumerate every directed Tx->Rx path and assemble the ensemble.

    Paths are keyed by their ordered pipe-id list, so parallel pipes
    between the same nodes yield distinct paths.  The result is sorted by
    path mean, ascending.  Raises if no path exists or if the count
    exceeds ``max_paths``.
    """
    tx_pipe = network.pipe(placement.tx_pipe)
    rx_pipe = network.pipe(placement.rx_pipe)

    sequences: list[tuple[str, ...]] = []
    if tx_pipe.id == rx_pipe.id:
        if placement.rx_position > placement.tx_position:
            warnings.warn(
                "Tx and Rx share a pipe; using the in-pipe moment reduction",
                stacklevel=2,
            )
            sequences.append((tx_pipe.id,))
        else:
            raise ModelError("no Tx->Rx path exists (Rx is upstream of Tx in the shared pipe)")
    else:
        # DFS over edges from the end of the Tx pipe to the start of the Rx
        # pipe.  The network is a DAG, so paths cannot revisit nodes and a
        # path reaching the Rx pipe's source must finish through the Rx pipe.
        target = rx_pipe.source
        stack: list[tuple[str, tuple[str, ...]]] = [(tx_pipe.target, (tx_pipe.id,))]
        while stack:
            node, trail = stack.pop()
            if node == target:
                sequences.append(trail + (rx_pipe.id,))
                if len(sequences) > max_paths:
                    raise ModelError(
                        f"path enumeration exceeded the cap of {max_paths}; "
                        "raise max_paths if this is intended"
                    )
                continue
            for pipe in network.pipes_from(node):
                stack.append((pipe.target, trail + (pipe.id,)))
        if not sequences:
            raise ModelError("no Tx->Rx path exists")

    paths = []
    for pipe_ids in sequences:
        mean, var, _ = path_moments(network, flow, placement, pipe_ids)
        paths.append(
            TxRxPath(
                pipe_ids=pipe_ids,
                bifurcation_node_ids=interior_bifurcations(network, pipe_ids),
                fraction=path_fraction(network, flow, pipe_ids),
                mean=mean,
                variance=var,
            )
        )
    ensemble = PathEnsemble.from_paths(paths)

    traversed = sorted({pid for p in ensemble.paths for pid in p.pipe_ids})
    weak = weak_advection_pipes(network, flow, traversed)
    if weak:
        warnings.warn(
            f"weak advection dominance (Peclet < 10, a heuristic threshold) on "
            f"Tx->Rx path pipes {weak}; the flux-based channel model may be inaccurate",
            stacklevel=2,
        )
    return ensemble
