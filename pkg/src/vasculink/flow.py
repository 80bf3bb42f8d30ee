"""Steady-state hydraulics and Aris-Taylor dispersion.

The network maps onto an equivalent resistive circuit: each pipe is a
conductance G_i = pi r_i^4 / (8 eta l_i) (Hagen-Poiseuille), inlet nodes
inject their prescribed flow rates, outlet nodes sit at zero pressure.
Nodal analysis yields pressures, from which per-pipe flow rates,
cross-section-mean velocities and effective diffusion coefficients follow.

With pure flow-source boundary conditions the solved flows are invariant
to the viscosity, so the default eta = 1 Pa s cannot affect any derived
channel quantity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ModelError
from .network import INLET, OUTLET, Pipe, VesselNetwork

#: Advection-dominance threshold on the pipe Peclet number u*l/Deff below
#: which the flux-based channel model becomes questionable.  Heuristic.
WEAK_ADVECTION_PECLET = 10.0


@dataclass(frozen=True)
class FlowSolution:
    """Per-pipe hydraulic state and per-node pressures (outlets at 0 Pa)."""

    flow_rate: Mapping[str, float]
    velocity: Mapping[str, float]
    effective_diffusion: Mapping[str, float]
    node_pressure: Mapping[str, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "flow_rate", dict(self.flow_rate))
        object.__setattr__(self, "velocity", dict(self.velocity))
        object.__setattr__(self, "effective_diffusion", dict(self.effective_diffusion))
        object.__setattr__(self, "node_pressure", dict(self.node_pressure))


def conductance(pipe: Pipe, viscosity: float) -> float:
    """Hagen-Poiseuille conductance pi r^4 / (8 eta l) in m^3/(s Pa)."""
    return math.pi * pipe.radius**4 / (8.0 * viscosity * pipe.length)


def effective_diffusion(pipe: Pipe, velocity: float, molecular_diffusion: float) -> float:
    """Aris-Taylor effective axial diffusion r^2 u^2 / (48 D) + D."""
    if not molecular_diffusion > 0:
        raise ModelError("molecular diffusion must be > 0 (dispersion formula is singular)")
    if velocity < 0:
        raise ModelError("velocity must be >= 0")
    return (pipe.radius * velocity) ** 2 / (48.0 * molecular_diffusion) + molecular_diffusion


def solve_flow(network: VesselNetwork) -> FlowSolution:
    """Solve the hydraulic network and derive velocities and dispersion.

    Unknown pressures live at inlet and connecting nodes; outlets are
    clamped to zero.  The sparse SPD system is solved directly.  A solved
    flow that runs against a pipe's direction is an error, not a silent
    reversal: edge directions are part of the model.
    """
    unknowns = sorted(n for n, r in network.node_roles.items() if r.kind != OUTLET)
    index = {n: i for i, n in enumerate(unknowns)}
    n_unknown = len(unknowns)

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for pipe in network.pipes:
        g = conductance(pipe, network.viscosity)
        for node, other in ((pipe.source, pipe.target), (pipe.target, pipe.source)):
            if node not in index:
                continue
            i = index[node]
            rows.append(i)
            cols.append(i)
            vals.append(g)
            if other in index:
                rows.append(i)
                cols.append(index[other])
                vals.append(-g)

    rhs = np.zeros(n_unknown)
    for node, role in network.node_roles.items():
        if role.kind == INLET:
            rhs[index[node]] += role.flow_rate

    matrix = sp.csc_matrix(sp.coo_matrix((vals, (rows, cols)), shape=(n_unknown, n_unknown)))
    pressures = spla.spsolve(matrix, rhs)
    if not np.all(np.isfinite(pressures)):
        raise ModelError("hydraulic system is singular (disconnected component?)")

    node_pressure = {n: float(pressures[i]) for n, i in index.items()}
    for node, role in network.node_roles.items():
        if role.kind == OUTLET:
            node_pressure[node] = 0.0

    flow_rate: dict[str, float] = {}
    velocity: dict[str, float] = {}
    eff_diff: dict[str, float] = {}
    for pipe in network.pipes:
        q = conductance(pipe, network.viscosity) * (
            node_pressure[pipe.source] - node_pressure[pipe.target]
        )
        if not q > 0:
            raise ModelError(
                f"edge direction inconsistent with flow: pipe {pipe.id!r} "
                f"solved to {q:.3e} m^3/s"
            )
        u = q / pipe.cross_section
        flow_rate[pipe.id] = q
        velocity[pipe.id] = u
        eff_diff[pipe.id] = effective_diffusion(pipe, u, network.molecular_diffusion)

    _check_conservation(network, flow_rate)
    return FlowSolution(flow_rate, velocity, eff_diff, node_pressure)


def _check_conservation(network: VesselNetwork, flow_rate: Mapping[str, float]) -> None:
    total_in = sum(r.flow_rate for r in network.node_roles.values() if r.kind == INLET)
    scale = max(total_in, max(flow_rate.values()))
    for node, role in network.node_roles.items():
        inflow = sum(flow_rate[p.id] for p in network.pipes_into(node))
        outflow = sum(flow_rate[p.id] for p in network.pipes_from(node))
        if role.kind == INLET:
            inflow += role.flow_rate
        if role.kind != OUTLET and abs(inflow - outflow) > 1e-12 * scale:
            raise ModelError(f"mass conservation violated at node {node!r}")
    total_out = sum(flow_rate[p.id] for p in network.pipes if network.node_roles[p.target].kind == OUTLET)
    if abs(total_in - total_out) > 1e-12 * scale:
        raise ModelError("total inlet and outlet flows disagree")


def kirchhoff_residual(network: VesselNetwork, flow: FlowSolution) -> float:
    """Largest node flow imbalance, normalized by the largest inlet flow."""
    total_in = max(r.flow_rate for r in network.node_roles.values() if r.kind == INLET)
    worst = 0.0
    for node, role in network.node_roles.items():
        if role.kind == OUTLET:
            continue
        inflow = sum(flow.flow_rate[p.id] for p in network.pipes_into(node))
        outflow = sum(flow.flow_rate[p.id] for p in network.pipes_from(node))
        if role.kind == INLET:
            inflow += role.flow_rate
        worst = max(worst, abs(inflow - outflow))
    return worst / total_in


def peclet_number(pipe: Pipe, flow: FlowSolution) -> float:
    """Pipe-scale Peclet number u*l/Deff (advection vs. dispersion)."""
    return flow.velocity[pipe.id] * pipe.length / flow.effective_diffusion[pipe.id]


def weak_advection_pipes(
    network: VesselNetwork,
    flow: FlowSolution,
    pipe_ids: Iterable[str],
    threshold: float = WEAK_ADVECTION_PECLET,
) -> list[str]:
    """Pipes among ``pipe_ids`` whose Peclet number falls below ``threshold``."""
    return [pid for pid in pipe_ids if peclet_number(network.pipe(pid), flow) < threshold]
