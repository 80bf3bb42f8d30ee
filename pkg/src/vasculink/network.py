"""Vessel-network topology: pipes, node roles, Tx/Rx placement, parsing.

A vessel network is a directed multigraph of cylindrical pipes.  Edge
direction follows the fluid flow, so a valid network is acyclic; inlet
nodes only feed flow in, outlet nodes only drain it.  Everything here is
immutable after construction and safe to share between threads.
"""

from __future__ import annotations

import heapq
import json
import math
from collections import deque
from dataclasses import dataclass
from typing import Any, Iterator, Mapping

from .errors import ModelError, SchemaError

INLET = "inlet"
OUTLET = "outlet"
CONNECTING = "connecting"

_ROLES = (INLET, OUTLET, CONNECTING)


@dataclass(frozen=True)
class Pipe:
    """Cylindrical conduit carrying fluid from ``source`` to ``target``.

    Lengths and radii are in meters.  Parallel pipes between the same pair
    of nodes are allowed (multigraph); a pipe may not loop onto one node.
    """

    id: str
    source: str
    target: str
    length: float
    radius: float

    def __post_init__(self) -> None:
        if not self.length > 0:
            raise ModelError(f"pipe {self.id!r}: length must be > 0")
        if not self.radius > 0:
            raise ModelError(f"pipe {self.id!r}: radius must be > 0")
        if self.source == self.target:
            raise ModelError(f"pipe {self.id!r}: source and target coincide (self-loop)")

    @property
    def cross_section(self) -> float:
        """Cross-sectional area in m^2."""
        return math.pi * self.radius**2


@dataclass(frozen=True)
class NodeRole:
    """Role of a node: inlet (with a prescribed flow rate), outlet, or connecting."""

    kind: str
    flow_rate: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _ROLES:
            raise SchemaError(f"unknown node role {self.kind!r}")
        if self.kind == INLET:
            if self.flow_rate is None:
                raise SchemaError("inlet node requires a flow_rate")
            if not self.flow_rate > 0:
                raise ModelError("inlet flow_rate must be > 0")
        elif self.flow_rate is not None:
            raise SchemaError(f"{self.kind} node must not carry a flow_rate")


@dataclass(frozen=True)
class VesselNetwork:
    """Directed multigraph of pipes plus per-node roles.

    Invariants enforced at construction: connected when directions are
    ignored, acyclic when directed, inlets have in-degree 0 and out-degree
    >= 1, outlets the reverse, connecting nodes have both.  Bifurcations
    (out-degree > 1) and junctions (in-degree > 1, out-degree 1) are
    derived, never stored.
    """

    pipes: tuple[Pipe, ...]
    node_roles: Mapping[str, NodeRole]
    molecular_diffusion: float
    viscosity: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "pipes", tuple(self.pipes))
        object.__setattr__(self, "node_roles", dict(self.node_roles))
        if not self.molecular_diffusion > 0:
            raise ModelError("molecular diffusion coefficient must be > 0")
        if not self.viscosity > 0:
            raise ModelError("viscosity must be > 0")
        self._validate_graph()

    # -- validation ------------------------------------------------------

    def _validate_graph(self) -> None:
        if not self.pipes:
            raise ModelError("network has no pipes")
        seen_ids: set[str] = set()
        for pipe in self.pipes:
            if pipe.id in seen_ids:
                raise ModelError(f"duplicate pipe id {pipe.id!r}")
            seen_ids.add(pipe.id)
            for node in (pipe.source, pipe.target):
                if node not in self.node_roles:
                    raise ModelError(f"pipe {pipe.id!r} references undeclared node {node!r}")

        referenced = {p.source for p in self.pipes} | {p.target for p in self.pipes}
        unused = set(self.node_roles) - referenced
        if unused:
            raise ModelError(f"declared nodes not referenced by any pipe: {sorted(unused)}")

        roles = self.node_roles
        if not any(r.kind == INLET for r in roles.values()):
            raise ModelError("network needs at least one inlet node")
        if not any(r.kind == OUTLET for r in roles.values()):
            raise ModelError("network needs at least one outlet node")

        for node, role in roles.items():
            din, dout = self.in_degree(node), self.out_degree(node)
            if role.kind == INLET and (din != 0 or dout < 1):
                raise ModelError(f"inlet node {node!r} must have in-degree 0 and out-degree >= 1")
            if role.kind == OUTLET and (dout != 0 or din < 1):
                raise ModelError(f"outlet node {node!r} must have out-degree 0 and in-degree >= 1")
            if role.kind == CONNECTING and (din < 1 or dout < 1):
                raise ModelError(f"connecting node {node!r} is a dead end (needs inflow and outflow)")

        self._check_connected()
        topological_order(self)  # raises on directed cycles

    def _check_connected(self) -> None:
        adjacency: dict[str, set[str]] = {n: set() for n in self.node_roles}
        for pipe in self.pipes:
            adjacency[pipe.source].add(pipe.target)
            adjacency[pipe.target].add(pipe.source)
        start = next(iter(self.node_roles))
        seen = {start}
        frontier = deque([start])
        while frontier:
            for nxt in adjacency[frontier.popleft()]:
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        if seen != set(self.node_roles):
            missing = sorted(set(self.node_roles) - seen)
            raise ModelError(f"network is not connected; unreachable nodes: {missing}")

    # -- derived topology -------------------------------------------------

    def pipe(self, pipe_id: str) -> Pipe:
        for p in self.pipes:
            if p.id == pipe_id:
                return p
        raise ModelError(f"unknown pipe id {pipe_id!r}")

    def pipes_from(self, node: str) -> tuple[Pipe, ...]:
        return tuple(p for p in self.pipes if p.source == node)

    def pipes_into(self, node: str) -> tuple[Pipe, ...]:
        return tuple(p for p in self.pipes if p.target == node)

    def out_degree(self, node: str) -> int:
        return sum(1 for p in self.pipes if p.source == node)

    def in_degree(self, node: str) -> int:
        return sum(1 for p in self.pipes if p.target == node)

    def is_bifurcation(self, node: str) -> bool:
        return self.out_degree(node) > 1

    def is_junction(self, node: str) -> bool:
        return self.in_degree(node) > 1 and self.out_degree(node) == 1

    @property
    def inlet_nodes(self) -> tuple[str, ...]:
        return tuple(n for n, r in self.node_roles.items() if r.kind == INLET)

    @property
    def outlet_nodes(self) -> tuple[str, ...]:
        return tuple(n for n, r in self.node_roles.items() if r.kind == OUTLET)


@dataclass(frozen=True)
class TxRxPlacement:
    """Transmitter and receiver positions inside their host pipes.

    ``tx_position``/``rx_position`` are longitudinal coordinates (m) within
    the respective pipe; the receiver observes a window of ``rx_length``
    centered at ``rx_position``.  ``released_molecules`` is the number of
    molecules released per transmitted 1.
    """

    tx_pipe: str
    tx_position: float
    rx_pipe: str
    rx_position: float
    rx_length: float
    released_molecules: int

    def __post_init__(self) -> None:
        if self.tx_position < 0:
            raise ModelError("tx position must be >= 0")
        if self.rx_position < 0:
            raise ModelError("rx position must be >= 0")
        if not self.rx_length > 0:
            raise ModelError("rx window length must be > 0")
        if self.released_molecules < 1:
            raise ModelError("released molecule count must be >= 1")


def validate_placement(network: VesselNetwork, placement: TxRxPlacement) -> None:
    """Check that Tx and Rx fit inside their pipes.

    The Rx window must lie entirely within its pipe (it may touch but not
    straddle a node); the Tx may sit exactly on a pipe end.
    """
    tx_pipe = network.pipe(placement.tx_pipe)
    rx_pipe = network.pipe(placement.rx_pipe)
    if placement.tx_position > tx_pipe.length:
        raise ModelError(
            f"tx position {placement.tx_position} outside pipe {tx_pipe.id!r} "
            f"of length {tx_pipe.length}"
        )
    half = placement.rx_length / 2.0
    if placement.rx_position - half < 0 or placement.rx_position + half > rx_pipe.length:
        raise ModelError(
            f"rx window [{placement.rx_position - half}, {placement.rx_position + half}] "
            f"not contained in pipe {rx_pipe.id!r} of length {rx_pipe.length}"
        )


# -- parsing and serialization --------------------------------------------


def _require(mapping: Mapping[str, Any], key: str, context: str) -> Any:
    if key not in mapping:
        raise SchemaError(f"{context}: missing required key {key!r}")
    return mapping[key]


def _number(value: Any, context: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{context}: expected a number, got {value!r}")
    return float(value)


def _integer(value: Any, context: str) -> int:
    if isinstance(value, bool):
        raise SchemaError(f"{context}: expected an integer, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    raise SchemaError(f"{context}: expected an integer, got {value!r}")


def _string(value: Any, context: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(f"{context}: expected a string, got {value!r}")
    return value


def parse_network(document: str | bytes | Mapping[str, Any]) -> tuple[VesselNetwork, TxRxPlacement]:
    """Parse and fully validate a network document.

    ``document`` is JSON text or an equivalent mapping with keys
    ``diffusion``, ``nodes``, ``pipes``, ``tx``, ``rx`` and optional
    ``viscosity``.  Returns the immutable network and placement; raises
    :class:`SchemaError` on malformed input and :class:`ModelError` on
    invariant violations.
    """
    if isinstance(document, (str, bytes)):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    else:
        data = document
    if not isinstance(data, Mapping):
        raise SchemaError("document root must be an object")

    diffusion = _number(_require(data, "diffusion", "document"), "diffusion")
    viscosity = _number(data.get("viscosity", 1.0), "viscosity")

    raw_nodes = _require(data, "nodes", "document")
    if not isinstance(raw_nodes, list):
        raise SchemaError("'nodes' must be an array")
    node_roles: dict[str, NodeRole] = {}
    for entry in raw_nodes:
        if not isinstance(entry, Mapping):
            raise SchemaError("each node must be an object")
        node_id = _string(_require(entry, "id", "node"), "node id")
        kind = _string(_require(entry, "role", f"node {node_id!r}"), "node role")
        if node_id in node_roles:
            raise ModelError(f"duplicate node id {node_id!r}")
        if kind == INLET:
            rate = _number(_require(entry, "flow_rate", f"inlet node {node_id!r}"), "flow_rate")
            node_roles[node_id] = NodeRole(INLET, rate)
        else:
            if "flow_rate" in entry:
                raise SchemaError(f"node {node_id!r}: only inlet nodes carry flow_rate")
            node_roles[node_id] = NodeRole(kind)

    raw_pipes = _require(data, "pipes", "document")
    if not isinstance(raw_pipes, list):
        raise SchemaError("'pipes' must be an array")
    pipes = []
    for entry in raw_pipes:
        if not isinstance(entry, Mapping):
            raise SchemaError("each pipe must be an object")
        pid = _string(_require(entry, "id", "pipe"), "pipe id")
        pipes.append(
            Pipe(
                id=pid,
                source=_string(_require(entry, "source", f"pipe {pid!r}"), "source"),
                target=_string(_require(entry, "target", f"pipe {pid!r}"), "target"),
                length=_number(_require(entry, "length", f"pipe {pid!r}"), "length"),
                radius=_number(_require(entry, "radius", f"pipe {pid!r}"), "radius"),
            )
        )

    network = VesselNetwork(
        pipes=tuple(pipes),
        node_roles=node_roles,
        molecular_diffusion=diffusion,
        viscosity=viscosity,
    )

    tx = _require(data, "tx", "document")
    rx = _require(data, "rx", "document")
    if not isinstance(tx, Mapping) or not isinstance(rx, Mapping):
        raise SchemaError("'tx' and 'rx' must be objects")
    placement = TxRxPlacement(
        tx_pipe=_string(_require(tx, "pipe", "tx"), "tx pipe"),
        tx_position=_number(_require(tx, "z", "tx"), "tx z"),
        rx_pipe=_string(_require(rx, "pipe", "rx"), "rx pipe"),
        rx_position=_number(_require(rx, "z", "rx"), "rx z"),
        rx_length=_number(_require(rx, "length", "rx"), "rx length"),
        released_molecules=_integer(_require(tx, "molecules", "tx"), "tx molecules"),
    )
    validate_placement(network, placement)
    return network, placement


def serialize_network(network: VesselNetwork, placement: TxRxPlacement) -> dict[str, Any]:
    """Serialize back to the document schema (inverse of :func:`parse_network`)."""
    nodes = []
    for node_id in sorted(network.node_roles):
        role = network.node_roles[node_id]
        entry: dict[str, Any] = {"id": node_id, "role": role.kind}
        if role.kind == INLET:
            entry["flow_rate"] = role.flow_rate
        nodes.append(entry)
    return {
        "diffusion": network.molecular_diffusion,
        "viscosity": network.viscosity,
        "nodes": nodes,
        "pipes": [
            {"id": p.id, "source": p.source, "target": p.target, "length": p.length, "radius": p.radius}
            for p in network.pipes
        ],
        "tx": {
            "pipe": placement.tx_pipe,
            "z": placement.tx_position,
            "molecules": placement.released_molecules,
        },
        "rx": {
            "pipe": placement.rx_pipe,
            "z": placement.rx_position,
            "length": placement.rx_length,
        },
    }


def topological_order(network: VesselNetwork) -> list[str]:
    """Topological order of the nodes (lexicographically smallest one).

    Raises :class:`ModelError` naming an edge on a directed cycle if the
    network is cyclic.
    """
    in_deg = {n: network.in_degree(n) for n in network.node_roles}
    ready = [n for n, d in in_deg.items() if d == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        node = heapq.heappop(ready)
        order.append(node)
        for pipe in network.pipes_from(node):
            in_deg[pipe.target] -= 1
            if in_deg[pipe.target] == 0:
                heapq.heappush(ready, pipe.target)
    if len(order) < len(in_deg):
        remaining = {n for n, d in in_deg.items() if n not in set(order)}
        edge = _edge_on_cycle(network, remaining)
        raise ModelError(
            f"network contains a directed cycle through pipe {edge.id!r} "
            f"({edge.source} -> {edge.target})"
        )
    return order


def validate_dag(network: VesselNetwork) -> list[str]:
    """Alias of :func:`topological_order`; kept as the public validation entry."""
    return topological_order(network)


def _edge_on_cycle(network: VesselNetwork, remaining: set[str]) -> Pipe:
    # Walk successors inside the unresolved subgraph until a node repeats;
    # the edge entering the repeated node lies on a cycle.
    node = next(iter(sorted(remaining)))
    visited: list[str] = []
    while node not in visited:
        visited.append(node)
        for pipe in network.pipes_from(node):
            if pipe.target in remaining:
                node = pipe.target
                last = pipe
                break
    return last
