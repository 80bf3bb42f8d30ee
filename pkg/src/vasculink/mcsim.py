"""Monte Carlo particle oracle for the analytic channel model.

Each particle's transit of a pipe is one inverse-Gaussian first-passage
draw (mean z/u, variance 2 Deff z / u^3); at a node with several outgoing
pipes the particle routes randomly in proportion to the flow rates.  A
particle is observed when it first crosses the Rx window center; its
network first-passage time is the sum of its per-pipe draws.  This
reproduces, particle by particle, the stochastic construction that the
closed-form channel expressions summarize, and serves as an independent
check of them.

Particles are simulated in vectorized cohorts grouped by path prefix.
Work is split into fixed-size chunks with independent RNG streams derived
from (seed, chunk index), so results depend only on the seed, not on the
number of worker threads executing the chunks.
"""

from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import ModelError
from .flow import FlowSolution
from .network import OUTLET, TxRxPlacement, VesselNetwork
from .rng import make_rng

CHUNK_PARTICLES = 250_000


@dataclass(frozen=True)
class ParticleTrace:
    """Realized path, network first-passage time, and whether the Rx saw it."""

    path_pipe_ids: tuple[str, ...]
    network_fpt: float
    reached_rx: bool


def sample_pipe_fpt(
    length: float,
    velocity: float,
    eff_diffusion: float,
    rng: np.random.Generator,
    size: int | None = None,
):
    """Draw inverse-Gaussian first-passage times across a pipe segment.

    Michael-Schucany-Haas transformation: exact, no rejection loop.  A
    zero-length segment deterministically takes zero time.
    """
    if length < 0 or not velocity > 0 or not eff_diffusion > 0:
        raise ModelError("pipe FPT sampling needs length >= 0, velocity > 0, diffusion > 0")
    n = 1 if size is None else int(size)
    if length == 0.0:
        out = np.zeros(n)
        return float(out[0]) if size is None else out

    mean = length / velocity
    variance = 2.0 * eff_diffusion * length / velocity**3
    shape = mean**3 / variance

    nu = rng.standard_normal(n)
    y = nu * nu
    my = mean * y
    x = mean + (mean / (2.0 * shape)) * (my - np.sqrt(my * (4.0 * shape + my)))
    keep = rng.random(n) <= mean / (mean + x)
    draws = np.where(keep, x, mean * mean / x)
    return float(draws[0]) if size is None else draws


class ParticleSimulation:
    """Aggregated outcome of a particle run.

    Reached and exited particles are stored per realized path as arrays of
    network first-passage times (arrival at the Rx center, or exit through
    an outlet, respectively).
    """

    def __init__(
        self,
        count: int,
        reached: dict[tuple[str, ...], np.ndarray],
        exited: dict[tuple[str, ...], np.ndarray],
    ) -> None:
        self.count = count
        self.reached = reached
        self.exited = exited

    @property
    def reached_count(self) -> int:
        return sum(len(v) for v in self.reached.values())

    @property
    def reach_fraction(self) -> float:
        return self.reached_count / self.count

    @property
    def arrival_times(self) -> np.ndarray:
        """First-passage times of all observed particles (path-sorted order)."""
        parts = [self.reached[key] for key in sorted(self.reached)]
        if not parts:
            return np.empty(0)
        return np.concatenate(parts)

    def path_fractions(self) -> dict[tuple[str, ...], float]:
        """Empirical fraction of particles per realized Tx->Rx path."""
        return {key: len(v) / self.count for key, v in sorted(self.reached.items())}

    def arrival_histogram(self, bins) -> tuple[np.ndarray, np.ndarray]:
        return np.histogram(self.arrival_times, bins=bins)

    def traces(self) -> Iterator[ParticleTrace]:
        for key in sorted(self.reached):
            for t in self.reached[key]:
                yield ParticleTrace(key, float(t), True)
        for key in sorted(self.exited):
            for t in self.exited[key]:
                yield ParticleTrace(key, float(t), False)


def simulate_particles(
    network: VesselNetwork,
    flow: FlowSolution,
    placement: TxRxPlacement,
    count: int,
    seed: int = 0,
    workers: int = 1,
    hop_cap: int | None = None,
) -> ParticleSimulation:
    """Release ``count`` particles at the Tx and track them to Rx or outlet.

    Deterministic for a given seed regardless of ``workers``: the particle
    budget is split into fixed chunks, each with its own (seed, chunk)
    stream, and merged in chunk order.
    """
    if count < 1:
        raise ModelError("particle count must be >= 1")
    if hop_cap is None:
        hop_cap = 10 * len(network.pipes)

    chunks = [CHUNK_PARTICLES] * (count // CHUNK_PARTICLES)
    if count % CHUNK_PARTICLES:
        chunks.append(count % CHUNK_PARTICLES)

    def run_chunk(i_n: tuple[int, int]):
        i, n = i_n
        return _simulate_chunk(network, flow, placement, n, make_rng(seed, (i,)), hop_cap)

    jobs = list(enumerate(chunks))
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_chunk, jobs))
    else:
        results = [run_chunk(job) for job in jobs]

    reached: dict[tuple[str, ...], list[np.ndarray]] = {}
    exited: dict[tuple[str, ...], list[np.ndarray]] = {}
    for chunk_reached, chunk_exited in results:
        for key, times in chunk_reached.items():
            reached.setdefault(key, []).append(times)
        for key, times in chunk_exited.items():
            exited.setdefault(key, []).append(times)
    return ParticleSimulation(
        count=count,
        reached={k: np.concatenate(v) for k, v in reached.items()},
        exited={k: np.concatenate(v) for k, v in exited.items()},
    )


def _simulate_chunk(
    network: VesselNetwork,
    flow: FlowSolution,
    placement: TxRxPlacement,
    count: int,
    rng: np.random.Generator,
    hop_cap: int,
) -> tuple[dict[tuple[str, ...], np.ndarray], dict[tuple[str, ...], np.ndarray]]:
    tx_pipe = network.pipe(placement.tx_pipe)
    rx_pipe = network.pipe(placement.rx_pipe)

    def draw(pipe_id: str, distance: float, n: int) -> np.ndarray:
        return sample_pipe_fpt(
            distance, flow.velocity[pipe_id], flow.effective_diffusion[pipe_id], rng, size=n
        )

    reached: dict[tuple[str, ...], np.ndarray] = {}
    exited: dict[tuple[str, ...], np.ndarray] = {}

    if tx_pipe.id == rx_pipe.id:
        if placement.rx_position <= placement.tx_position:
            raise ModelError("no Tx->Rx path exists (Rx is upstream of Tx in the shared pipe)")
        reached[(tx_pipe.id,)] = draw(
            tx_pipe.id, placement.rx_position - placement.tx_position, count
        )
        return reached, exited

    start_times = draw(tx_pipe.id, tx_pipe.length - placement.tx_position, count)
    # Cohorts share a path prefix; each node visit splits one cohort into
    # per-outgoing-pipe sub-cohorts with a single vectorized categorical draw.
    queue: deque[tuple[str, tuple[str, ...], np.ndarray]] = deque()
    queue.append((tx_pipe.target, (tx_pipe.id,), start_times))
    while queue:
        node, trail, times = queue.popleft()
        if len(trail) > hop_cap:
            raise ModelError(f"particle exceeded the hop cap of {hop_cap} pipes")
        if network.node_roles[node].kind == OUTLET:
            exited[trail] = np.concatenate([exited[trail], times]) if trail in exited else times
            continue
        outgoing = network.pipes_from(node)
        if len(outgoing) == 1:
            assignments = [np.arange(len(times))]
        else:
            rates = np.array([flow.flow_rate[p.id] for p in outgoing])
            edges = np.cumsum(rates / rates.sum())
            choice = np.searchsorted(edges, rng.random(len(times)), side="right")
            choice = np.minimum(choice, len(outgoing) - 1)
            assignments = [np.flatnonzero(choice == j) for j in range(len(outgoing))]
        for pipe, idx in zip(outgoing, assignments):
            if len(idx) == 0:
                continue
            subset = times[idx]
            if pipe.id == rx_pipe.id:
                arrivals = subset + draw(pipe.id, placement.rx_position, len(subset))
                key = trail + (pipe.id,)
                reached[key] = np.concatenate([reached[key], arrivals]) if key in reached else arrivals
            else:
                queue.append((pipe.target, trail + (pipe.id,), subset + draw(pipe.id, pipe.length, len(subset))))
    return reached, exited
