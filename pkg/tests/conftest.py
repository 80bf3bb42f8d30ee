"""Shared fixtures: each bundled network, parsed and solved once per session."""

from __future__ import annotations

import warnings
from typing import NamedTuple

import pytest

import vasculink as vl
from vasculink.fixtures import FIXTURE_NAMES, fixture_text


class Case(NamedTuple):
    name: str
    network: vl.VesselNetwork
    placement: vl.TxRxPlacement
    flow: vl.FlowSolution
    model: vl.ChannelModel
    metrics: vl.MultipathMetrics


def _load(name: str) -> Case:
    network, placement = vl.parse_network(fixture_text(name))
    flow = vl.solve_flow(network)
    with warnings.catch_warnings():
        # the single-pipe fixture intentionally shares Tx/Rx pipe
        warnings.simplefilter("ignore")
        model = vl.build_channel(network, flow, placement)
    return Case(name, network, placement, flow, model, vl.rms_delay_spread(model.ensemble))


@pytest.fixture(scope="session")
def cases() -> dict[str, Case]:
    return {name: _load(name) for name in FIXTURE_NAMES}


@pytest.fixture(scope="session")
def single_pipe(cases) -> Case:
    return cases["single_pipe"]


@pytest.fixture(scope="session")
def diamond(cases) -> Case:
    return cases["diamond"]


@pytest.fixture(scope="session")
def diamond_leak(cases) -> Case:
    return cases["diamond_leak"]


@pytest.fixture(scope="session")
def three_path(cases) -> Case:
    return cases["three_path"]


@pytest.fixture(scope="session")
def mesh(cases) -> Case:
    return cases["mesh"]
