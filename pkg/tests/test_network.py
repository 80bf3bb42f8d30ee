import json

import pytest

import vasculink as vl
from vasculink import ModelError, SchemaError
from vasculink.fixtures import fixture_document, fixture_text


def _doc(**overrides):
    base = {
        "diffusion": 1e-7,
        "nodes": [
            {"id": "in", "role": "inlet", "flow_rate": 1e-8},
            {"id": "out", "role": "outlet"},
        ],
        "pipes": [
            {"id": "p1", "source": "in", "target": "out", "length": 0.1, "radius": 1e-3}
        ],
        "tx": {"pipe": "p1", "z": 0.0, "molecules": 100},
        "rx": {"pipe": "p1", "z": 0.05, "length": 0.01},
    }
    base.update(overrides)
    return base


def test_parse_minimal_network():
    network, placement = vl.parse_network(json.dumps(_doc()))
    assert len(network.pipes) == 1
    assert len(network.inlet_nodes) == 1
    assert len(network.outlet_nodes) == 1
    assert placement.released_molecules == 100
    assert network.viscosity == 1.0  # optional field defaults


def test_self_loop_rejected():
    doc = _doc(pipes=[{"id": "p1", "source": "in", "target": "in", "length": 0.1, "radius": 1e-3}])
    with pytest.raises(ModelError, match="self-loop"):
        vl.parse_network(doc)


def test_diamond_degrees(diamond):
    net = diamond.network
    assert len(net.pipes) == 4
    # hand count on the 4-edge multigraph: one bifurcation, one junction
    assert [n for n in net.node_roles if net.is_bifurcation(n)] == ["split"]
    assert [n for n in net.node_roles if net.is_junction(n)] == ["merge"]
    assert net.out_degree("split") == 2
    assert net.in_degree("merge") == 2


@pytest.mark.parametrize("name", ["single_pipe", "diamond", "diamond_leak", "three_path", "mesh"])
def test_round_trip_identity(name):
    network, placement = vl.parse_network(fixture_text(name))
    again_net, again_placement = vl.parse_network(vl.serialize_network(network, placement))
    assert again_net == network
    assert again_placement == placement


def test_classification_matches_degrees(mesh):
    net = mesh.network
    for node in net.node_roles:
        assert net.is_bifurcation(node) == (net.out_degree(node) > 1)
        assert net.is_junction(node) == (net.in_degree(node) > 1 and net.out_degree(node) == 1)


def test_connecting_nodes_have_flow_through(mesh):
    net = mesh.network
    for node, role in net.node_roles.items():
        if role.kind == vl.CONNECTING:
            assert net.in_degree(node) >= 1
            assert net.out_degree(node) >= 1


def test_mixed_merge_split_node_accepted(mesh):
    # node "a" merges two inlet pipes and splits into two: allowed
    assert mesh.network.in_degree("a") == 2
    assert mesh.network.out_degree("a") == 2


def test_topological_order_single_pipe(single_pipe):
    assert vl.validate_dag(single_pipe.network) == ["in", "out"]


def test_topological_order_diamond(diamond):
    order = vl.validate_dag(diamond.network)
    assert order[0] == "in"
    assert order[-1] == "out"
    assert order.index("split") < order.index("merge")


def test_cycle_reported_with_edge():
    doc = _doc(
        nodes=[
            {"id": "in", "role": "inlet", "flow_rate": 1e-8},
            {"id": "a", "role": "connecting"},
            {"id": "b", "role": "connecting"},
            {"id": "out", "role": "outlet"},
        ],
        pipes=[
            {"id": "p_in", "source": "in", "target": "a", "length": 0.1, "radius": 1e-3},
            {"id": "p_ab", "source": "a", "target": "b", "length": 0.1, "radius": 1e-3},
            {"id": "p_ba", "source": "b", "target": "a", "length": 0.1, "radius": 1e-3},
            {"id": "p_out", "source": "b", "target": "out", "length": 0.1, "radius": 1e-3},
        ],
        tx={"pipe": "p_in", "z": 0.0, "molecules": 1},
        rx={"pipe": "p_out", "z": 0.05, "length": 0.01},
    )
    with pytest.raises(ModelError, match=r"cycle.*p_(ab|ba)"):
        vl.parse_network(doc)


@pytest.mark.parametrize(
    "mutation, exc, pattern",
    [
        ({"diffusion": "fast"}, SchemaError, "expected a number"),
        ({"nodes": {}}, SchemaError, "must be an array"),
        ({"tx": {"pipe": "p1", "z": 0.0}}, SchemaError, "missing required key 'molecules'"),
        ({"tx": {"pipe": "p1", "z": 0.0, "molecules": 2.5}}, SchemaError, "expected an integer"),
        ({"rx": {"pipe": "p1", "z": True, "length": 0.01}}, SchemaError, "expected a number"),
    ],
)
def test_schema_violations(mutation, exc, pattern):
    with pytest.raises(exc, match=pattern):
        vl.parse_network(_doc(**mutation))


def test_invalid_json_is_schema_error():
    with pytest.raises(SchemaError, match="invalid JSON"):
        vl.parse_network("{not json")


def test_dangling_node_reference():
    doc = _doc(pipes=[{"id": "p1", "source": "in", "target": "nowhere", "length": 0.1, "radius": 1e-3}])
    with pytest.raises(ModelError, match="undeclared node 'nowhere'"):
        vl.parse_network(doc)


def test_duplicate_pipe_id():
    doc = _doc(
        pipes=[
            {"id": "p1", "source": "in", "target": "out", "length": 0.1, "radius": 1e-3},
            {"id": "p1", "source": "in", "target": "out", "length": 0.2, "radius": 1e-3},
        ]
    )
    with pytest.raises(ModelError, match="duplicate pipe id 'p1'"):
        vl.parse_network(doc)


def test_unreferenced_node_rejected():
    doc = _doc(
        nodes=[
            {"id": "in", "role": "inlet", "flow_rate": 1e-8},
            {"id": "out", "role": "outlet"},
            {"id": "ghost", "role": "connecting"},
        ]
    )
    with pytest.raises(ModelError, match="ghost"):
        vl.parse_network(doc)


def test_inlet_needs_positive_flow():
    doc = _doc(
        nodes=[
            {"id": "in", "role": "inlet", "flow_rate": 0.0},
            {"id": "out", "role": "outlet"},
        ]
    )
    with pytest.raises(ModelError, match="flow_rate"):
        vl.parse_network(doc)


def test_flow_rate_forbidden_outside_inlets():
    doc = _doc(
        nodes=[
            {"id": "in", "role": "inlet", "flow_rate": 1e-8},
            {"id": "out", "role": "outlet", "flow_rate": 1e-8},
        ]
    )
    with pytest.raises(SchemaError, match="only inlet nodes"):
        vl.parse_network(doc)


def test_inlet_with_inflow_rejected():
    doc = _doc(
        nodes=[
            {"id": "in", "role": "inlet", "flow_rate": 1e-8},
            {"id": "mid", "role": "inlet", "flow_rate": 1e-8},
            {"id": "out", "role": "outlet"},
        ],
        pipes=[
            {"id": "p1", "source": "in", "target": "mid", "length": 0.1, "radius": 1e-3},
            {"id": "p2", "source": "mid", "target": "out", "length": 0.1, "radius": 1e-3},
        ],
    )
    with pytest.raises(ModelError, match="inlet node 'mid'"):
        vl.parse_network(doc)


def test_disconnected_network_rejected():
    doc = _doc(
        nodes=[
            {"id": "in", "role": "inlet", "flow_rate": 1e-8},
            {"id": "out", "role": "outlet"},
            {"id": "in2", "role": "inlet", "flow_rate": 1e-8},
            {"id": "out2", "role": "outlet"},
        ],
        pipes=[
            {"id": "p1", "source": "in", "target": "out", "length": 0.1, "radius": 1e-3},
            {"id": "p2", "source": "in2", "target": "out2", "length": 0.1, "radius": 1e-3},
        ],
    )
    with pytest.raises(ModelError, match="not connected"):
        vl.parse_network(doc)


def test_rx_window_must_stay_inside_pipe():
    with pytest.raises(ModelError, match="rx window"):
        vl.parse_network(_doc(rx={"pipe": "p1", "z": 0.099, "length": 0.01}))
    # touching the end exactly is fine
    vl.parse_network(_doc(rx={"pipe": "p1", "z": 0.095, "length": 0.01}))


def test_tx_at_pipe_boundary_accepted():
    vl.parse_network(_doc(tx={"pipe": "p1", "z": 0.1, "molecules": 1}))
    with pytest.raises(ModelError, match="tx position"):
        vl.parse_network(_doc(tx={"pipe": "p1", "z": 0.11, "molecules": 1}))


def test_molecule_count_minimum():
    with pytest.raises(ModelError, match="molecule count"):
        vl.parse_network(_doc(tx={"pipe": "p1", "z": 0.0, "molecules": 0}))


def test_fixture_documents_are_schema_complete():
    for name in ("diamond", "mesh"):
        doc = fixture_document(name)
        assert set(doc) >= {"diffusion", "nodes", "pipes", "tx", "rx"}
