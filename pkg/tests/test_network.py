import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pairbid.exceptions import ConfigError, PreconditionError
from pairbid.model import SliceSpec
from pairbid.network import (GraphConfig, Placer, PlacementResult, build_graph, check_placement,
                             compute_energy_cost, default_edges, shortest_path, validate_placement)


def line_graph(n=3, **kw):
    return build_graph(GraphConfig(n_nodes=n, edges=tuple((i, i + 1) for i in range(n - 1)), **kw))


def test_default_graph_parameters():
    g = build_graph()
    assert len(g.nodes) == 10
    for n in g.nodes:
        assert (n.compute_capacity, n.p_idle, n.p_max, n.cores, n.clock_ghz) == (537.6, 130.0, 870.0, 8, 3.7)
    assert g.links
    for link in g.links:
        assert link.capacity == 100.0 and link.transponder_power == 110.4
    assert (g.power.p_fronthaul, g.power.p_midhaul, g.power.p_backhaul) == (18.2, 10.0, 1.0)
    assert g.gateway == 0 and "GW" in g.node_map[0].roles


def test_default_edges_are_ring_plus_chords():
    edges = default_edges(10)
    assert len(edges) == 12
    assert (0, 5) in edges and (2, 7) in edges


def test_degenerate_and_disconnected_configs():
    with pytest.raises(ConfigError):
        build_graph(GraphConfig(n_nodes=1))
    with pytest.raises(ConfigError):
        build_graph(GraphConfig(n_nodes=4, edges=((0, 1), (2, 3))))
    with pytest.raises(ConfigError):
        build_graph(GraphConfig(n_nodes=3, gateway=7))
    with pytest.raises(ConfigError):
        build_graph(GraphConfig(node={"p_idle": 900.0}))


def test_overrides():
    g = build_graph(GraphConfig(n_nodes=3, node_overrides={1: {"compute_capacity": 100.0}},
                                link={"capacity": 40.0}))
    assert g.node_map[1].compute_capacity == 100.0 and g.node_map[2].compute_capacity == 537.6
    assert all(l.capacity == 40.0 for l in g.links)


def test_shortest_path_examples():
    g = line_graph(4)
    assert shortest_path(g, 2, 2) == (2,)
    assert shortest_path(g, 1, 3) == (1, 2, 3)
    square = build_graph(GraphConfig(n_nodes=4, edges=((0, 2), (2, 3), (0, 1), (1, 3))))
    assert shortest_path(square, 0, 3) == (0, 1, 3)
    assert shortest_path(square, 3, 0) == (3, 1, 0)
    assert shortest_path(square, 0, 3, lambda a, b: {a, b} != {0, 1}) == (0, 2, 3)
    assert shortest_path(square, 0, 3, lambda a, b: False) is None


def test_shortest_path_is_min_hop_and_lexicographic_on_default_graph():
    g = build_graph()
    assert shortest_path(g, 3, 0) == (3, 2, 1, 0)
    assert shortest_path(g, 6, 0) == (6, 5, 0)


def test_empty_placement():
    r = check_placement(build_graph(), [])
    assert r.feasible and r.p_net == 0 and r.p_node == 0
    assert compute_energy_cost(r, 0.25) == 0


def test_colocated_slice_pays_each_interface_once():
    g = build_graph()
    spec = SliceSpec(0, "eMBB", 1.0, 10.0)
    r = check_placement(g, [[spec]])
    assert r.feasible and r.du_assignment[0] == 0 and r.cu_assignment[0] == 0
    assert r.routes[0] == ((0,), (0,), (0,))
    assert r.p_net == pytest.approx(18.2 + 10.0 + 1.0, abs=1e-12)
    assert r.p_node == pytest.approx(130.0 + 740.0 * 20.0 / 537.6, abs=1e-9)


def test_remote_slice_uses_transponders_on_backhaul():
    g = build_graph()
    r = check_placement(g, [[SliceSpec(3, "uRLLC", 1.0, 1.0)]])
    assert r.feasible and (r.du_assignment[0], r.cu_assignment[0]) == (3, 3)
    assert r.routes[0][2] == (3, 2, 1, 0)
    assert r.p_net == pytest.approx(29.2 + 3 * 110.4)
    assert validate_placement(g, [[SliceSpec(3, "uRLLC", 1.0, 1.0)]], r)


def test_link_capacity_violation_is_infeasible():
    g = build_graph(GraphConfig(n_nodes=2, kappa=1.0))
    spec = SliceSpec(1, "eMBB", 60.0, 10.0)
    assert check_placement(g, [[spec]]).feasible
    r = check_placement(g, [[spec], [spec]])
    assert not r.feasible and len(r.du_assignment) == 1


def test_latency_budget_enforced():
    g = line_graph(6)
    far = SliceSpec(5, "uRLLC", 1.0, 0.5)  # 5 hops of 0.15 ms each
    assert not check_placement(g, [[far]]).feasible
    assert check_placement(g, [[SliceSpec(5, "eMBB", 1.0, 10.0)]]).feasible


def test_compute_capacity_enforced():
    g = build_graph(GraphConfig(n_nodes=2))
    big = SliceSpec(1, "eMBB", 30.0, 10.0)  # 300 GFLOPS per unit, 600 total
    r = check_placement(g, [[big]])
    assert r.feasible and r.du_assignment[0] != r.cu_assignment[0]
    assert not check_placement(g, [[big], [big]]).feasible


def test_energy_cost():
    fake = PlacementResult(True, {}, {}, {}, p_net=100.0, p_node=900.0)
    assert compute_energy_cost(fake, 0.1, 1.0) == pytest.approx(0.1)
    assert compute_energy_cost(fake, 0.2, 1.0) == pytest.approx(2 * compute_energy_cost(fake, 0.1, 1.0))
    with pytest.raises(PreconditionError):
        compute_energy_cost(PlacementResult(False, {}, {}, {}, 1.0, 1.0), 0.1)


def test_place_bundle_is_atomic():
    g = build_graph(GraphConfig(n_nodes=2))
    p = Placer(g)
    assert not p.place_bundle([SliceSpec(1, "eMBB", 20.0, 10.0), SliceSpec(1, "eMBB", 40.0, 10.0)])
    assert len(p) == 0 and p.p_node == 0 and p.p_net == 0


def test_remove_restores_loads():
    g = build_graph()
    p = Placer(g)
    p.place(SliceSpec(3, "eMBB", 2.0, 10.0))
    before = (dict(p.node_load), dict(p.link_load), p.p_net, p.p_node)
    p.place(SliceSpec(7, "uRLLC", 4.0, 1.0))
    p.remove(1)
    assert (p.node_load, p.link_load, p.p_net, p.p_node) == before


specs = st.lists(st.builds(SliceSpec, st.integers(0, 9), st.sampled_from(["eMBB", "uRLLC"]),
                           st.floats(0.5, 10.0), st.sampled_from([1.0, 10.0])), max_size=40)


@settings(max_examples=60, deadline=None)
@given(specs)
def test_placement_properties(items):
    g = build_graph()
    placer = Placer(g)
    last_node, last_net = 0.0, 0.0
    placed = []
    for spec in items:
        if placer.place(spec):
            placed.append([spec])
        assert placer.p_node >= last_node - 1e-9
        assert placer.p_net >= last_net - 1e-9
        last_node, last_net = placer.p_node, placer.p_net
    result = placer.result()
    assert validate_placement(g, placed, result)
    again = check_placement(g, placed)
    assert again == result
