from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pairbid.fixtures import random_upper_bids
from pairbid.model import MvnoProfile, Request, Slice, SliceSpec, FlatPrice
from pairbid.network import GraphConfig, build_graph, check_placement
from pairbid.pricing import vcg_price
from pairbid.upper import (NbWeights, SliceCatalog, UpperBid, bid_value_from_revenues, generate_xor_bids,
                           mvno_bid_value, normalized_benefit, rank_bids, run_upper_greedy,
                           upper_vcg_charges)


def bid(i, value, node=0, service="eMBB", traffic=1.0, latency=10.0, group=None, mvno="V"):
    return UpperBid(i, mvno, value, (SliceSpec(node, service, traffic, latency),),
                    group if group is not None else i)


def test_bid_value_examples():
    assert bid_value_from_revenues(500, 400, 0.10) == pytest.approx(90.0)
    assert bid_value_from_revenues(400, 400, 0.10) == 0.0
    assert bid_value_from_revenues(500, 400, 0.0) == 100.0


def test_mvno_bid_value_counts_new_users_only():
    v = MvnoProfile("V", resale_gain=0.1, counter_bid_policy=FlatPrice(0.0))
    demand = [Request(0, 0, "eMBB", 1.0, 300.0), Request(1, 0, "eMBB", 1.0, 200.0)]
    held = [Slice("h", 0, "eMBB", 1.0, "V")]
    cand = [Slice("c", 0, "eMBB", 1.0, "V")]
    assert mvno_bid_value(v, demand, held, cand) == pytest.approx(180.0)
    assert mvno_bid_value(v, demand[:1], held, cand) == 0.0


def test_xor_bids_by_class():
    v = MvnoProfile("V", counter_bid_policy=FlatPrice(0.0))
    cat = SliceCatalog(variants=(1.0, 2.0, 5.0))
    one = generate_xor_bids(v, [Request(0, 3, "eMBB", 1.0, 10.0)], cat)
    assert len(one) == 3 and len({b.xor_group for b in one}) == 1
    assert [b.bundle[0].traffic for b in one] == [1.0, 2.0, 5.0]
    assert generate_xor_bids(v, [], cat) == []
    two = generate_xor_bids(v, [Request(0, 3, "eMBB", 1.0, 10.0), Request(1, 4, "uRLLC", 1.0, 10.0)], cat)
    assert len({b.xor_group for b in two}) == 2
    assert {b.bundle[0].max_latency_ms for b in two} == {1.0, 10.0}


def test_xor_bids_respect_class_filter_and_bound():
    demand = [Request(0, 3, "eMBB", 3.0, 30.0), Request(1, 4, "eMBB", 3.0, 60.0)]
    cat = SliceCatalog(variants=(5.0,))
    free = MvnoProfile("V", 0.0, counter_bid_policy=FlatPrice(0.0))
    assert len(generate_xor_bids(free, demand, cat, classes={(4, "eMBB")})) == 1
    tight = replace(free, capacity_bound=3.0)
    values = {b.bundle[0].origin: b.value for b in generate_xor_bids(tight, demand, cat)}
    assert values == {3: 30.0, 4: 60.0}


def test_normalized_benefit_examples():
    assert normalized_benefit(bid(0, 100.0, traffic=4.0), NbWeights(1, 0)) == pytest.approx(50.0)
    assert normalized_benefit(bid(0, 100.0, latency=0.5), NbWeights(0, 1)) == pytest.approx(70.711, abs=1e-3)
    b = bid(0, 100.0, traffic=3.0, latency=1.0)
    assert normalized_benefit(replace(b, value=250.0)) == pytest.approx(2.5 * normalized_benefit(b))
    with pytest.raises(ValueError):
        NbWeights(0, 0)


def test_ranking_ties():
    a, b = bid(1, 100.0), bid(0, 100.0)
    assert [x.id for x in rank_bids([a, b])] == [0, 1]


def test_upper_greedy_examples():
    g = build_graph()
    empty = run_upper_greedy(g, [])
    assert empty.accepted == () and empty.profit == 0
    single = bid(0, 100.0)
    power = check_placement(g, [single.bundle]).power
    outcome = run_upper_greedy(g, [single], ec=10.0 * 1000.0 / power)
    assert outcome.energy_cost == pytest.approx(10.0) and outcome.profit == pytest.approx(90.0)
    pair = [bid(0, 100.0, group="G"), bid(1, 120.0, group="G")]
    assert [b.id for b in run_upper_greedy(g, pair).accepted] == [1]


def test_infeasible_bundle_skipped():
    g = build_graph(GraphConfig(n_nodes=2))
    bids = [bid(0, 200.0, node=1, traffic=40.0), bid(1, 150.0, node=1, traffic=40.0), bid(2, 10.0, node=0, traffic=5.0)]
    outcome = run_upper_greedy(g, bids, NbWeights(1, 0))
    assert [b.id for b in outcome.accepted] == [0, 2]


@pytest.mark.parametrize("seed", range(15))
def test_upper_outcome_feasible_and_xor(seed):
    g = build_graph()
    bids = random_upper_bids(np.random.default_rng(seed), 30)
    outcome = run_upper_greedy(g, bids)
    groups = [b.xor_group for b in outcome.accepted]
    assert len(groups) == len(set(groups))
    assert check_placement(g, [b.bundle for b in outcome.accepted]).feasible


@pytest.mark.parametrize("seed", range(15))
def test_resumed_vcg_matches_full_reclearing(seed):
    g = build_graph(GraphConfig(n_nodes=4))
    bids = random_upper_bids(np.random.default_rng(seed), 14)
    outcome, charges = upper_vcg_charges(g, bids)

    def clear(subset):
        return run_upper_greedy(g, subset).realized_values()

    assert set(charges) == {b.xor_group for b in outcome.accepted}
    for key, charge in charges.items():
        expected = vcg_price(key, bids, clear, key=lambda b: b.xor_group)
        assert charge.q_vcg == pytest.approx(expected)


def test_vcg_cap_at_bid():
    g = build_graph(GraphConfig(n_nodes=2))
    bids = [bid(0, 50.0, node=1, traffic=40.0), bid(1, 30.0, node=1, traffic=40.0),
            bid(2, 30.0, node=1, traffic=40.0)]
    _, charges = upper_vcg_charges(g, bids, NbWeights(1, 0))
    _, capped = upper_vcg_charges(g, bids, NbWeights(1, 0), cap_at_bid=True)
    assert charges[0].q_vcg == 30.0 and capped[0].q_vcg == 30.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.floats(1.0, 4.0))
def test_raising_a_bid_never_evicts(seed, scale):
    g = build_graph()
    bids = random_upper_bids(np.random.default_rng(seed), 25)
    outcome = run_upper_greedy(g, bids)
    for w in outcome.accepted:
        raised = [replace(b, value=b.value * scale) if b.id == w.id else b for b in bids]
        assert w.id in {b.id for b in run_upper_greedy(g, raised).accepted}
