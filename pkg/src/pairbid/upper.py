"""Upper-level auction: the MNO sells slices to MVNOs.

MVNOs value a candidate slice by the extra user revenue it would let them
clear, net of their resale gain, and submit one bid per capacity variant of a
(node, service) slice, joined in an XOR group. The MNO ranks bids by
normalized benefit and accepts them greedily while CU/DU placement stays
feasible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Mapping, Sequence

from .lower import LowerAllocation, generate_counter_bid, id_key, run_lower_greedy
from .model import (DEFAULT_SERVICE_TYPES, CounterBidPolicy, Identifier, MvnoProfile, NodeId,
                    Request, ServiceType, Slice, SliceSpec)
from .network import NetworkGraph, Placer, PlacementResult, compute_energy_cost
from .pricing import Charge

LowerSolver = Callable[..., LowerAllocation]


@dataclass(frozen=True)
class UpperBid:
    """An MVNO's bid ``value`` for the slices in ``bundle``.

    At most one bid per ``xor_group`` can win.
    """

    id: Identifier
    mvno: Identifier
    value: float
    bundle: tuple[SliceSpec, ...]
    xor_group: Hashable

    def __post_init__(self):
        if not self.bundle:
            raise ValueError(f"bid {self.id!r} has an empty bundle")
        if not self.value >= 0:
            raise ValueError(f"bid {self.id!r}: value must be >= 0")

    @property
    def size(self) -> int:
        return len(self.bundle)

    @property
    def traffic(self) -> float:
        return math.fsum(s.traffic for s in self.bundle)


@dataclass(frozen=True)
class NbWeights:
    """Weights of the traffic and latency terms in :func:`normalized_benefit`.

    Both terms are made dimensionless by ``traffic_ref`` (Gbps) and
    ``latency_ref`` (ms).
    """

    w1: float = 1.0
    w2: float = 1.0
    traffic_ref: float = 1.0
    latency_ref: float = 1.0

    def __post_init__(self):
        if self.w1 < 0 or self.w2 < 0 or not self.w1 + self.w2 > 0:
            raise ValueError("need w1, w2 >= 0 and w1 + w2 > 0")
        if not (self.traffic_ref > 0 and self.latency_ref > 0):
            raise ValueError("reference scales must be > 0")


@dataclass
class UpperOutcome:
    accepted: tuple[UpperBid, ...]
    placement: PlacementResult
    revenue: float
    energy_cost: float

    @property
    def profit(self) -> float:
        return self.revenue - self.energy_cost

    def flags(self, bids: Sequence[UpperBid]) -> list[bool]:
        won = {b.id for b in self.accepted}
        return [b.id in won for b in bids]

    def realized_values(self) -> dict[Hashable, float]:
        return {b.xor_group: b.value for b in self.accepted}


@dataclass(frozen=True)
class SliceCatalog:
    """What the MNO offers: capacity variants per (node, service).

    ``nodes=None`` offers every node. ``base_rate`` is the per-Gbps base
    price of each service type.
    """

    variants: tuple[float, ...] = (1.0, 2.5, 5.0, 10.0)
    services: Mapping[str, ServiceType] = field(default_factory=lambda: dict(DEFAULT_SERVICE_TYPES))
    nodes: tuple[NodeId, ...] | None = None
    base_rate: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.variants or min(self.variants) <= 0:
            raise ValueError("capacity variants must be a nonempty list of positive values")

    def offers(self, node: NodeId, service: str) -> bool:
        return service in self.services and (self.nodes is None or node in self.nodes)

    def spec(self, node: NodeId, service: str, capacity: float) -> SliceSpec:
        return SliceSpec(node, service, capacity, self.services[service].latency_budget_ms)

    def base_price(self, service: str, capacity: float) -> float:
        return self.base_rate.get(service, 0.0) * capacity


def bid_value_from_revenues(r_with: float, r_without: float, resale_gain: float) -> float:
    return max(0.0, (r_with - r_without) * (1.0 - resale_gain))


def _counter_bids(mvno, demand, t, policy) -> dict:
    policy = policy if policy is not None else mvno.counter_bid_policy
    return {(mvno.id, r.id): generate_counter_bid(policy, mvno, r, t).price for r in demand}


def _revenue(mvno, demand, slices, t, policy, solver, prices=None) -> float:
    if prices is None:
        prices = _counter_bids(mvno, demand, t, policy)
    return solver(demand, slices, prices, t, mvnos=[mvno]).accepted_bid_sum


def mvno_bid_value(mvno: MvnoProfile, demand_snapshot: Sequence[Request], held_slices: Sequence[Slice],
                   candidate_bundle: Sequence[Slice], t: int = 0, *,
                   policy: CounterBidPolicy | None = None,
                   lower_solver: LowerSolver = run_lower_greedy,
                   r_without: float | None = None, prices: Mapping | None = None) -> float:
    """Marginal user revenue of ``candidate_bundle`` kept after resale gain.

    Both revenues come from clearing ``demand_snapshot`` against this MVNO's
    slices alone; ``r_without`` and the ``{(mvno, request): price}`` table
    ``prices`` may be passed in to reuse work across candidates.
    """
    held_ids = {s.id for s in held_slices}
    if any(s.id in held_ids for s in candidate_bundle):
        raise ValueError("candidate bundle overlaps held slices")
    if prices is None:
        prices = _counter_bids(mvno, demand_snapshot, t, policy)
    if r_without is None:
        r_without = _revenue(mvno, demand_snapshot, held_slices, t, policy, lower_solver, prices)
    r_with = _revenue(mvno, demand_snapshot, list(held_slices) + list(candidate_bundle), t,
                      policy, lower_solver, prices)
    return bid_value_from_revenues(r_with, r_without, mvno.resale_gain)


def generate_xor_bids(mvno: MvnoProfile, demand_snapshot: Sequence[Request], slice_catalog: SliceCatalog,
                      variants: Sequence[float] | None = None, *, held_slices: Sequence[Slice] = (),
                      t: int = 0, policy: CounterBidPolicy | None = None,
                      lower_solver: LowerSolver = run_lower_greedy,
                      next_id: Callable[[], Identifier] | None = None,
                      classes: Sequence[tuple] | None = None) -> list[UpperBid]:
    """One XOR group per demanded (node, service), one bid per capacity variant.

    ``classes`` restricts bidding to the given (node, service) pairs. When the
    MVNO's capacity bound cannot bind, each class is valued on its own
    requests and slices only, which gives the same numbers faster.
    """
    variants = tuple(variants if variants is not None else slice_catalog.variants)
    if not variants:
        raise ValueError("need at least one capacity variant")
    demanded = {(r.origin, r.service) for r in demand_snapshot
                if slice_catalog.offers(r.origin, r.service)}
    if classes is not None:
        demanded &= set(classes)
    if not demanded:
        return []
    if next_id is None:
        counter = iter(range(10**12))
        next_id = lambda: next(counter)  # noqa: E731
    separable = math.fsum(r.traffic for r in demand_snapshot) <= mvno.capacity_bound
    all_prices = _counter_bids(mvno, demand_snapshot, t, policy)
    whole = None if separable else _revenue(mvno, demand_snapshot, held_slices, t, policy,
                                            lower_solver, all_prices)
    bids = []
    for node, service in sorted(demanded, key=lambda c: (c[0], id_key(c[1]))):
        group = (mvno.id, node, service)
        if separable:
            demand = [r for r in demand_snapshot if (r.origin, r.service) == (node, service)]
            held = [s for s in held_slices if (s.origin, s.service) == (node, service)]
            r_without = _revenue(mvno, demand, held, t, policy, lower_solver, all_prices)
        else:
            demand, held, r_without = demand_snapshot, held_slices, whole
        for cap in variants:
            candidate = Slice(("candidate", mvno.id), node, service, cap, owner=mvno.id)
            value = mvno_bid_value(mvno, demand, held, [candidate], t,
                                   policy=policy, lower_solver=lower_solver, r_without=r_without,
                                   prices=all_prices)
            bids.append(UpperBid(next_id(), mvno.id, value,
                                 (slice_catalog.spec(node, service, cap),), group))
    return bids


def normalized_benefit(bid: UpperBid, weights: NbWeights = NbWeights()) -> float:
    """Bid value over the root of its weighted mean traffic and inverse mean latency budget."""
    r = bid.size
    mean_traffic = math.fsum(s.traffic for s in bid.bundle) / r / weights.traffic_ref
    mean_latency = math.fsum(s.max_latency_ms for s in bid.bundle) / r / weights.latency_ref
    radicand = weights.w1 * mean_traffic + weights.w2 / mean_latency
    if not radicand > 0:
        raise ValueError(f"bid {bid.id!r}: zero normalized-benefit denominator")
    return bid.value / math.sqrt(radicand)


def rank_bids(bids: Sequence[UpperBid], weights: NbWeights = NbWeights()) -> list[UpperBid]:
    """Descending benefit; ties by higher value, then smaller id."""
    return sorted(bids, key=lambda b: (-normalized_benefit(b, weights), -b.value, id_key(b.id)))


def _greedy_pass(ranked, placer: Placer, won: set, skip_group=None):
    accepted = []
    for bid in ranked:
        if bid.xor_group in won or bid.xor_group == skip_group:
            continue
        if placer.place_bundle(bid.bundle):
            won.add(bid.xor_group)
            accepted.append(bid)
    return accepted


def _outcome(accepted, placer: Placer, ec, slot_h) -> UpperOutcome:
    placement = placer.result(feasible=True)
    return UpperOutcome(tuple(accepted), placement, math.fsum(b.value for b in accepted),
                        compute_energy_cost(placement, ec, slot_h))


def run_upper_greedy(graph: NetworkGraph, bids: Sequence[UpperBid], weights: NbWeights = NbWeights(),
                     ec: float | None = None, slot_h: float = 1.0, *,
                     placer: Placer | None = None) -> UpperOutcome:
    """Greedy winner determination with placement feasibility.

    ``placer`` carries slices sold in earlier slots; it is not mutated. The
    reported energy cost covers the carried slices as well as the new ones.
    """
    ec = graph.electricity_cost if ec is None else ec
    state = placer.copy() if placer is not None else Placer(graph)
    accepted = _greedy_pass(rank_bids(bids, weights), state, set())
    return _outcome(accepted, state, ec, slot_h)


def upper_vcg_charges(graph: NetworkGraph, bids: Sequence[UpperBid], weights: NbWeights = NbWeights(),
                      base_price: Callable[[UpperBid], float] = lambda b: 0.0,
                      ec: float | None = None, slot_h: float = 1.0, *,
                      placer: Placer | None = None,
                      cap_at_bid: bool = False) -> tuple[UpperOutcome, dict[Hashable, Charge]]:
    """Greedy clearing plus a VCG charge per winning XOR group.

    Equivalent to calling :func:`pricing.vcg_price` with the greedy as the
    clearing routine, but each re-clearing resumes from the state just
    before the removed group's winning bid instead of starting over.
    ``cap_at_bid`` bounds each VCG price by the winning bid's value.
    """
    ranked = rank_bids(bids, weights)
    state = placer.copy() if placer is not None else Placer(graph)
    won: set = set()
    accepted: list[UpperBid] = []
    snapshots = {}
    for i, bid in enumerate(ranked):
        if bid.xor_group in won:
            continue
        before = state.copy()
        if state.place_bundle(bid.bundle):
            snapshots[bid.xor_group] = (i, before, set(won), list(accepted))
            won.add(bid.xor_group)
            accepted.append(bid)
    ec = graph.electricity_cost if ec is None else ec
    outcome = _outcome(accepted, state, ec, slot_h)
    with_values = outcome.realized_values()

    charges = {}
    for bid in accepted:
        g = bid.xor_group
        i, before, won_before, acc_before = snapshots[g]
        rest = _greedy_pass(ranked[i + 1:], before.copy(), set(won_before), skip_group=g)
        without = math.fsum(b.value for b in acc_before + rest)
        others_with = math.fsum(v for k, v in with_values.items() if k != g)
        q_vcg = max(0.0, without - others_with)
        if cap_at_bid:
            q_vcg = min(q_vcg, bid.value)
        charges[g] = Charge(g, q_vcg, base_price(bid))
    return outcome, charges
