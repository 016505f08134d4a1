"""Timeslotted two-level market simulation.

Each slot runs, in order: departures and slice expiry, arrivals, MVNO
bidding on the active demand, the MNO's upper clearing with charges, MVNO
counter-bids, lower clearing with charges, and metric collection. Admitted
requests keep their slice until they depart; nothing is ever migrated.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .baselines import BaselineKind, baseline_solver, pin_requests
from .exceptions import ConfigError
from .lower import (Assignment, LowerAllocation, generate_counter_bid, id_key, run_lower_greedy,
                    validate_lower)
from .model import CostMarkup, MvnoProfile, Request, Slice
from .network import GraphConfig, NetworkGraph, Placer, build_graph, compute_energy_cost
from .pricing import Charge, vcg_charges
from .upper import NbWeights, SliceCatalog, UpperBid, generate_xor_bids, rank_bids, upper_vcg_charges

logger = logging.getLogger(__name__)

RESALE_PROFILES: dict[str, tuple[float, ...]] = {
    "R1": (0.05, 0.10, 0.15),
    "R2": (0.15, 0.10, 0.05),
    "R3": (0.10, 0.20, 0.30),
}

ALGORITHMS = ("heuristic", "baseline1", "baseline2")

# request lifetime range used for the dynamic setting, in slots beyond arrival
DYNAMIC_DURATION = (0, 2)


@dataclass(frozen=True)
class RequestGenParams:
    """Request generator settings.

    ``duration=None`` keeps every request until the end of the horizon (the
    static setting); otherwise a request arriving at ``p`` leaves at
    ``min(p + d, T - 1)`` with ``d`` drawn uniformly from the inclusive
    integer range. Bids are ``unit_price * traffic``.
    """

    per_slot_count: int = 15
    traffic: tuple[float, float] = (0.5, 5.0)
    unit_price: tuple[float, float] = (10.0, 30.0)
    duration: tuple[int, int] | None = None
    type_mix: Mapping[str, float] = field(default_factory=lambda: {"eMBB": 0.5, "uRLLC": 0.5})
    nodes: tuple[int, ...] | None = None

    def __post_init__(self):
        lo, hi = self.traffic
        if not (lo > 0 and hi >= lo):
            raise ConfigError("traffic range must satisfy 0 < lo <= hi")
        plo, phi = self.unit_price
        if not (plo >= 0 and phi >= plo):
            raise ConfigError("unit price range must satisfy 0 <= lo <= hi")
        if self.per_slot_count < 0:
            raise ConfigError("per-slot request count must be >= 0")
        if self.duration is not None and not 0 <= self.duration[0] <= self.duration[1]:
            raise ConfigError("duration range must satisfy 0 <= lo <= hi")
        probs = list(self.type_mix.values())
        if not probs or min(probs) < 0 or not math.isclose(sum(probs), 1.0, abs_tol=1e-9):
            raise ConfigError("service type mix must be nonnegative and sum to 1")


def _default_mvnos() -> tuple[MvnoProfile, ...]:
    return tuple(MvnoProfile(f"MVNO{i + 1}", g, 200.0, CostMarkup(2.0))
                 for i, g in enumerate(RESALE_PROFILES["R1"]))


@dataclass(frozen=True)
class Scenario:
    seed: int = 0
    horizon: int = 10
    graph: GraphConfig = GraphConfig()
    mvnos: tuple[MvnoProfile, ...] = field(default_factory=_default_mvnos)
    request_gen: RequestGenParams = RequestGenParams()
    catalog: SliceCatalog = SliceCatalog(base_rate={"eMBB": 1.0, "uRLLC": 1.5})
    weights: NbWeights = NbWeights()
    lower_base_price: Mapping[str, float] = field(default_factory=lambda: {"eMBB": 2.0, "uRLLC": 3.0})
    resale_profile: str | None = "R1"
    algorithm: str = "heuristic"
    slot_hours: float = 1.0
    lease_slots: int | None = None
    payment: str = "per_slot"
    upper_pricing: str = "vcg"
    lower_pricing: str = "vcg"
    counter_bid_cost: str = "profile"

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if not self.mvnos:
            raise ConfigError("need at least one MVNO")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.payment not in ("once", "per_slot"):
            raise ConfigError("payment must be 'once' or 'per_slot'")
        for name in (self.upper_pricing, self.lower_pricing):
            if name not in ("vcg", "base"):
                raise ConfigError("pricing must be 'vcg' or 'base'")
        if self.resale_profile is not None:
            gains = RESALE_PROFILES.get(self.resale_profile)
            if gains is None:
                raise ConfigError(f"unknown resale profile {self.resale_profile!r}")
            if len(gains) != len(self.mvnos):
                raise ConfigError(f"profile {self.resale_profile} needs {len(gains)} MVNOs")
        if self.counter_bid_cost not in ("profile", "amortized"):
            raise ConfigError("counter_bid_cost must be 'profile' or 'amortized'")
        if self.lease_slots is not None and self.lease_slots < 1:
            raise ConfigError("lease length must be >= 1 slot")

    @property
    def profiles(self) -> tuple[MvnoProfile, ...]:
        """MVNOs with the resale profile's gains applied."""
        if self.resale_profile is None:
            return self.mvnos
        gains = RESALE_PROFILES[self.resale_profile]
        return tuple(replace(m, resale_gain=g) for m, g in zip(self.mvnos, gains))


def generate_requests(params: RequestGenParams, nodes: Sequence[int], seed: int, horizon: int) -> list[Request]:
    """Deterministic request schedule with ``per_slot_count`` arrivals per slot.

    Durations come from their own random stream, so changing only the
    duration setting keeps arrivals, origins, traffic and bids identical.
    """
    if horizon < 1:
        raise ConfigError("horizon must be >= 1")
    nodes = list(params.nodes if params.nodes is not None else nodes)
    if not nodes:
        raise ConfigError("no origin nodes for requests")
    types = list(params.type_mix)
    probs = np.array([params.type_mix[k] for k in types], dtype=float)
    attrs = np.random.default_rng([seed, 0])
    durs = np.random.default_rng([seed, 1])
    out = []
    for p in range(horizon):
        for _ in range(params.per_slot_count):
            origin = nodes[int(attrs.integers(len(nodes)))]
            service = types[int(attrs.choice(len(types), p=probs))]
            traffic = round(float(attrs.uniform(*params.traffic)), 3)
            traffic = min(max(traffic, params.traffic[0]), params.traffic[1])
            bid = round(float(attrs.uniform(*params.unit_price)) * traffic, 2)
            if params.duration is None:
                q = horizon - 1
            else:
                q = min(p + int(durs.integers(params.duration[0], params.duration[1] + 1)), horizon - 1)
            out.append(Request(len(out), origin, service, traffic, bid, p, q))
    return out


def generate_scenario(params: RequestGenParams, seed: int, horizon: int, **kwargs) -> tuple[Scenario, list[Request]]:
    """A :class:`Scenario` built around ``params`` plus its request schedule."""
    scenario = Scenario(seed=seed, horizon=horizon, request_gen=params, **kwargs)
    graph = build_graph(scenario.graph)
    return scenario, generate_requests(params, [n.id for n in graph.nodes], seed, horizon)


@dataclass
class SlotMetrics:
    t: int
    mno_revenue: float = 0.0
    mno_cost: float = 0.0
    mvno_revenue: dict = field(default_factory=dict)
    accepted: int = 0
    arrivals: int = 0
    pending: int = 0
    power_w: float = 0.0
    upper_charges: float = 0.0
    upper_value: float = 0.0
    lower_charges: float = 0.0
    slices_sold: int = 0
    capacity_sold: float = 0.0

    @property
    def mno_profit(self) -> float:
        return self.mno_revenue - self.mno_cost

    @property
    def accepted_bid_sum(self) -> float:
        return math.fsum(self.mvno_revenue.values())

    @property
    def acceptance_ratio(self) -> float:
        return self.accepted / self.pending if self.pending else 0.0

    @property
    def charges(self) -> float:
        return self.upper_charges + self.lower_charges


@dataclass
class SimMetrics:
    slots: list[SlotMetrics]
    mvno_ids: tuple

    def total(self, name: str) -> float:
        return math.fsum(getattr(s, name) for s in self.slots)

    @property
    def mno_revenue(self) -> float:
        return self.total("mno_revenue")

    @property
    def mno_cost(self) -> float:
        return self.total("mno_cost")

    @property
    def mno_profit(self) -> float:
        return self.mno_revenue - self.mno_cost

    @property
    def mvno_revenue(self) -> dict:
        return {v: math.fsum(s.mvno_revenue.get(v, 0.0) for s in self.slots) for v in self.mvno_ids}

    @property
    def accepted_bid_sum(self) -> float:
        return self.total("accepted_bid_sum")

    @property
    def acceptance_ratio(self) -> float:
        arrived = sum(s.arrivals for s in self.slots)
        return sum(s.accepted for s in self.slots) / arrived if arrived else 0.0

    def summary(self) -> dict:
        out = {
            "mno_revenue": self.mno_revenue,
            "mno_cost": self.mno_cost,
            "mno_profit": self.mno_profit,
            "accepted_bid_sum": self.accepted_bid_sum,
            "accepted": sum(s.accepted for s in self.slots),
            "arrivals": sum(s.arrivals for s in self.slots),
            "acceptance_ratio": self.acceptance_ratio,
            "mean_power_w": self.total("power_w") / len(self.slots) if self.slots else 0.0,
            "charges": self.total("charges"),
        }
        out.update({f"revenue_{v}": r for v, r in self.mvno_revenue.items()})
        return out


class Simulation:
    """Mutable per-run state; drive it with :func:`step_timeslot`."""

    def __init__(self, scenario: Scenario, requests: Sequence[Request] | None = None):
        self.scenario = scenario
        self.graph: NetworkGraph = build_graph(scenario.graph)
        if requests is None:
            requests = generate_requests(scenario.request_gen, [n.id for n in self.graph.nodes],
                                         scenario.seed, scenario.horizon)
        if scenario.algorithm == "baseline1":
            # baseline 1 has no notion of departures
            requests = [replace(r, departure=scenario.horizon - 1) for r in requests]
        self.requests = list(requests)
        self.mvnos = {m.id: m for m in scenario.profiles}
        self.mvno_order = sorted(self.mvnos, key=id_key)
        self.arrivals: dict[int, list[Request]] = {}
        for r in self.requests:
            self.arrivals.setdefault(r.arrival, []).append(r)
        self.pinning = None
        if scenario.algorithm == "heuristic":
            self.solver = run_lower_greedy
        else:
            self.pinning = pin_requests(self.requests, self.mvno_order, scenario.seed)
            kind = BaselineKind.B1 if scenario.algorithm == "baseline1" else BaselineKind.B2
            self.solver = baseline_solver(kind, self.pinning)

        self.t = 0
        self.slices: dict = {}
        self.slice_order: list = []  # slice ids parallel to the placer's lists
        self.lease_end: dict = {}  # slice id -> last leased slot, None while in use
        self.value: dict = {}  # slice id -> winning bid value, per slot held
        self.placer = Placer(self.graph)
        self.occupancy: dict = {}
        self.active: dict = {}  # request id -> Assignment
        self.request_map = {r.id: r for r in self.requests}
        self.pending: dict = {}
        self.paid = {v: 0.0 for v in self.mvno_order}
        self.acquired = {v: 0.0 for v in self.mvno_order}
        self.slots: list[SlotMetrics] = []
        self._next_slice = 0
        self._next_bid = 0

    # -- helpers ------------------------------------------------------------
    def policy(self, v):
        m = self.mvnos[v]
        if self.scenario.counter_bid_cost == "amortized" and isinstance(m.counter_bid_policy, CostMarkup):
            unit = (self.paid[v] / self.acquired[v] if self.acquired[v] > 0
                    else m.counter_bid_policy.unit_cost)
            return CostMarkup(unit)
        return m.counter_bid_policy

    def owned(self, v) -> list[Slice]:
        return [s for s in self.slices.values() if s.owner == v]

    def visible_pending(self, v) -> list[Request]:
        reqs = self.pending.values()
        if self.pinning is not None:
            reqs = [r for r in reqs if self.pinning[r.id] == v]
        return sorted(reqs, key=lambda r: (r.arrival, id_key(r.id)))

    def _bid_id(self):
        self._next_bid += 1
        return self._next_bid - 1

    def audit(self) -> bool:
        """Occupancy equals the traffic of active requests and respects capacity."""
        occ = {sid: 0.0 for sid in self.slices}
        for a in self.active.values():
            occ[a.slice] += a.traffic
        for sid, s in self.slices.items():
            if abs(occ[sid] - self.occupancy.get(sid, 0.0)) > 1e-6 or occ[sid] > s.capacity + 1e-9:
                return False
        return all(sid in self.slices for sid in self.occupancy)


def _release(sim: Simulation, t: int) -> None:
    for k in [k for k, a in sim.active.items() if sim.request_map[k].departure < t]:
        a = sim.active.pop(k)
        left = sim.occupancy[a.slice] - a.traffic
        sim.occupancy[a.slice] = left if left > 1e-9 else 0.0
    for k in [k for k, r in sim.pending.items() if r.departure < t]:
        del sim.pending[k]
    busy = {a.slice for a in sim.active.values()}
    expired = [sid for sid, end in sim.lease_end.items()
               if (end is not None and end < t) or (end is None and sid not in busy)]
    for sid in expired:
        # an expiring lease ends the service of whoever it still carries
        for k in [k for k, a in sim.active.items() if a.slice == sid]:
            del sim.active[k]
        idx = sim.slice_order.index(sid)
        sim.placer.remove(idx)
        sim.slice_order.pop(idx)
        del sim.slices[sid], sim.lease_end[sid], sim.occupancy[sid], sim.value[sid]


def _upper_round(sim: Simulation, t: int, row: SlotMetrics) -> None:
    sc = sim.scenario
    bids: list[UpperBid] = []
    for v in sim.mvno_order:
        pending = sim.visible_pending(v)
        if not pending:
            continue
        own = [sim.request_map[k] for k, a in sim.active.items() if a.mvno == v]
        classes = {(r.origin, r.service) for r in pending}
        for b in generate_xor_bids(sim.mvnos[v], pending + own, sc.catalog, held_slices=sim.owned(v),
                                   t=t, policy=sim.policy(v), lower_solver=sim.solver,
                                   next_id=sim._bid_id, classes=classes):
            if b.value > 0:
                bids.append(b)
    if not bids:
        return

    def base(b: UpperBid) -> float:
        return math.fsum(sc.catalog.base_price(s.service, s.traffic) for s in b.bundle)

    if sc.upper_pricing == "vcg":
        outcome, charges = upper_vcg_charges(sim.graph, bids, sc.weights, base, placer=sim.placer,
                                             cap_at_bid=True)
    else:
        from .upper import run_upper_greedy
        outcome = run_upper_greedy(sim.graph, bids, sc.weights, placer=sim.placer)
        charges = {b.xor_group: Charge(b.xor_group, 0.0, base(b)) for b in outcome.accepted}

    revenue = 0.0
    for b in rank_bids(outcome.accepted, sc.weights):
        if not sim.placer.place_bundle(b.bundle):
            raise RuntimeError("accepted bundle no longer placeable")  # prefix property violated
        pay = charges[b.xor_group].q_final
        sim.paid[b.mvno] += pay
        revenue += pay
        for spec in b.bundle:
            sid = sim._next_slice
            sim._next_slice += 1
            sim.slices[sid] = Slice(sid, spec.origin, spec.service, spec.traffic, b.mvno,
                                    sc.catalog.base_price(spec.service, spec.traffic))
            sim.slice_order.append(sid)
            sim.lease_end[sid] = None if sc.lease_slots is None else t + sc.lease_slots - 1
            sim.value[sid] = b.value * spec.traffic / b.traffic
            sim.occupancy[sid] = 0.0
            sim.acquired[b.mvno] += spec.traffic
            row.slices_sold += 1
            row.capacity_sold += spec.traffic
    row.upper_charges = revenue
    row.upper_value = outcome.revenue


def _lower_round(sim: Simulation, t: int, row: SlotMetrics) -> LowerAllocation:
    sc = sim.scenario
    pending = sorted(sim.pending.values(), key=lambda r: (r.arrival, id_key(r.id)))
    usable = list(sim.slices.values())
    row.pending = len(pending)
    if not pending or not usable:
        return LowerAllocation()
    counter_bids = []
    if sc.algorithm == "heuristic":
        sellers = {}
        for sl in usable:
            sellers.setdefault((sl.origin, sl.service), set()).add(sl.owner)
        for v in sim.mvno_order:
            pol = sim.policy(v)
            for r in pending:
                if v in sellers.get((r.origin, r.service), ()):
                    counter_bids.append(generate_counter_bid(pol, sim.mvnos[v], r, t))
    mvnos = list(sim.mvnos.values())

    def clear(reqs):
        return sim.solver(reqs, usable, counter_bids, t, mvnos=mvnos, occupancy=sim.occupancy)

    alloc = clear(pending)
    if sc.lower_pricing == "vcg" and alloc.assignments:
        base = {r.id: sc.lower_base_price.get(r.service, 0.0) for r in pending}
        margin = {a.request: a.margin for a in alloc.assignments}
        charges = vcg_charges(pending, lambda rs: clear(rs).realized_values(), base.__getitem__,
                              cap=margin.__getitem__)
    else:
        charges = {a.request: Charge(a.request, 0.0, sc.lower_base_price.get(
            sim.request_map[a.request].service, 0.0)) for a in alloc.assignments}
    alloc.charges = {k: c.q_final for k, c in charges.items()}

    for a in alloc.assignments:
        sim.active[a.request] = a
        sim.occupancy[a.slice] = sim.occupancy.get(a.slice, 0.0) + a.traffic
        del sim.pending[a.request]
    row.accepted = len(alloc.assignments)
    row.lower_charges = math.fsum(alloc.charges.values())
    return alloc


def step_timeslot(sim: Simulation, t: int) -> SlotMetrics:
    """Advance ``sim`` through slot ``t`` and return that slot's metrics."""
    sc = sim.scenario
    if not 0 <= t < sc.horizon:
        raise ValueError(f"slot {t} outside the horizon")
    sim.t = t
    row = SlotMetrics(t, mvno_revenue={v: 0.0 for v in sim.mvno_order})
    _release(sim, t)
    arrivals = sim.arrivals.get(t, [])
    row.arrivals = len(arrivals)
    for r in arrivals:
        sim.pending[r.id] = r

    _upper_round(sim, t, row)
    placement = sim.placer.result()
    row.mno_cost = compute_energy_cost(placement, sim.graph.electricity_cost, sc.slot_hours)
    row.power_w = placement.power

    carried = list(sim.active.values())
    alloc = _lower_round(sim, t, row)
    if alloc.assignments and not validate_lower(alloc, sim.requests, list(sim.slices.values()),
                                                list(sim.mvnos.values()), carried=carried):
        raise RuntimeError(f"lower clearing at slot {t} violated a capacity constraint")
    if sc.payment == "once":
        row.mno_revenue = row.upper_value
        for a in alloc.assignments:
            row.mvno_revenue[a.mvno] += a.bid
    else:
        row.mno_revenue = math.fsum(sim.value.values())
        for a in sim.active.values():
            row.mvno_revenue[a.mvno] += a.bid
    sim.slots.append(row)
    return row


def run_simulation(scenario: Scenario, requests: Sequence[Request] | None = None) -> SimMetrics:
    sim = Simulation(scenario, requests)
    for t in range(scenario.horizon):
        step_timeslot(sim, t)
    if not sim.audit():
        raise RuntimeError("capacity ledger audit failed")
    return SimMetrics(sim.slots, tuple(sim.mvno_order))
