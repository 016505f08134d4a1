"""Lower-level pair-bid auction between MVNOs (sellers) and users (buyers).

Users bid for capacity and MVNOs quote a counter-price to every user they
could serve. Clearing is per (origin node, service type) class: requests are
taken in descending ``bid / sqrt(traffic)`` order, and each takes the
cheapest-quoting slice that still fits.
"""
from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .exceptions import PreconditionError
from .model import (CostMarkup, CounterBidPolicy, FlatPrice, Identifier, MvnoProfile,
                    Request, Slice, compatible, is_active)

logger = logging.getLogger(__name__)

EPS = 1e-9


@dataclass(frozen=True)
class CounterBid:
    mvno: Identifier
    request: Identifier
    t: int
    price: float

    def __post_init__(self):
        if not self.price >= 0:
            raise ValueError("counter-bid price must be >= 0")


@dataclass(frozen=True)
class Assignment:
    """Request ``request`` is carried by slice ``slice`` of ``mvno`` from slot ``t``."""

    request: Identifier
    mvno: Identifier
    slice: Identifier
    t: int
    traffic: float
    bid: float
    price: float = 0.0

    @property
    def margin(self) -> float:
        return self.bid - self.price


@dataclass
class LowerAllocation:
    """Cleared lower-level matching.

    ``occupancy`` includes any load carried over from earlier slots.
    ``surplus`` is the sum of ``bid - counter_price`` over the new assignments.
    """

    assignments: tuple[Assignment, ...] = ()
    occupancy: dict = field(default_factory=dict)
    charges: dict = field(default_factory=dict)
    surplus: float = 0.0

    @property
    def accepted(self) -> dict[Identifier, Assignment]:
        return {a.request: a for a in self.assignments}

    @property
    def accepted_bid_sum(self) -> float:
        return math.fsum(a.bid for a in self.assignments)

    def realized_values(self) -> dict[Identifier, float]:
        """Per-request margin, the welfare unit used by VCG pricing."""
        return {a.request: a.margin for a in self.assignments}


def user_rank_metric(request: Request) -> float:
    """``bid / sqrt(traffic)``; higher ranks first."""
    if not request.traffic > 0:
        raise ValueError("traffic must be > 0 to rank a request")
    return request.bid / math.sqrt(request.traffic)


def generate_counter_bid(policy: CounterBidPolicy, mvno: MvnoProfile, request: Request,
                         t: int) -> CounterBid:
    if not is_active(request, t):
        raise PreconditionError(f"request {request.id!r} is not active at slot {t}")
    if isinstance(policy, FlatPrice):
        price = policy.price
    elif isinstance(policy, CostMarkup):
        if mvno.resale_gain >= 1:
            raise ValueError("resale gain of 1 leaves no room for cost recovery")
        price = policy.unit_cost * request.traffic / (1.0 - mvno.resale_gain)
    else:
        raise TypeError(f"unknown counter-bid policy {policy!r}")
    return CounterBid(mvno.id, request.id, t, price)


def counter_bid_table(counter_bids) -> dict[tuple, float]:
    """Normalise counter-bids to a ``{(mvno, request): price}`` dict."""
    if isinstance(counter_bids, Mapping):
        return dict(counter_bids)
    return {(cb.mvno, cb.request): cb.price for cb in counter_bids}


def _mvno_bounds(mvnos) -> dict[Identifier, float]:
    if mvnos is None:
        return {}
    if isinstance(mvnos, Mapping):
        mvnos = mvnos.values()
    return {m.id: m.capacity_bound for m in mvnos}


def mvno_loads(slices: Iterable[Slice], occupancy: Mapping) -> dict[Identifier, float]:
    loads: dict = defaultdict(float)
    for s in slices:
        loads[s.owner] += occupancy.get(s.id, 0.0)
    return dict(loads)


def id_key(x) -> tuple:
    """Sort key that orders ids of one type naturally and never mixes types."""
    return (type(x).__name__, x)


def class_key(obj) -> tuple:
    return (obj.origin, obj.service)


def run_lower_greedy(requests: Sequence[Request], slices: Sequence[Slice], counter_bids,
                     t: int = 0, *, mvnos=None, occupancy: Mapping | None = None) -> LowerAllocation:
    """Greedy pair-bid clearing for one timeslot.

    Within each (origin, service) class, requests go in descending
    :func:`user_rank_metric` order (ties by id). Each request takes, among the
    slices with room under both the slice capacity and the owning MVNO's
    bound, the one whose owner quotes the lowest counter-price; ties go to the
    smaller slice capacity, then the smaller slice id. Pairs whose margin
    would be negative are never formed.

    ``occupancy`` seeds slice loads carried from earlier slots; MVNO loads are
    derived from it.
    """
    prices = counter_bid_table(counter_bids)
    bounds = _mvno_bounds(mvnos)
    occ = {s.id: 0.0 for s in slices}
    if occupancy:
        occ.update({k: v for k, v in occupancy.items() if k in occ})
    load = mvno_loads(slices, occ)

    by_class: dict[tuple, list[Slice]] = defaultdict(list)
    for s in slices:
        by_class[class_key(s)].append(s)
    req_class: dict[tuple, list[Request]] = defaultdict(list)
    for r in requests:
        req_class[class_key(r)].append(r)

    out: list[Assignment] = []
    surplus = []
    for key in sorted(req_class):
        pool = sorted(by_class.get(key, ()), key=lambda s: (s.capacity, id_key(s.id)))
        if not pool:
            continue
        ranked = sorted(req_class[key], key=lambda r: (-user_rank_metric(r), id_key(r.id)))
        for r in ranked:
            best = None
            for s in pool:
                try:
                    beta = prices[(s.owner, r.id)]
                except KeyError:
                    raise PreconditionError(
                        f"no counter-bid from MVNO {s.owner!r} for request {r.id!r}") from None
                if r.bid - beta < 0:
                    continue
                if occ[s.id] + r.traffic > s.capacity + EPS:
                    continue
                if load.get(s.owner, 0.0) + r.traffic > bounds.get(s.owner, math.inf) + EPS:
                    continue
                # pool is already in (capacity, id) order
                if best is None or beta < best[0]:
                    best = (beta, s)
            if best is None:
                continue
            beta, s = best
            occ[s.id] += r.traffic
            load[s.owner] = load.get(s.owner, 0.0) + r.traffic
            out.append(Assignment(r.id, s.owner, s.id, t, r.traffic, r.bid, beta))
            surplus.append(r.bid - beta)
    return LowerAllocation(tuple(out), occ, {}, math.fsum(surplus))


def validate_lower(alloc: LowerAllocation, requests: Sequence[Request], slices: Sequence[Slice],
                   mvnos=None, *, carried: Iterable[Assignment] = ()) -> bool:
    """Re-check single-slice admission, class match, slice and MVNO capacity.

    ``carried`` lists assignments from earlier slots still holding capacity.
    """
    req = {r.id: r for r in requests}
    sl = {s.id: s for s in slices}
    bounds = _mvno_bounds(mvnos)
    seen = set()
    occ: dict = defaultdict(float)
    load: dict = defaultdict(float)
    for a in list(carried) + list(alloc.assignments):
        if (a.request, a.t) in seen or a.request not in req or a.slice not in sl:
            return False
        seen.add((a.request, a.t))
        r, s = req[a.request], sl[a.slice]
        if not compatible(r, s) or s.owner != a.mvno or abs(a.traffic - r.traffic) > EPS:
            return False
        occ[s.id] += r.traffic
        load[s.owner] += r.traffic
    if len({a.request for a in alloc.assignments}) != len(alloc.assignments):
        return False
    for sid, s in sl.items():
        reported = alloc.occupancy.get(sid, 0.0)
        if max(occ[sid], reported) > s.capacity + EPS:
            return False
    for sid in alloc.occupancy:
        if sid not in sl:
            return False
    for v, used in load.items():
        if used > bounds.get(v, math.inf) + EPS:
            return False
    return True
