"""Exhaustive solvers for small instances of both winner-determination problems.

These are the ground truth the greedy clearings are checked against. Only the
optimal objective value is part of the contract; when several assignments
tie, which one is returned is an implementation detail (deterministic, but
not necessarily the greedy's).
"""
from __future__ import annotations

import itertools
import math
import time
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

from .exceptions import OracleLimitError, PreconditionError
from .lower import (EPS, Assignment, LowerAllocation, _mvno_bounds, class_key, counter_bid_table,
                    id_key, mvno_loads, user_rank_metric)
from .model import Request, Slice, compatible
from .network import NetworkGraph, Placer
from .upper import NbWeights, UpperBid, UpperOutcome, _outcome, rank_bids


@dataclass(frozen=True)
class OracleLimits:
    max_requests: int = 10
    max_slices: int = 5
    max_bids: int = 12
    time_budget: float = 30.0  # seconds

    def __post_init__(self):
        if min(self.max_requests, self.max_slices, self.max_bids) <= 0 or not self.time_budget > 0:
            raise ValueError("oracle limits must be positive")


def _frac_knapsack(items: list[tuple[float, float]], cap: float) -> float:
    """Fractional knapsack value; items are (value, weight)."""
    total = 0.0
    for value, weight in sorted(items, key=lambda it: -it[0] / it[1]):
        if cap <= 0:
            break
        take = min(1.0, cap / weight)
        total += take * value
        cap -= take * weight
    return total


def solve_lower_exact(requests: Sequence[Request], slices: Sequence[Slice], counter_bids, t: int = 0, *,
                      mvnos=None, occupancy=None, limits: OracleLimits = OracleLimits()) -> LowerAllocation:
    """Maximum-surplus lower-level allocation by branch and bound.

    Each request either takes a compatible slice or is rejected. Nodes are
    pruned with a per-class fractional-knapsack bound on the surplus still
    obtainable.
    """
    if len(requests) > limits.max_requests or len(slices) > limits.max_slices:
        raise OracleLimitError(
            f"instance with {len(requests)} requests / {len(slices)} slices exceeds oracle limits")
    prices = counter_bid_table(counter_bids)
    bounds = _mvno_bounds(mvnos)
    occ0 = {s.id: 0.0 for s in slices}
    if occupancy:
        occ0.update({k: v for k, v in occupancy.items() if k in occ0})

    order = sorted(requests, key=lambda r: (-user_rank_metric(r), id_key(r.id)))
    sorted_slices = sorted(slices, key=lambda s: id_key(s.id))
    options = []
    for r in order:
        opts = []
        for s in sorted_slices:
            if not compatible(r, s):
                continue
            beta = prices.get((s.owner, r.id))
            if beta is None:
                raise PreconditionError(f"no counter-bid from MVNO {s.owner!r} for request {r.id!r}")
            if r.bid - beta >= 0 and r.traffic <= s.capacity - occ0[s.id] + EPS:
                opts.append((s, beta))
        options.append(opts)
    best_margin = [max((r.bid - b for _, b in o), default=0.0) for r, o in zip(order, options)]
    classes = [class_key(r) for r in order]

    occ = dict(occ0)
    load = mvno_loads(slices, occ)
    slice_class = defaultdict(list)
    for s in slices:
        slice_class[class_key(s)].append(s)

    def bound(i: int) -> float:
        items = defaultdict(list)
        for j in range(i, len(order)):
            if options[j] and best_margin[j] > 0:
                items[classes[j]].append((best_margin[j], order[j].traffic))
        total = 0.0
        for key, its in items.items():
            cap = sum(max(0.0, s.capacity - occ[s.id]) for s in slice_class[key])
            total += _frac_knapsack(its, cap)
        return total

    deadline = time.monotonic() + limits.time_budget
    best = {"value": -1.0, "choice": None}
    choice: list = [None] * len(order)
    nodes = [0]

    def dfs(i: int, value: float):
        nodes[0] += 1
        if nodes[0] % 4096 == 0 and time.monotonic() > deadline:
            raise OracleLimitError("oracle time budget exceeded")
        if i == len(order):
            if value > best["value"] + 1e-12:
                best["value"] = value
                best["choice"] = list(choice)
            return
        if value + bound(i) <= best["value"] + 1e-12:
            return
        r = order[i]
        for s, beta in options[i]:
            if occ[s.id] + r.traffic > s.capacity + EPS:
                continue
            if load.get(s.owner, 0.0) + r.traffic > bounds.get(s.owner, math.inf) + EPS:
                continue
            occ[s.id] += r.traffic
            load[s.owner] = load.get(s.owner, 0.0) + r.traffic
            choice[i] = (s, beta)
            dfs(i + 1, value + r.bid - beta)
            occ[s.id] -= r.traffic
            load[s.owner] -= r.traffic
        choice[i] = None
        dfs(i + 1, value)

    dfs(0, 0.0)
    out = []
    final_occ = dict(occ0)
    for r, c in zip(order, best["choice"]):
        if c is None:
            continue
        s, beta = c
        final_occ[s.id] += r.traffic
        out.append(Assignment(r.id, s.owner, s.id, t, r.traffic, r.bid, beta))
    return LowerAllocation(tuple(out), final_occ, {}, math.fsum(a.margin for a in out))


def solve_upper_exact(graph: NetworkGraph, bids: Sequence[UpperBid], weights: NbWeights = NbWeights(),
                      ec: float | None = None, slot_h: float = 1.0, *, placer: Placer | None = None,
                      limits: OracleLimits = OracleLimits()) -> UpperOutcome:
    """Most profitable XOR-consistent, placeable subset of ``bids``.

    Bundles of a subset are placed in the same benefit order the greedy uses,
    so any set the greedy accepts is evaluated identically here.
    """
    if len(bids) > limits.max_bids:
        raise OracleLimitError(f"{len(bids)} bids exceed the oracle limit of {limits.max_bids}")
    ec = graph.electricity_cost if ec is None else ec
    ranked = rank_bids(bids, weights)
    pos = {b.id: i for i, b in enumerate(ranked)}
    groups = defaultdict(list)
    for b in ranked:
        groups[b.xor_group].append(b)
    keys = sorted(groups, key=id_key)
    base = placer.copy() if placer is not None else Placer(graph)
    deadline = time.monotonic() + limits.time_budget

    best = None
    for combo in itertools.product(*[[None] + groups[k] for k in keys]):
        if time.monotonic() > deadline:
            raise OracleLimitError("oracle time budget exceeded")
        chosen = sorted((b for b in combo if b is not None), key=lambda b: pos[b.id])
        state = base.copy()
        if not all(state.place_bundle(b.bundle) for b in chosen):
            continue
        outcome = _outcome(chosen, state, ec, slot_h)
        if best is None or outcome.profit > best.profit + 1e-12:
            best = outcome
    return best
