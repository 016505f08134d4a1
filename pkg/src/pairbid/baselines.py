"""Comparison policies with single-minded users.

Every user is pinned to one MVNO and can only be served by that MVNO's
slices. There is no counter-bidding, so the recorded surplus of an
allocation equals its accepted-bid sum.

* baseline 1 ranks each MVNO's users by ``bid / sqrt(traffic)`` and ignores
  departures (requests are treated as present for the whole horizon);
* baseline 2 admits users in arrival order without any sorting.
"""
from __future__ import annotations

import enum
import hashlib
import math
from collections import defaultdict
from typing import Hashable, Mapping, Sequence

from .lower import EPS, Assignment, LowerAllocation, _mvno_bounds, class_key, id_key, mvno_loads, user_rank_metric
from .model import Request, Slice


class BaselineKind(enum.Enum):
    B1 = 1
    B2 = 2


def pin_requests(requests: Sequence[Request], mvno_ids: Sequence[Hashable], seed: int = 0) -> dict:
    """Uniform, seeded, order-independent request -> MVNO pinning."""
    mvno_ids = sorted(mvno_ids, key=id_key)
    if not mvno_ids:
        raise ValueError("need at least one MVNO to pin requests to")
    out = {}
    for r in requests:
        digest = hashlib.blake2b(f"{seed}:{r.id!r}".encode(), digest_size=8).digest()
        out[r.id] = mvno_ids[int.from_bytes(digest, "big") % len(mvno_ids)]
    return out


def _first_fit(ordered: Sequence[Request], slices, pinning, t, mvnos, occupancy) -> LowerAllocation:
    bounds = _mvno_bounds(mvnos)
    occ = {s.id: 0.0 for s in slices}
    if occupancy:
        occ.update({k: v for k, v in occupancy.items() if k in occ})
    load = mvno_loads(slices, occ)
    pools = defaultdict(list)
    for s in sorted(slices, key=lambda s: (s.capacity, id_key(s.id))):
        pools[(s.owner, class_key(s))].append(s)
    out = []
    for r in ordered:
        v = pinning.get(r.id)
        if v is None or load.get(v, 0.0) + r.traffic > bounds.get(v, math.inf) + EPS:
            continue
        for s in pools.get((v, class_key(r)), ()):
            if occ[s.id] + r.traffic <= s.capacity + EPS:
                occ[s.id] += r.traffic
                load[v] = load.get(v, 0.0) + r.traffic
                out.append(Assignment(r.id, v, s.id, t, r.traffic, r.bid, 0.0))
                break
    return LowerAllocation(tuple(out), occ, {}, math.fsum(a.bid for a in out))


def run_baseline1(requests: Sequence[Request], slices: Sequence[Slice], t: int = 0, *,
                  pinning: Mapping, mvnos=None, occupancy=None) -> LowerAllocation:
    by_mvno = defaultdict(list)
    for r in requests:
        by_mvno[pinning.get(r.id)].append(r)
    ordered = []
    for v in sorted((v for v in by_mvno if v is not None), key=id_key):
        ordered += sorted(by_mvno[v], key=lambda r: (-user_rank_metric(r), id_key(r.id)))
    return _first_fit(ordered, slices, pinning, t, mvnos, occupancy)


def run_baseline2(requests: Sequence[Request], slices: Sequence[Slice], t: int = 0, *,
                  pinning: Mapping, mvnos=None, occupancy=None) -> LowerAllocation:
    """Admit in the given (arrival) order; no ranking."""
    return _first_fit(list(requests), slices, pinning, t, mvnos, occupancy)


def baseline_solver(kind: BaselineKind | int, pinning: Mapping):
    """Adapt a baseline to the ``solver(requests, slices, counter_bids, t, mvnos=...)``
    signature used for MVNO valuation and VCG re-clearing; counter-bids are ignored."""
    kind = BaselineKind(kind)
    fn = run_baseline1 if kind is BaselineKind.B1 else run_baseline2

    def solve(requests, slices, counter_bids=(), t=0, *, mvnos=None, occupancy=None):
        return fn(requests, slices, t, pinning=pinning, mvnos=mvnos, occupancy=occupancy)

    return solve
