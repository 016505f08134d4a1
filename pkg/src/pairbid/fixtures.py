"""Built-in example instances and random instance generators."""
from __future__ import annotations

import math

import numpy as np

from .model import MvnoProfile, Request, Slice, SliceSpec
from .upper import UpperBid

FIG2_BASE_PRICE = 135.0


def fig2_instance() -> tuple[list[Request], list[Slice], dict]:
    """Two MVNOs with one 1 Gbps slice each; three users bidding 100/200/300.

    MVNO1 quotes 115 to everyone and MVNO2 quotes 135.
    """
    requests = [Request(k, 0, "eMBB", 1.0, b) for k, b in [(1, 100.0), (2, 200.0), (3, 300.0)]]
    slices = [Slice("s1", 0, "eMBB", 1.0, "MVNO1", FIG2_BASE_PRICE),
              Slice("s2", 0, "eMBB", 1.0, "MVNO2", FIG2_BASE_PRICE)]
    prices = {("MVNO1", k): 115.0 for k in (1, 2, 3)}
    prices.update({("MVNO2", k): 135.0 for k in (1, 2, 3)})
    return requests, slices, prices


def random_lower_instance(rng: np.random.Generator, n_req: int, n_slices: int, n_mvnos: int = 3,
                          n_nodes: int = 2, bounded: bool = False, integer: bool = False):
    """Random requests, slices, ``{(mvno, request): price}`` quotes and MVNO profiles.

    ``bounded`` draws finite MVNO capacity bounds; ``integer`` uses whole-Gbps
    sizes, which makes exact ties likely.
    """
    services = ["eMBB", "uRLLC"]
    mvnos = [MvnoProfile(f"V{i}", 0.1, float(rng.uniform(2, 12)) if bounded else math.inf)
             for i in range(n_mvnos)]
    slices = []
    for j in range(n_slices):
        slices.append(Slice(j, int(rng.integers(n_nodes)), services[int(rng.integers(2))],
                            float(rng.integers(1, 6)) if integer else round(float(rng.uniform(0.5, 6)), 2),
                            mvnos[int(rng.integers(n_mvnos))].id))
    requests = []
    for k in range(n_req):
        traffic = float(rng.integers(1, 4)) if integer else round(float(rng.uniform(0.2, 3)), 2)
        requests.append(Request(k, int(rng.integers(n_nodes)), services[int(rng.integers(2))], traffic,
                                float(rng.integers(0, 100))))
    prices = {(m.id, r.id): float(rng.integers(0, 60)) for m in mvnos for r in requests}
    return requests, slices, prices, mvnos


def random_upper_bids(rng: np.random.Generator, n: int, n_groups: int = 4, n_nodes: int = 4) -> list[UpperBid]:
    """Single-slice bids spread over ``n_groups`` XOR groups."""
    out = []
    for i in range(n):
        spec = SliceSpec(int(rng.integers(n_nodes)), ["eMBB", "uRLLC"][int(rng.integers(2))],
                         float(rng.choice([2.5, 5.0, 10.0, 20.0])), float(rng.choice([1.0, 10.0])))
        out.append(UpperBid(i, "V", float(rng.integers(1, 200)), (spec,), int(rng.integers(n_groups))))
    return out
