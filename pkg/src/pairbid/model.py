"""Domain types shared by both auction levels.

All types are frozen dataclasses: copying yields an equal, independent value
and instances can be handed between threads or processes freely.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Union

NodeId = int
Identifier = Hashable


@dataclass(frozen=True)
class ServiceType:
    """A service class such as eMBB or uRLLC.

    ``latency_budget_ms`` bounds the RU -> DU -> CU -> GW route of every slice
    of this type. ``color`` is an opaque reporting tag.
    """

    id: str
    latency_budget_ms: float
    color: str = ""

    def __post_init__(self):
        if not self.latency_budget_ms > 0:
            raise ValueError(f"latency budget of {self.id!r} must be > 0")


EMBB = ServiceType("eMBB", 10.0, "green")
URLLC = ServiceType("uRLLC", 1.0, "red")
DEFAULT_SERVICE_TYPES = {EMBB.id: EMBB, URLLC.id: URLLC}


def service_registry(*types: ServiceType) -> dict[str, ServiceType]:
    """Build an id -> ServiceType map, rejecting duplicate ids."""
    out: dict[str, ServiceType] = {}
    for st in types:
        if st.id in out:
            raise ValueError(f"duplicate service type id {st.id!r}")
        out[st.id] = st
    return out


@dataclass(frozen=True)
class Request:
    """One user demand.

    The request holds ``traffic`` Gbps of its origin node's capacity for every
    timeslot in the closed window ``[arrival, departure]`` and offers ``bid``.
    """

    id: Identifier
    origin: NodeId
    service: str
    traffic: float
    bid: float
    arrival: int = 0
    departure: int = 0

    def __post_init__(self):
        if not (self.traffic > 0 and math.isfinite(self.traffic)):
            raise ValueError(f"request {self.id!r}: traffic must be > 0")
        if not self.bid >= 0:
            raise ValueError(f"request {self.id!r}: bid must be >= 0")
        if self.arrival < 0 or self.arrival > self.departure:
            raise ValueError(f"request {self.id!r}: need 0 <= arrival <= departure")


@dataclass(frozen=True)
class Slice:
    """A sellable unit of capacity at one node for one service type.

    ``owner`` is an MVNO id, or None while the slice is still held by the MNO.
    """

    id: Identifier
    origin: NodeId
    service: str
    capacity: float
    owner: Identifier | None = None
    base_price: float = 0.0

    def __post_init__(self):
        if not self.capacity > 0:
            raise ValueError(f"slice {self.id!r}: capacity must be > 0")
        if not self.base_price >= 0:
            raise ValueError(f"slice {self.id!r}: base price must be >= 0")


@dataclass(frozen=True)
class SliceSpec:
    """Placement-level view of a slice: where it starts, how much it carries
    and how much end-to-end latency it tolerates."""

    origin: NodeId
    service: str
    traffic: float
    max_latency_ms: float

    def __post_init__(self):
        if not self.traffic > 0:
            raise ValueError("slice traffic must be > 0")
        if not self.max_latency_ms > 0:
            raise ValueError("slice latency budget must be > 0")


@dataclass(frozen=True)
class FlatPrice:
    """Quote the same counter-price to every user."""

    price: float

    def __post_init__(self):
        if not self.price >= 0:
            raise ValueError("flat counter-bid price must be >= 0")


@dataclass(frozen=True)
class CostMarkup:
    """Quote ``unit_cost`` per Gbps, grossed up by the MVNO's resale gain."""

    unit_cost: float

    def __post_init__(self):
        if not self.unit_cost >= 0:
            raise ValueError("unit cost must be >= 0")


CounterBidPolicy = Union[FlatPrice, CostMarkup]


@dataclass(frozen=True)
class MvnoProfile:
    id: Identifier
    resale_gain: float = 0.1
    capacity_bound: float = math.inf
    counter_bid_policy: CounterBidPolicy = CostMarkup(0.0)

    def __post_init__(self):
        if not 0 <= self.resale_gain < 1:
            raise ValueError(f"MVNO {self.id!r}: resale gain must lie in [0, 1)")
        if not self.capacity_bound > 0:
            raise ValueError(f"MVNO {self.id!r}: capacity bound must be > 0")


def check_timeslot(t: int, horizon: int) -> int:
    """Return ``t`` if it is a valid slot index for ``horizon`` slots."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if not 0 <= t < horizon:
        raise ValueError(f"timeslot {t} outside [0, {horizon})")
    return t


def is_active(request: Request, t: int) -> bool:
    return request.arrival <= t <= request.departure


def compatible(request: Request, slice_: Slice | SliceSpec) -> bool:
    """Origin node and service type must both match."""
    return request.origin == slice_.origin and request.service == slice_.service
