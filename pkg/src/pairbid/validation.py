"""Input coercion for the estimator wrappers.

Records may be given as the dataclasses themselves, as mappings with the
field names, or as rows of a 2-D array in field order.
"""
from __future__ import annotations

from collections.abc import Mapping
from dataclasses import fields
from typing import Any, Iterable, Sequence, TypeVar

import numpy as np

from .lower import CounterBid
from .model import MvnoProfile, Request, Slice
from .upper import UpperBid

T = TypeVar("T")


def _coerce(cls: type[T], item: Any, position: int) -> T:
    if isinstance(item, cls):
        return item
    try:
        if isinstance(item, Mapping):
            return cls(**item)
        if isinstance(item, np.ndarray):
            item = item.tolist()
        if isinstance(item, (list, tuple)):
            names = [f.name for f in fields(cls)]
            if len(item) > len(names):
                raise ValueError(f"expected at most {len(names)} columns, got {len(item)}")
            return cls(**dict(zip(names, item)))
    except TypeError as exc:
        raise ValueError(f"row {position}: cannot build {cls.__name__}: {exc}") from None
    raise ValueError(f"row {position}: cannot build {cls.__name__} from {type(item).__name__}")


def _records(cls: type[T], items: Iterable[Any] | None, what: str, unique: bool = True) -> list[T]:
    if items is None:
        raise ValueError(f"{what} must not be None")
    if isinstance(items, np.ndarray) and items.ndim != 2:
        raise ValueError(f"{what} array must be 2-D, got {items.ndim}-D")
    out = [_coerce(cls, item, i) for i, item in enumerate(items)]
    if unique:
        ids = [x.id for x in out]
        if len(set(ids)) != len(ids):
            raise ValueError(f"{what} ids must be unique")
    return out


def check_requests(X: Iterable[Any]) -> list[Request]:
    """Rows ``(id, origin, service, traffic, bid[, arrival, departure])`` or :class:`Request`."""
    return _records(Request, X, "requests")


def check_slices(X: Iterable[Any]) -> list[Slice]:
    """Rows ``(id, origin, service, capacity, owner[, base_price])`` or :class:`Slice`."""
    return _records(Slice, X, "slices")


def check_mvnos(X: Iterable[Any] | None) -> list[MvnoProfile]:
    return [] if X is None else _records(MvnoProfile, X, "MVNO profiles")


def check_upper_bids(X: Iterable[Any]) -> list[UpperBid]:
    return _records(UpperBid, X, "upper bids")


def check_counter_bids(X: Mapping | Sequence[Any] | None) -> dict[tuple, float]:
    """``{(mvno, request): price}`` from a mapping or a list of :class:`CounterBid`."""
    if X is None:
        return {}
    if isinstance(X, Mapping):
        out = {}
        for key, price in X.items():
            if not (isinstance(key, tuple) and len(key) == 2):
                raise ValueError("counter-bid keys must be (mvno, request) pairs")
            if not float(price) >= 0:
                raise ValueError(f"counter-bid {key!r} must be >= 0")
            out[key] = float(price)
        return out
    return {(cb.mvno, cb.request): cb.price for cb in _records(CounterBid, X, "counter-bids", unique=False)}
