"""VCG payments with a base-price floor.

A winner pays the welfare its presence costs everybody else: the others'
total realized value when the auction is re-cleared without it, minus their
total when it takes part. The same clearing routine must produce both
outcomes. The final charge never drops below the announced base price.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Hashable, Mapping, Sequence, TypeVar

from .exceptions import PreconditionError

logger = logging.getLogger(__name__)

B = TypeVar("B")
# clear(bidders) -> {winner id: realized value}
ClearFn = Callable[[Sequence[B]], Mapping[Hashable, float]]


@dataclass(frozen=True)
class Charge:
    bidder: Hashable
    q_vcg: float
    q_base: float

    def __post_init__(self):
        if self.q_vcg < 0 or self.q_base < 0:
            raise ValueError("charges must be >= 0")

    @property
    def q_final(self) -> float:
        return final_charge(self.q_vcg, self.q_base)


def final_charge(q_vcg: float, q_base: float) -> float:
    if q_vcg < 0 or q_base < 0:
        raise ValueError("VCG and base prices must be >= 0")
    return max(q_base, q_vcg)


def _others(values: Mapping, winner) -> float:
    return math.fsum(v for k, v in values.items() if k != winner)


def vcg_price(winner: Hashable, bidders: Sequence[B], clear: ClearFn, *,
              key: Callable[[B], Hashable] = lambda b: b.id,
              with_winner: Mapping[Hashable, float] | None = None,
              cap: float | None = None) -> float:
    """Externality ``winner`` imposes on the other bidders.

    ``with_winner`` may pass in ``clear(bidders)`` when it is already known.
    Negative results (possible only with a heuristic ``clear``) are clamped to
    zero and logged. ``cap`` bounds the price from above; pass the winner's
    declared value to keep a heuristic clearing individually rational.
    """
    if with_winner is None:
        with_winner = clear(bidders)
    if winner not in with_winner:
        raise PreconditionError(f"{winner!r} did not win; it has no VCG price")
    without = clear([b for b in bidders if key(b) != winner])
    price = _others(without, winner) - _others(with_winner, winner)
    if price < 0:
        if price < -1e-9:
            logger.info("negative VCG price %.6g for %r clamped to 0", price, winner)
        price = 0.0
    if cap is not None and price > cap:
        logger.debug("VCG price %.6g for %r capped at %.6g", price, winner, cap)
        price = cap
    return price


def vcg_charges(bidders: Sequence[B], clear: ClearFn, base_price: Callable[[Hashable], float], *,
                key: Callable[[B], Hashable] = lambda b: b.id,
                cap: Callable[[Hashable], float] | None = None) -> dict[Hashable, Charge]:
    """:class:`Charge` for every winner of ``clear(bidders)``."""
    outcome = clear(bidders)
    return {
        w: Charge(w, vcg_price(w, bidders, clear, key=key, with_winner=outcome,
                               cap=None if cap is None else cap(w)), base_price(w))
        for w in outcome
    }
