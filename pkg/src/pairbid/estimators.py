"""scikit-learn style wrappers around the clearing routines.

``fit`` stores the supply side (slices and quotes, or the network), and
``predict`` clears a batch of demand against it without changing the fitted
state. Hyperparameters go through the constructor, so ``get_params`` /
``set_params`` and ``sklearn.base.clone`` work as usual.
"""
from __future__ import annotations

import math
from typing import Any, Iterable, Mapping

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .baselines import BaselineKind, baseline_solver, pin_requests
from .lower import LowerAllocation, generate_counter_bid, run_lower_greedy
from .network import GraphConfig, build_graph
from .oracle import OracleLimits, solve_lower_exact, solve_upper_exact
from .pricing import Charge, vcg_charges, vcg_price
from .sim import Scenario, SimMetrics, run_simulation
from .upper import NbWeights, UpperBid, UpperOutcome, run_upper_greedy, upper_vcg_charges
from .validation import check_counter_bids, check_mvnos, check_requests, check_slices, check_upper_bids

LOWER_SOLVERS = ("greedy", "exact", "baseline1", "baseline2")
UPPER_SOLVERS = ("greedy", "exact")
PRICING = ("vcg", "base")


def _check_choice(name: str, value: str, allowed: Iterable[str]) -> None:
    if value not in allowed:
        raise ValueError(f"{name}={value!r}; expected one of {', '.join(allowed)}")


class LowerAuction(BaseEstimator):
    """Pair-bid clearing between users and MVNO-owned slices.

    Parameters
    ----------
    solver : {"greedy", "exact", "baseline1", "baseline2"}
    pricing : {"vcg", "base"}
        ``"vcg"`` charges ``max(base, vcg)``; ``"base"`` charges the base price only.
    base_price : float or mapping
        Per-request floor, either flat or keyed by service type.
    pinning : mapping, optional
        Request -> MVNO map for the baselines; drawn with ``seed`` when omitted.
    seed : int
    limits : OracleLimits, optional
        Size limits for the exact solver.
    """

    def __init__(self, solver: str = "greedy", pricing: str = "vcg", base_price: float | Mapping = 0.0,
                 pinning: Mapping | None = None, seed: int = 0, limits: OracleLimits | None = None):
        self.solver = solver
        self.pricing = pricing
        self.base_price = base_price
        self.pinning = pinning
        self.seed = seed
        self.limits = limits

    def fit(self, slices, counter_bids=None, mvnos=None):
        """Store the supply: slices, the ``{(mvno, request): price}`` quotes and MVNO bounds.

        Without explicit quotes, each MVNO's counter-bid policy prices every
        request lazily at predict time.
        """
        _check_choice("solver", self.solver, LOWER_SOLVERS)
        _check_choice("pricing", self.pricing, PRICING)
        self.slices_ = check_slices(slices)
        self.mvnos_ = check_mvnos(mvnos)
        self.counter_bids_ = check_counter_bids(counter_bids) if counter_bids is not None else None
        owners = {s.owner for s in self.slices_}
        if None in owners:
            raise ValueError("every slice needs an owning MVNO")
        if self.counter_bids_ is None and not owners <= {m.id for m in self.mvnos_}:
            raise ValueError("without counter-bids every slice owner needs an MVNO profile")
        return self

    def _prices(self, requests) -> dict:
        if self.counter_bids_ is not None:
            return self.counter_bids_
        return {(m.id, r.id): generate_counter_bid(m.counter_bid_policy, m, r, r.arrival).price
                for m in self.mvnos_ for r in requests}

    def _solve_fn(self, requests):
        if self.solver == "greedy":
            return run_lower_greedy
        if self.solver == "exact":
            limits = self.limits or OracleLimits()
            return lambda *a, **kw: solve_lower_exact(*a, limits=limits, **kw)
        pinning = self.pinning
        if pinning is None:
            ids = [m.id for m in self.mvnos_] or sorted({s.owner for s in self.slices_}, key=repr)
            pinning = pin_requests(requests, ids, self.seed)
        return baseline_solver(BaselineKind.B1 if self.solver == "baseline1" else BaselineKind.B2, pinning)

    def _base(self, request) -> float:
        if isinstance(self.base_price, Mapping):
            return float(self.base_price.get(request.service, 0.0))
        return float(self.base_price)

    def clear(self, requests, t: int = 0) -> tuple[LowerAllocation, dict[Any, Charge]]:
        """Allocation and per-winner charges for ``requests``."""
        check_is_fitted(self, "slices_")
        requests = check_requests(requests)
        prices = self._prices(requests)
        solve = self._solve_fn(requests)
        mvnos = self.mvnos_ or None

        def run(reqs):
            return solve(reqs, self.slices_, prices, t, mvnos=mvnos)

        alloc = run(requests)
        by_id = {r.id: r for r in requests}
        if self.pricing == "vcg":
            charges = vcg_charges(requests, lambda rs: run(rs).realized_values(),
                                  lambda k: self._base(by_id[k]))
        else:
            charges = {a.request: Charge(a.request, 0.0, self._base(by_id[a.request]))
                       for a in alloc.assignments}
        alloc.charges = {k: c.q_final for k, c in charges.items()}
        return alloc, charges

    def predict(self, requests, t: int = 0) -> np.ndarray:
        """Assigned slice id per request, None where rejected."""
        requests = check_requests(requests)
        alloc, _ = self.clear(requests, t)
        won = alloc.accepted
        return np.array([won[r.id].slice if r.id in won else None for r in requests], dtype=object)

    def transform(self, requests, t: int = 0) -> np.ndarray:
        """Rows of ``(accepted, counter_price, charge)`` per request; zeros where rejected."""
        requests = check_requests(requests)
        alloc, _ = self.clear(requests, t)
        won = alloc.accepted
        rows = [(1.0, won[r.id].price, alloc.charges[r.id]) if r.id in won else (0.0, 0.0, 0.0)
                for r in requests]
        return np.asarray(rows, dtype=float).reshape(len(requests), 3)

    def score(self, requests, t: int = 0) -> float:
        """Total surplus ``sum(bid - counter_price)`` of the clearing."""
        return self.clear(requests, t)[0].surplus


class UpperAuction(BaseEstimator):
    """MNO-side clearing of MVNO XOR bids subject to CU/DU placement.

    Parameters
    ----------
    graph_config : GraphConfig, optional
    weights : NbWeights, optional
    solver : {"greedy", "exact"}
    pricing : {"vcg", "base"}
    base_rate : float or mapping
        Base price per Gbps of bundle capacity, flat or by service type.
    electricity_cost : float, optional
        Overrides the graph's cost per kWh.
    slot_hours : float
    cap_at_bid : bool
        Bound greedy VCG prices by the winning bid.
    limits : OracleLimits, optional
    """

    def __init__(self, graph_config: GraphConfig | None = None, weights: NbWeights | None = None,
                 solver: str = "greedy", pricing: str = "vcg", base_rate: float | Mapping = 0.0,
                 electricity_cost: float | None = None, slot_hours: float = 1.0, cap_at_bid: bool = False,
                 limits: OracleLimits | None = None):
        self.graph_config = graph_config
        self.weights = weights
        self.solver = solver
        self.pricing = pricing
        self.base_rate = base_rate
        self.electricity_cost = electricity_cost
        self.slot_hours = slot_hours
        self.cap_at_bid = cap_at_bid
        self.limits = limits

    def fit(self, X=None, y=None):
        """Build the substrate graph; ``X`` is ignored."""
        _check_choice("solver", self.solver, UPPER_SOLVERS)
        _check_choice("pricing", self.pricing, PRICING)
        if not self.slot_hours > 0:
            raise ValueError("slot_hours must be > 0")
        self.graph_ = build_graph(self.graph_config or GraphConfig())
        self.weights_ = self.weights or NbWeights()
        return self

    def _base(self, bid: UpperBid) -> float:
        if isinstance(self.base_rate, Mapping):
            return math.fsum(self.base_rate.get(s.service, 0.0) * s.traffic for s in bid.bundle)
        return float(self.base_rate) * bid.traffic

    def _run(self, bids) -> UpperOutcome:
        if self.solver == "greedy":
            return run_upper_greedy(self.graph_, bids, self.weights_, self.electricity_cost, self.slot_hours)
        return solve_upper_exact(self.graph_, bids, self.weights_, self.electricity_cost, self.slot_hours,
                                 limits=self.limits or OracleLimits())

    def clear(self, bids) -> tuple[UpperOutcome, dict[Any, Charge]]:
        """Outcome and per-XOR-group charges for ``bids``."""
        check_is_fitted(self, "graph_")
        bids = check_upper_bids(bids)
        if self.pricing == "base":
            outcome = self._run(bids)
            return outcome, {b.xor_group: Charge(b.xor_group, 0.0, self._base(b)) for b in outcome.accepted}
        if self.solver == "greedy":
            return upper_vcg_charges(self.graph_, bids, self.weights_, self._base, self.electricity_cost,
                                     self.slot_hours, cap_at_bid=self.cap_at_bid)
        outcome = self._run(bids)
        values = outcome.realized_values()
        won = {b.xor_group: b for b in outcome.accepted}
        charges = {}
        for g, b in won.items():
            q = vcg_price(g, bids, lambda bs: self._run(bs).realized_values(), key=lambda x: x.xor_group,
                          with_winner=values, cap=b.value if self.cap_at_bid else None)
            charges[g] = Charge(g, q, self._base(b))
        return outcome, charges

    def predict(self, bids) -> np.ndarray:
        """Acceptance flag per bid."""
        check_is_fitted(self, "graph_")
        bids = check_upper_bids(bids)
        return np.array(self._run(bids).flags(bids), dtype=bool)

    def score(self, bids) -> float:
        """MNO profit of the clearing."""
        check_is_fitted(self, "graph_")
        return self._run(check_upper_bids(bids)).profit


class MarketSimulator(BaseEstimator):
    """Runs the timeslotted two-level market for one scenario.

    ``fit`` takes an optional explicit request schedule; ``transform``
    returns the per-slot metric table with columns :attr:`columns`.
    """

    columns = ("t", "arrivals", "pending", "accepted", "mno_revenue", "mno_cost", "mno_profit",
               "accepted_bid_sum", "power_w", "upper_charges", "lower_charges")

    def __init__(self, scenario: Scenario | None = None):
        self.scenario = scenario

    def fit(self, requests=None, y=None):
        scenario = self.scenario or Scenario()
        schedule = None if requests is None else check_requests(requests)
        self.metrics_: SimMetrics = run_simulation(scenario, schedule)
        return self

    def transform(self, X=None) -> np.ndarray:
        check_is_fitted(self, "metrics_")
        return np.array([[getattr(s, c) for c in self.columns] for s in self.metrics_.slots], dtype=float)

    def fit_transform(self, requests=None, y=None) -> np.ndarray:
        return self.fit(requests).transform()

    def score(self, X=None) -> float:
        """Total MNO profit over the horizon."""
        check_is_fitted(self, "metrics_")
        return self.metrics_.mno_profit
