"""Randomised property suites comparing the greedy clearings with the exact oracle.

Each suite returns a :class:`CheckResult`; ``oracle-check`` on the command
line and the acceptance tests both run them.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import run_baseline1, run_baseline2, pin_requests
from .fixtures import random_lower_instance, random_upper_bids
from .lower import run_lower_greedy, validate_lower
from .model import Request, Slice
from .network import GraphConfig, build_graph, check_placement
from .oracle import OracleLimits, solve_lower_exact, solve_upper_exact
from .pricing import vcg_price
from .upper import run_upper_greedy

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    name: str
    trials: int = 0
    violations: int = 0
    seconds: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.trials > 0

    def line(self) -> str:
        extra = "".join(f" {k}={v:.6g}" if isinstance(v, float) else f" {k}={v}" for k, v in self.info.items())
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.trials} trials, {self.violations} violations, {self.seconds:.1f}s{extra}"


def constraint_fuzz(n: int = 1000, seed: int = 0, limits: OracleLimits = OracleLimits()) -> CheckResult:
    """Every greedy, baseline and (where small enough) oracle allocation re-validates."""
    rng = np.random.default_rng([seed, 11])
    res = CheckResult("constraint-fuzz")
    start = time.perf_counter()
    oracle_runs = 0
    for i in range(n):
        small = i % 4 == 0
        n_req = int(rng.integers(1, limits.max_requests + 1 if small else 51))
        n_sl = int(rng.integers(1, limits.max_slices + 1 if small else 11))
        requests, slices, prices, mvnos = random_lower_instance(
            rng, n_req, n_sl, n_nodes=int(rng.integers(1, 4)), bounded=bool(rng.integers(2)),
            integer=bool(rng.integers(2)))
        pinning = pin_requests(requests, [m.id for m in mvnos], seed + i)
        outputs = [run_lower_greedy(requests, slices, prices, mvnos=mvnos),
                   run_baseline1(requests, slices, pinning=pinning, mvnos=mvnos),
                   run_baseline2(requests, slices, pinning=pinning, mvnos=mvnos)]
        if n_req <= limits.max_requests and n_sl <= limits.max_slices:
            outputs.append(solve_lower_exact(requests, slices, prices, mvnos=mvnos, limits=limits))
            oracle_runs += 1
        for alloc in outputs:
            res.trials += 1
            if not validate_lower(alloc, requests, slices, mvnos):
                res.violations += 1
    res.seconds = time.perf_counter() - start
    res.info = {"instances": n, "oracle_runs": oracle_runs}
    return res


def _gap(greedy: float, exact: float) -> float:
    return 0.0 if exact <= 0 else (exact - greedy) / exact


def lower_dominance(n: int = 200, seed: int = 0, limits: OracleLimits = OracleLimits()) -> CheckResult:
    rng = np.random.default_rng([seed, 12])
    res = CheckResult("lower-dominance")
    gaps = []
    start = time.perf_counter()
    for _ in range(n):
        requests, slices, prices, mvnos = random_lower_instance(
            rng, int(rng.integers(1, limits.max_requests + 1)), int(rng.integers(1, limits.max_slices + 1)),
            bounded=bool(rng.integers(2)), integer=bool(rng.integers(2)))
        g = run_lower_greedy(requests, slices, prices, mvnos=mvnos).surplus
        e = solve_lower_exact(requests, slices, prices, mvnos=mvnos, limits=limits).surplus
        res.trials += 1
        res.violations += g > e + 1e-9
        gaps.append(_gap(g, e))
    res.seconds = time.perf_counter() - start
    res.info = {"mean_gap": float(np.mean(gaps)), "max_gap": float(np.max(gaps))}
    return res


def upper_dominance(n: int = 200, seed: int = 0, limits: OracleLimits = OracleLimits()) -> CheckResult:
    rng = np.random.default_rng([seed, 13])
    res = CheckResult("upper-dominance")
    graph = build_graph(GraphConfig(n_nodes=5))
    gaps = []
    start = time.perf_counter()
    for _ in range(n):
        bids = random_upper_bids(rng, int(rng.integers(1, min(limits.max_bids, 10) + 1)),
                                 n_groups=int(rng.integers(1, 6)), n_nodes=5)
        g = run_upper_greedy(graph, bids).profit
        exact = solve_upper_exact(graph, bids, limits=limits)
        res.trials += 1
        ok = g <= exact.profit + 1e-9 and check_placement(graph, [b.bundle for b in exact.accepted]).feasible
        res.violations += not ok
        gaps.append(_gap(g, exact.profit))
    res.seconds = time.perf_counter() - start
    res.info = {"mean_gap": float(np.mean(gaps)), "max_gap": float(np.max(gaps))}
    return res


def _replace_request(requests: list[Request], k: int, **changes) -> list[Request]:
    return requests[:k] + [replace(requests[k], **changes)] + requests[k + 1:]


def lower_monotonicity(n: int = 1000, seed: int = 0) -> CheckResult:
    """Raising an accepted user's bid or cutting its demand keeps it accepted."""
    rng = np.random.default_rng([seed, 14])
    res = CheckResult("lower-monotonicity")
    start = time.perf_counter()
    while res.trials < n:
        requests, slices, prices, mvnos = random_lower_instance(
            rng, int(rng.integers(2, 30)), int(rng.integers(1, 8)), bounded=bool(rng.integers(2)),
            integer=bool(rng.integers(2)))
        alloc = run_lower_greedy(requests, slices, prices, mvnos=mvnos)
        if not alloc.assignments:
            continue
        a = alloc.assignments[int(rng.integers(len(alloc.assignments)))]
        k = next(i for i, r in enumerate(requests) if r.id == a.request)
        r = requests[k]
        if res.trials % 2 == 0:
            changed = _replace_request(requests, k, bid=r.bid * float(rng.uniform(1.0, 3.0)))
        else:
            changed = _replace_request(requests, k, traffic=r.traffic * float(rng.uniform(0.05, 1.0)))
        res.trials += 1
        res.violations += r.id not in run_lower_greedy(changed, slices, prices, mvnos=mvnos).accepted
    res.seconds = time.perf_counter() - start
    return res


def upper_monotonicity(n: int = 1000, seed: int = 0) -> CheckResult:
    """Raising an accepted MVNO bid or shrinking its bundle keeps it accepted."""
    rng = np.random.default_rng([seed, 15])
    graph = build_graph()
    res = CheckResult("upper-monotonicity")
    start = time.perf_counter()
    while res.trials < n:
        bids = random_upper_bids(rng, int(rng.integers(2, 40)), n_groups=int(rng.integers(2, 15)), n_nodes=10)
        outcome = run_upper_greedy(graph, bids)
        if not outcome.accepted:
            continue
        w = outcome.accepted[int(rng.integers(len(outcome.accepted)))]
        if res.trials % 2 == 0:
            new = replace(w, value=w.value * float(rng.uniform(1.0, 3.0)))
        else:
            factor = float(rng.uniform(0.05, 1.0))
            new = replace(w, bundle=tuple(replace(s, traffic=s.traffic * factor) for s in w.bundle))
        changed = [new if b.id == w.id else b for b in bids]
        res.trials += 1
        res.violations += w.id not in {b.id for b in run_upper_greedy(graph, changed).accepted}
    res.seconds = time.perf_counter() - start
    return res


def second_price_example() -> bool:
    """Two users bid 300 and 200 for one 1 Gbps slice; the exact-solver VCG price is 200."""
    reqs = [Request(0, 0, "eMBB", 1.0, 300.0), Request(1, 0, "eMBB", 1.0, 200.0)]
    slices = [Slice(0, 0, "eMBB", 1.0, "V")]
    prices = {("V", 0): 0.0, ("V", 1): 0.0}

    def clear(rs):
        return solve_lower_exact(rs, slices, prices).realized_values()

    return vcg_price(0, reqs, clear) == 200.0


def vcg_truthfulness(n: int = 50, seed: int = 0, multipliers: int = 21) -> CheckResult:
    """No bid multiplier in [0.5, 1.5] beats truthful bidding under exact VCG with no base price."""
    rng = np.random.default_rng([seed, 16])
    grid = np.linspace(0.5, 1.5, multipliers)
    res = CheckResult("vcg-truthfulness")
    start = time.perf_counter()
    instances = 0
    while instances < n:
        requests, slices, prices, mvnos = random_lower_instance(
            rng, int(rng.integers(2, 8)), int(rng.integers(1, 4)), n_nodes=1,
            bounded=bool(rng.integers(2)), integer=bool(rng.integers(2)))
        k = int(rng.integers(len(requests)))
        truth = requests[k]
        if truth.bid <= 0:
            continue
        instances += 1

        def utility(bid: float) -> float:
            reqs = _replace_request(requests, k, bid=bid)

            def clear(rs):
                return solve_lower_exact(rs, slices, prices, mvnos=mvnos).realized_values()

            won = clear(reqs)
            if truth.id not in won:
                return 0.0
            # value at the true bid minus the VCG payment
            alloc = solve_lower_exact(reqs, slices, prices, mvnos=mvnos)
            margin = truth.bid - alloc.accepted[truth.id].price
            return margin - vcg_price(truth.id, reqs, clear, with_winner=won)

        honest = utility(truth.bid)
        for m in grid:
            res.trials += 1
            if utility(truth.bid * float(m)) > honest + 1e-7:
                res.violations += 1
    ok = second_price_example()
    res.trials += 1
    res.violations += not ok
    res.seconds = time.perf_counter() - start
    res.info = {"instances": n, "second_price": ok}
    return res


SUITES = {
    "constraint-fuzz": constraint_fuzz,
    "lower-dominance": lower_dominance,
    "upper-dominance": upper_dominance,
    "lower-monotonicity": lower_monotonicity,
    "upper-monotonicity": upper_monotonicity,
    "vcg-truthfulness": vcg_truthfulness,
}


def run_all(seed: int = 0, scale: float = 1.0) -> list[CheckResult]:
    """Every suite at its default size times ``scale``."""
    defaults = {"constraint-fuzz": 1000, "lower-dominance": 200, "upper-dominance": 200,
                "lower-monotonicity": 1000, "upper-monotonicity": 1000, "vcg-truthfulness": 50}
    out = []
    for name, fn in SUITES.items():
        r = fn(max(1, math.ceil(defaults[name] * scale)), seed)
        logger.info(r.line())
        out.append(r)
    return out
