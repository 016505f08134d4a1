import itertools
import math

import pytest

from pairbid.fixtures import fig2_instance, random_lower_instance, random_upper_bids  # noqa: F401
from pairbid.model import compatible


@pytest.fixture
def fig2():
    return fig2_instance()


def brute_force_lower(requests, slices, prices, mvnos=()):
    """Enumerate every request -> slice-or-reject map; return the best feasible surplus."""
    bounds = {m.id: m.capacity_bound for m in mvnos}
    best = 0.0
    options = [[None] + [s for s in slices if compatible(r, s)] for r in requests]
    for combo in itertools.product(*options):
        occ, load, value = {}, {}, 0.0
        ok = True
        for r, s in zip(requests, combo):
            if s is None:
                continue
            margin = r.bid - prices[(s.owner, r.id)]
            occ[s.id] = occ.get(s.id, 0.0) + r.traffic
            load[s.owner] = load.get(s.owner, 0.0) + r.traffic
            value += margin
        for s in slices:
            if occ.get(s.id, 0.0) > s.capacity + 1e-9:
                ok = False
        for v, used in load.items():
            if used > bounds.get(v, math.inf) + 1e-9:
                ok = False
        if ok:
            best = max(best, value)
    return best


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    verdicts = {}
    for status in ("passed", "failed"):
        for rep in terminalreporter.stats.get(status, []):
            props = dict(getattr(rep, "user_properties", ()))
            if "criterion" in props and getattr(rep, "when", "call") == "call":
                verdicts[props["criterion"]] = (status, props.get("detail", ""))
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(verdicts):
        status, detail = verdicts[n]
        terminalreporter.write_line(f"{'PASS' if status == 'passed' else 'FAIL'} criterion {n}: {detail}")
