import numpy as np
import pytest

from pairbid.exceptions import PreconditionError
from pairbid.lower import run_lower_greedy
from pairbid.model import Request, Slice
from pairbid.oracle import solve_lower_exact
from pairbid.pricing import Charge, final_charge, vcg_charges, vcg_price

from conftest import random_lower_instance


def lower_clear(solver, slices, prices, mvnos=None):
    return lambda reqs: solver(reqs, slices, prices, mvnos=mvnos).realized_values()


@pytest.mark.parametrize("q_vcg,q_base,expected", [(0, 135, 135), (200, 135, 200), (135, 135, 135)])
def test_final_charge(q_vcg, q_base, expected):
    assert final_charge(q_vcg, q_base) == expected
    assert Charge("x", q_vcg, q_base).q_final == expected


def test_negative_charges_rejected():
    with pytest.raises(ValueError):
        final_charge(-1, 0)
    with pytest.raises(ValueError):
        Charge("x", 0, -1)


def test_single_bidder_pays_nothing():
    r = Request(0, 0, "eMBB", 1.0, 100.0)
    clear = lower_clear(solve_lower_exact, [Slice(0, 0, "eMBB", 10.0, "V")], {("V", 0): 0.0})
    assert vcg_price(0, [r], clear) == 0.0


def test_second_price_recovery_with_exact_solver():
    reqs = [Request(0, 0, "eMBB", 1.0, 300.0), Request(1, 0, "eMBB", 1.0, 200.0)]
    prices = {("V", 0): 0.0, ("V", 1): 0.0}
    clear = lower_clear(solve_lower_exact, [Slice(0, 0, "eMBB", 1.0, "V")], prices)
    assert set(clear(reqs)) == {0}
    assert vcg_price(0, reqs, clear) == 200.0
    with pytest.raises(PreconditionError):
        vcg_price(1, reqs, clear)


def test_fig2_charges_hit_base_price(fig2):
    requests, slices, prices = fig2
    charges = vcg_charges(requests, lower_clear(run_lower_greedy, slices, prices), lambda k: 135.0)
    assert set(charges) == {2, 3}
    assert charges[3].q_vcg == pytest.approx(20.0) and charges[2].q_vcg == 0.0
    assert all(c.q_final == 135.0 for c in charges.values())


def test_plentiful_capacity_means_base_price_only():
    reqs = [Request(k, 0, "eMBB", 1.0, 10.0 * (k + 1)) for k in range(5)]
    prices = {("V", k): 1.0 for k in range(5)}
    clear = lower_clear(run_lower_greedy, [Slice(0, 0, "eMBB", 100.0, "V")], prices)
    charges = vcg_charges(reqs, clear, lambda k: 7.0)
    assert len(charges) == 5
    assert all(c.q_vcg == 0 and c.q_final == 7.0 for c in charges.values())


def test_cap_bounds_heuristic_prices():
    reqs = [Request(0, 0, "eMBB", 1.0, 300.0), Request(1, 0, "eMBB", 1.0, 200.0)]
    clear = lower_clear(run_lower_greedy, [Slice(0, 0, "eMBB", 1.0, "V")], {("V", 0): 0.0, ("V", 1): 0.0})
    assert vcg_price(0, reqs, clear, cap=150.0) == 150.0


@pytest.mark.parametrize("seed", range(25))
def test_exact_vcg_is_individually_rational(seed):
    rng = np.random.default_rng(100 + seed)
    requests, slices, prices, mvnos = random_lower_instance(rng, 6, 3, bounded=True)
    clear = lower_clear(solve_lower_exact, slices, prices, mvnos)
    margins = clear(requests)
    for k, c in vcg_charges(requests, clear, lambda k: 0.0).items():
        assert c.q_vcg <= margins[k] + 1e-9
