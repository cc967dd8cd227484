"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines and timings.  All equalities are exact rational comparisons; the time
budgets are asserted with a monotonic clock around each criterion's own
computation loop.
"""

import time

import pytest

from conefx.buyer import (
    bid_price,
    build_buyer_sets,
    buyer_dual,
    buyer_hedge,
    verify_buyer_hedge,
)
from conefx.geometry import negated_epigraph_section, union_vertices
from conefx.market import check_weak_na
from conefx.oracle import expectation, lp_ask, lp_bid, perturb_pair, verify_pair
from conefx.policies import make_american, make_european, validate_randomised
from conefx.rationals import fmt, rat, unit, vec_scale
from conefx.seller import (
    EndowmentError,
    ask_price,
    build_seller_sets,
    seller_dual,
    seller_hedge,
    verify_seller_hedge,
)

from conftest import (
    GOLDEN_ASK,
    GOLDEN_BID,
    GOLDEN_BID_VERTEX_COMMON,
    GOLDEN_BID_VERTEX_CONTINUATION_ONLY,
    GOLDEN_BID_VERTEX_EXERCISE_ONLY,
    GOLDEN_DUAL_SECTION_VERTICES,
    as_rat_set,
    single_step_model,
)
from instances import binomial_complete, random_instance, riskneutral_value

N_RANDOM = 100


@pytest.fixture(scope="module")
def instances():
    return [random_instance(seed) for seed in range(N_RANDOM)]


def _passline(n, message):
    print(f"\nACCEPTANCE {n}: PASS - {message}")


def test_criterion_1_golden_ask():
    """Exact ask 134/3 on the worked single-step model and the ten golden
    dual-section vertices, in under a second."""
    t0 = time.monotonic()
    tree, pi, payoff, policy = single_step_model()
    sets = build_seller_sets(tree, pi, payoff, policy)
    ask = ask_price(sets, 2)
    assert ask == GOLDEN_ASK
    profile = negated_epigraph_section(sets.Z[tree.root], 2)
    assert set(profile.vertices()) == as_rat_set(GOLDEN_DUAL_SECTION_VERTICES)
    elapsed = time.monotonic() - t0
    assert elapsed < 1.0
    _passline(1, f"ask = {fmt(ask)}, 10 dual-section vertices match ({elapsed:.2f}s)")


def test_criterion_2_golden_bid():
    """Exact bid 59/3 with the eight golden vertices and their
    exercise/continuation partition, in under a second."""
    t0 = time.monotonic()
    tree, pi, payoff, policy = single_step_model()
    sets = build_buyer_sets(tree, pi, payoff, policy)
    bid = bid_price(sets, 2)
    assert bid == GOLDEN_BID
    z0 = sets.Z[tree.root]
    verts = set(union_vertices(z0))
    u0, v_pieces = sets.U[tree.root], sets.V[tree.root].pieces
    u_only = {v for v in verts if u0.contains(v) and not any(p.contains(v) for p in v_pieces)}
    v_only = {v for v in verts if not u0.contains(v) and any(p.contains(v) for p in v_pieces)}
    common = verts - u_only - v_only
    assert u_only == as_rat_set(GOLDEN_BID_VERTEX_EXERCISE_ONLY)
    assert v_only == as_rat_set(GOLDEN_BID_VERTEX_CONTINUATION_ONLY)
    assert common == as_rat_set(GOLDEN_BID_VERTEX_COMMON)
    elapsed = time.monotonic() - t0
    assert elapsed < 1.0
    _passline(2, f"bid = {fmt(bid)}, 8 vertices with 1/2/5 partition ({elapsed:.2f}s)")


def test_criterion_3_strong_duality(instances):
    """Dual certificate values equal the prices exactly, and the carried
    pairs satisfy every approximate-martingale check, on both worked
    examples and 100 random no-arbitrage instances, within 60 seconds."""
    t0 = time.monotonic()
    batch = [single_step_model() + (3,)] + [
        (tree, pi, payoff, policy, d) for tree, pi, payoff, policy, d, _ in instances
    ]
    for tree, pi, payoff, policy, d in batch:
        i = d - 1
        na = check_weak_na(tree, pi, i)
        assert na.holds
        ssets = build_seller_sets(tree, pi, payoff, policy)
        ask = ask_price(ssets, i)
        cert = seller_dual(ssets, na.pair, i)
        assert cert.value == ask
        assert validate_randomised(tree, policy, cert.chi)
        assert verify_pair(cert.pair(), cert.chi, tree, pi, i)
        assert expectation(cert.pair(), payoff, cert.chi, tree) == ask
        bsets = build_buyer_sets(tree, pi, payoff, policy)
        bid = bid_price(bsets, i)
        hedge = buyer_hedge(bsets, vec_scale(-bid, unit(d, i)))
        bcert = buyer_dual(tree, pi, payoff, hedge.tau, na.pair, i)
        assert bcert.value == bid
        assert verify_pair(bcert.pair(), bcert.chi, tree, pi, i)
        assert expectation(bcert.pair(), payoff, bcert.chi, tree) == bid
    elapsed = time.monotonic() - t0
    assert elapsed < 60.0
    _passline(3, f"{len(batch)} instances, both duals exact ({elapsed:.1f}s < 60s)")


def test_criterion_4_oracle_equivalence(instances):
    """Polyhedral prices equal the direct-LP/enumeration oracle prices
    exactly on all 100 random instances, within 120 seconds."""
    t0 = time.monotonic()
    for tree, pi, payoff, policy, d, _ in instances:
        i = d - 1
        ssets = build_seller_sets(tree, pi, payoff, policy)
        assert ask_price(ssets, i) == lp_ask(tree, pi, payoff, policy, i)
        bsets = build_buyer_sets(tree, pi, payoff, policy)
        oracle_bid, _ = lp_bid(tree, pi, payoff, policy, i)
        assert bid_price(bsets, i) == oracle_bid
    elapsed = time.monotonic() - t0
    assert elapsed < 120.0
    _passline(4, f"{N_RANDOM} instances, ask==lp_ask and bid==lp_bid ({elapsed:.1f}s < 120s)")


def test_criterion_5_european_symmetry():
    """bid(payoff) == -ask(-payoff) exactly on 50 random European options."""
    count = 0
    for seed in range(1000, 1080):
        tree, pi, payoff, _, d, _ = random_instance(seed)
        policy = make_european(tree)
        i = d - 1
        bid = bid_price(build_buyer_sets(tree, pi, payoff, policy), i)
        neg = {nid: tuple(-x for x in payoff[nid]) for nid in tree.all_nodes()}
        ask_neg = ask_price(build_seller_sets(tree, pi, neg, policy), i)
        assert bid == -ask_neg
        count += 1
        if count >= 50:
            break
    assert count >= 50
    _passline(5, f"{count} European instances, bid == -ask(-payoff) exactly")


def test_criterion_6_ordering_and_degeneracy(instances):
    """bid <= ask on every instance; in a frictionless complete binomial
    model both equal the unique risk-neutral value from an independent
    backward induction."""
    for tree, pi, payoff, policy, d, _ in instances:
        i = d - 1
        ask = ask_price(build_seller_sets(tree, pi, payoff, policy), i)
        bid = bid_price(build_buyer_sets(tree, pi, payoff, policy), i)
        assert bid <= ask
    checked = 0
    for seed in range(40):
        tree, pi, prices, payoff, up, down = binomial_complete(seed, steps=3)
        if up <= 1 or down >= 1:
            continue
        policy = make_american(tree)
        snell = riskneutral_value(tree, prices, payoff, policy)
        ask = ask_price(build_seller_sets(tree, pi, payoff, policy), 1)
        bid = bid_price(build_buyer_sets(tree, pi, payoff, policy), 1)
        assert ask == snell
        assert bid == snell
        checked += 1
    assert checked >= 20
    _passline(6, f"bid <= ask on {len(instances)} instances; {checked} complete models price at the risk-neutral value")


def test_criterion_7_hedges(instances):
    """Every constructed hedge verifies; endowments one cash unit below the
    ask (above the negated bid) are rejected, on golden and random
    instances."""
    batch = [single_step_model() + (3,)] + [
        (tree, pi, payoff, policy, d) for tree, pi, payoff, policy, d, _ in instances
    ]
    for tree, pi, payoff, policy, d in batch:
        i = d - 1
        ssets = build_seller_sets(tree, pi, payoff, policy)
        ask = ask_price(ssets, i)
        strategy = seller_hedge(ssets, ask, i)
        assert verify_seller_hedge(strategy, tree, pi, payoff, policy)
        with pytest.raises(EndowmentError):
            seller_hedge(ssets, ask - 1, i)
        bsets = build_buyer_sets(tree, pi, payoff, policy)
        bid = bid_price(bsets, i)
        hedge = buyer_hedge(bsets, vec_scale(-bid, unit(d, i)))
        assert verify_buyer_hedge(hedge, tree, pi, payoff, policy)
        with pytest.raises(EndowmentError):
            buyer_hedge(bsets, vec_scale(-(bid + 1), unit(d, i)))
    _passline(7, f"{len(batch)} instances, hedges verified and short endowments rejected")


def test_criterion_8_perturbation(instances):
    """Perturbed certificate pairs are strictly positive, verify exactly,
    and land within delta of the original expectation for delta in
    {1/10, 1/1000}."""
    batch = [single_step_model() + (3,)] + [
        (tree, pi, payoff, policy, d) for tree, pi, payoff, policy, d, _ in instances[:25]
    ]
    for tree, pi, payoff, policy, d in batch:
        i = d - 1
        na = check_weak_na(tree, pi, i)
        ssets = build_seller_sets(tree, pi, payoff, policy)
        cert = seller_dual(ssets, na.pair, i)
        base = expectation(cert.pair(), payoff, cert.chi, tree)
        for delta in (rat(1, 10), rat(1, 1000)):
            out = perturb_pair(cert.pair(), cert.chi, payoff, delta, na.pair, tree)
            assert out.is_strictly_positive()
            assert verify_pair(out, cert.chi, tree, pi, i)
            assert abs(expectation(out, payoff, cert.chi, tree) - base) < delta
    _passline(8, f"{len(batch)} certificates perturbed at delta = 1/10 and 1/1000")


def test_criterion_9_convention_ordering():
    """The rebalance-before-exercise convention never asks less than the
    standard one, on 50 random American instances."""
    count = 0
    for seed in range(2000, 2080):
        tree, pi, payoff, _, d, _ = random_instance(seed)
        policy = make_american(tree)
        i = d - 1
        std = ask_price(build_seller_sets(tree, pi, payoff, policy), i)
        inter = ask_price(
            build_seller_sets(tree, pi, payoff, policy, convention="interchanged"), i
        )
        assert inter >= std
        count += 1
        if count >= 50:
            break
    assert count >= 50
    _passline(9, f"{count} American instances, interchanged ask >= standard ask")
