import random

import pytest

from conefx.geometry import Polyhedron, section
from conefx.market import (
    EventTree,
    ExchangeProcess,
    MarketError,
    build_solvency_cone,
    check_weak_na,
    dual_cone_section,
    frictionless_to_pi,
    solvency_generators,
)
from conefx.oracle import find_arbitrage
from conefx.rationals import ONE, ZERO, dot, rat

from instances import random_instance


def one_node_tree():
    return EventTree([("0", 0, None)])


# ---------------------------------------------------------------------------
# exchange-rate construction
# ---------------------------------------------------------------------------

def test_three_asset_rates_from_prices():
    """Prices (12, 8, 1) at rate 1/3.

    The worked example displays 1/4 in entry (2,1), which contradicts its
    own formula (1+k) S^1/S^2 = 2; with 1/4 the dual cone section would be
    empty (an arbitrage), so the formula value is the trusted one and the
    discrepancy is pinned down here rather than patched over.
    """
    tree = one_node_tree()
    pi = frictionless_to_pi(tree, {"0": ("12", "8", "1")}, rat(1, 3))
    m = pi.at("0")
    expected = [
        [ONE, rat(8, 9), rat(1, 9)],
        [rat(2), ONE, rat(1, 6)],
        [rat(16), rat(32, 3), ONE],
    ]
    assert [list(r) for r in m] == expected
    displayed_entry = rat(1, 4)
    assert m[1][0] == 2 and m[1][0] != displayed_entry  # known display conflict
    assert m[0][1] * m[1][0] >= 1  # no two-asset money pump


def test_zero_rate_gives_price_ratios():
    tree = one_node_tree()
    pi = frictionless_to_pi(tree, {"0": ("4", "2", "1")}, 0)
    m = pi.at("0")
    # pi[i][j] = S^j / S^i: the amount of asset i that buys one unit of j
    assert m[0][1] == rat(1, 2) and m[1][0] == 2 and m[2][0] == 4


def test_single_step_example_rate_matrix(golden):
    tree, pi, _, _ = golden
    m = pi.at("r")
    assert m[0][1] == rat(7, 3)      # (1+1/6) * 20/10
    assert m[2][0] == rat(35, 3)     # (1+1/6) * 10
    assert m[1][2] == rat(7, 120)    # (1+1/6) / 20


def test_nonpositive_price_rejected():
    tree = one_node_tree()
    with pytest.raises(MarketError):
        frictionless_to_pi(tree, {"0": ("0", "1")}, 0)


def test_exchange_process_validation():
    with pytest.raises(MarketError):
        ExchangeProcess(2, {"0": [[1, 2], [3, 2]]})  # non-unit diagonal
    with pytest.raises(MarketError):
        ExchangeProcess(2, {"0": [[1, -2], [3, 1]]})  # nonpositive rate


# ---------------------------------------------------------------------------
# solvency cones
# ---------------------------------------------------------------------------

def test_frictionless_two_asset_cone_is_halfplane():
    sc = build_solvency_cone([[ONE, ONE], [ONE, ONE]])
    halfplane = Polyhedron.from_hrep(2, [((1, 1), 0)])
    assert sc.cone.same_set(halfplane)
    assert sc.dual.vertices() == ((ZERO, ZERO),)
    assert sc.dual.rays() == ((ONE, ONE),)


def test_example_dual_section_bounds():
    """Three assets at prices (12, 8, 1), rate 1/3: the cash slice of the
    dual cone is the polygon with 9 <= s1 <= 16 and 6 <= s2 <= 32/3."""
    tree = one_node_tree()
    pi = frictionless_to_pi(tree, {"0": ("12", "8", "1")}, rat(1, 3))
    sec = dual_cone_section(pi.at("0"), 2)
    assert not sec.is_empty() and not sec.rays()
    s1 = [v[0] for v in sec.vertices()]
    s2 = [v[1] for v in sec.vertices()]
    assert min(s1) == 9 and max(s1) == 16
    assert min(s2) == 6 and max(s2) == rat(32, 3)
    assert all(v[2] == 1 for v in sec.vertices())


def test_frictionless_dual_section_is_single_point():
    tree = one_node_tree()
    pi = frictionless_to_pi(tree, {"0": ("4", "6", "1")}, 0)
    sec = dual_cone_section(pi.at("0"), 2)
    assert sec.vertices() == ((rat(4), rat(6), rat(1)),)
    assert not sec.rays()


def test_growing_rate_enlarges_dual_section():
    tree = one_node_tree()
    prices = {"0": ("7", "3", "1")}
    small = dual_cone_section(frictionless_to_pi(tree, prices, rat(1, 10)).at("0"), 2)
    large = dual_cone_section(frictionless_to_pi(tree, prices, rat(1, 2)).at("0"), 2)
    assert large.contains_set(small)
    assert not small.contains_set(large)


def test_dual_section_agrees_with_polar():
    """The explicit inequality description of the sliced dual cone is
    set-equal to slicing the polar cone, on 100 random rate matrices."""
    for seed in range(100):
        rng = random.Random(seed)
        d = rng.choice([2, 3])
        tree = one_node_tree()
        prices = {"0": tuple(rat(rng.randint(1, 30), rng.randint(1, 3)) for _ in range(d))}
        k = rat(rng.randint(0, 6), 7)
        pi = frictionless_to_pi(tree, prices, k)
        i = rng.randrange(d)
        explicit = dual_cone_section(pi.at("0"), i)
        from_polar = section(build_solvency_cone(pi.at("0")).dual, i)
        assert explicit.same_set(from_polar)


@pytest.mark.parametrize("seed", range(6))
def test_polar_consistency_on_generators(seed):
    rng = random.Random(100 + seed)
    d = rng.choice([2, 3])
    mat = [
        [ONE if i == j else rat(rng.randint(1, 9), rng.randint(1, 4)) for j in range(d)]
        for i in range(d)
    ]
    sc = build_solvency_cone(mat)
    vs, rs = sc.cone.vrep()
    dual_check = Polyhedron.from_hrep(d, [(g, ZERO) for g in rs])
    assert dual_check.same_set(sc.dual)
    for y in sc.dual.rays():
        assert all(dot(y, g) >= 0 for g in solvency_generators(mat))


# ---------------------------------------------------------------------------
# weak no-arbitrage
# ---------------------------------------------------------------------------

def _binomial_two_assets(s0, su, sd, k=0):
    tree = EventTree([("0", 0, None), ("u", 1, "0"), ("d", 1, "0")])
    prices = {"0": (rat(s0), ONE), "u": (rat(su), ONE), "d": (rat(sd), ONE)}
    return tree, frictionless_to_pi(tree, prices, k)


def test_frictionless_binomial_has_unique_risk_neutral_pair():
    tree, pi = _binomial_two_assets(10, 12, 8)
    res = check_weak_na(tree, pi, 1)
    assert res.holds and res.margin > 0
    pair = res.pair
    # unique risk-neutral probability (10-8)/(12-8) = 1/2
    assert pair.transitions["u"] == rat(1, 2)
    assert pair.transitions["d"] == rat(1, 2)
    assert pair.prices["0"] == (rat(10), ONE)


def test_na_witness_invariants(golden):
    tree, pi, _, _ = golden
    res = check_weak_na(tree, pi, 2)
    assert res.holds
    pair = res.pair
    for nid in tree.all_nodes():
        children = tree.children(nid)
        if children:
            assert sum((pair.transitions[c] for c in children), ZERO) == 1
            for j in range(pi.d):
                lhs = sum((pair.transitions[c] * pair.prices[c][j] for c in children), ZERO)
                assert lhs == pair.prices[nid][j]
        s = pair.prices[nid]
        assert s[2] == 1
        assert any(v != 0 for v in s)
        assert all(dot(s, g) >= 0 for g in solvency_generators(pi.at(nid)))
    assert pair.is_strictly_positive()


def test_drift_arbitrage_detected():
    """Both successors above the current price with zero costs: buying the
    asset at 10 and selling at 11/12 dominates holding nothing."""
    tree, pi = _binomial_two_assets(10, 12, 11)
    res = check_weak_na(tree, pi, 1)
    assert not res.holds
    assert find_arbitrage(tree, pi) is not None


def test_static_money_pump_detected():
    tree = one_node_tree()
    pi = ExchangeProcess(2, {"0": [[ONE, rat(1, 2)], [ONE, ONE]]})
    res = check_weak_na(tree, pi, 1)
    assert not res.holds
    assert find_arbitrage(tree, pi) is not None


def test_transaction_costs_restore_no_arbitrage():
    """The same drift is not exploitable once the spread is wide enough."""
    tree, pi = _binomial_two_assets(10, 12, 11, k=rat(1, 2))
    res = check_weak_na(tree, pi, 1)
    assert res.holds
    assert find_arbitrage(tree, pi) is None


@pytest.mark.parametrize("seed", range(10))
def test_random_instances_satisfy_na(seed):
    tree, pi, _, _, d, _ = random_instance(seed)
    res = check_weak_na(tree, pi, d - 1)
    assert res.holds
    assert find_arbitrage(tree, pi) is None


# ---------------------------------------------------------------------------
# event-tree validation
# ---------------------------------------------------------------------------

def test_tree_validation_errors():
    with pytest.raises(MarketError):
        EventTree([("a", 0, None), ("b", 0, None)])  # two roots
    with pytest.raises(MarketError):
        EventTree([("a", 1, None)])  # root not at time 0
    with pytest.raises(MarketError):
        EventTree([("a", 0, None), ("b", 2, "a")])  # skipped level
    with pytest.raises(MarketError):
        EventTree([("a", 0, None), ("b", 1, "a"), ("c", 1, "b")])  # bad parent time


def test_tree_paths_and_leaves():
    tree = EventTree(
        [("0", 0, None), ("l", 1, "0"), ("r", 1, "0"), ("ll", 2, "l"), ("lr", 2, "l"),
         ("rl", 2, "r"), ("rr", 2, "r")]
    )
    assert tree.horizon == 2
    assert tree.leaves == ("ll", "lr", "rl", "rr")
    assert tree.path("lr") == ["0", "l", "lr"]
    assert tree.subtree_leaves("r") == ["rl", "rr"]
