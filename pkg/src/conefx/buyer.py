"""Buyer-side pricing: union-valued recursion, bid price, hedge and dual.

The buyer's sets mirror the seller's with the payoff received instead of
delivered and, crucially, a union where the seller has an intersection: a
portfolio is good for the buyer if exercising now leaves it solvent OR it
can be carried forward.  The recursion therefore works on finite unions of
polyhedra; intersections distribute across pieces and every step reduces
the union (dropping absorbed pieces) to keep it small.  The bid price is
the negated cheapest cash-axis endowment in the root union.

The optimal hedge stops at the first node whose holding covers immediate
exercise, and the dual certificate comes from running the seller machinery
on the European option that delivers the negated payoff at that optimal
stopping time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import (
    GeometryError,
    Polyhedron,
    PolyUnion,
    ResourceCapError,
    reduce_union,
    union_intersect,
    union_minkowski_cone,
)
from .market import EventTree, ExchangeProcess, MartingalePair, build_solvency_cone
from .policies import (
    ExercisePolicy,
    PolicyError,
    RandomisedStoppingTime,
    StoppingTime,
    future_exercise_flags,
    validate_policy,
)
from .rationals import ONE, rat_vector, vec_add, vec_neg, vec_scale, vec_sub
from .seller import (
    EndowmentError,
    PricingError,
    SellerCertificate,
    Strategy,
    build_seller_sets,
    seller_dual,
)

DEFAULT_PIECE_CAP = 10_000


@dataclass
class BuyerSets:
    """Per-node exercise piece (U) and union-valued V, W, Z."""

    tree: EventTree
    pi: ExchangeProcess
    payoff: dict
    policy: ExercisePolicy
    cones: dict
    star: dict
    star_next: dict
    piece_cap: int
    U: dict = field(default_factory=dict)   # Polyhedron or None off the policy
    V: dict = field(default_factory=dict)   # PolyUnion
    W: dict = field(default_factory=dict)   # PolyUnion
    Z: dict = field(default_factory=dict)   # PolyUnion

    @property
    def d(self) -> int:
        return self.pi.d

    def root_target(self) -> PolyUnion:
        return self.Z[self.tree.root]


def build_buyer_sets(
    tree: EventTree,
    pi: ExchangeProcess,
    payoff: dict,
    policy: ExercisePolicy,
    piece_cap: int = DEFAULT_PIECE_CAP,
) -> BuyerSets:
    violations = validate_policy(tree, policy)
    if violations:
        raise PolicyError(f"invalid exercise policy: {violations[0].message}")
    d = pi.d
    star = future_exercise_flags(tree, policy)
    star_next = {
        nid: bool(tree.children(nid)) and all(star[c] for c in tree.children(nid))
        for nid in tree.all_nodes()
    }
    cones = {nid: build_solvency_cone(pi.at(nid)) for nid in tree.all_nodes()}
    sets = BuyerSets(
        tree=tree, pi=pi, payoff={k: rat_vector(v) for k, v in payoff.items()},
        policy=policy, cones=cones, star=star, star_next=star_next, piece_cap=piece_cap,
    )
    for nid in reversed(tree.all_nodes()):
        allowed = policy.allows(nid)
        if allowed:
            if nid not in sets.payoff:
                raise PricingError(f"missing payoff at exercise node {nid!r}")
            U = cones[nid].cone.translate(vec_neg(sets.payoff[nid])).canonical()
        else:
            U = None
        sets.U[nid] = U
        u_union = PolyUnion.of(d, [U] if U is not None else [])
        if not star[nid]:
            sets.W[nid] = sets.V[nid] = sets.Z[nid] = PolyUnion.empty(d)
            continue
        if not star_next[nid]:
            sets.W[nid] = sets.V[nid] = PolyUnion.empty(d)
            sets.Z[nid] = reduce_union(u_union)
            continue
        children = tree.children(nid)
        W = sets.Z[children[0]]
        for child in children[1:]:
            W = union_intersect(W, sets.Z[child], cap=piece_cap)
        sets.W[nid] = W
        V = union_minkowski_cone(W, cones[nid].cone)
        sets.V[nid] = V
        Z = reduce_union(PolyUnion.of(d, list(u_union.pieces) + list(V.pieces)))
        if len(Z.pieces) > piece_cap:
            raise ResourceCapError(f"target union exceeded the piece cap at {nid!r}")
        sets.Z[nid] = Z
        if Z.is_empty():
            raise PricingError(f"buyer target collapsed at node {nid!r}")
    return sets


def bid_price(sets: BuyerSets, asset: int):
    """-min{x : x e_asset lies in some piece of the root union}."""
    best = None
    for piece in sets.root_target().pieces:
        try:
            v = piece.min_along_axis(asset)
        except GeometryError as exc:
            if "unbounded" in str(exc):
                raise PricingError("bid price unbounded; no-arbitrage violated") from exc
            continue
        best = v if best is None or v < best else best
    if best is None:
        raise PricingError("no piece of the buyer target meets the pricing axis")
    return -best


# ---------------------------------------------------------------------------
# Hedging
# ---------------------------------------------------------------------------

@dataclass
class BuyerHedge:
    strategy: Strategy
    tau: StoppingTime


def buyer_hedge(sets: BuyerSets, endowment) -> BuyerHedge:
    """Forward walk: stop at the first holding that covers exercise, else
    rebalance into the continuation union (first feasible piece in canonical
    order, lexicographically least vertex inside it)."""
    tree = sets.tree
    z = rat_vector(endowment)
    if not sets.root_target().contains(z):
        raise EndowmentError("endowment insufficient")
    holdings = {tree.root: z}
    stop_flags: dict = {}
    stopped_above: dict = {tree.root: False}

    for nid in tree.all_nodes():
        y = holdings[nid]
        children = tree.children(nid)
        if stopped_above[nid]:
            stop_flags[nid] = False
            for c in children:
                holdings[c] = y
                stopped_above[c] = True
            continue
        if _in_exercise_piece(sets, nid, y):
            stop_flags[nid] = True
            for c in children:
                holdings[c] = y
                stopped_above[c] = True
            continue
        if not children:
            raise PricingError(f"holding at leaf {nid!r} cannot settle the option")
        stop_flags[nid] = False
        nxt = _rebalance_target(sets, nid, y)
        if nxt is None:
            raise PricingError(f"no rebalancing target at node {nid!r}")
        for c in children:
            holdings[c] = nxt
            stopped_above[c] = False
    tau = StoppingTime({nid: True for nid, s in stop_flags.items() if s})
    return BuyerHedge(strategy=Strategy(holdings=holdings), tau=tau)


def _in_exercise_piece(sets: BuyerSets, nid: str, y) -> bool:
    piece = sets.U[nid]
    return piece is not None and piece.contains(y)


def _rebalance_target(sets: BuyerSets, nid: str, y):
    cone = sets.cones[nid].cone
    vs, rs = cone.vrep()
    reachable = Polyhedron.from_generators(
        cone.dim, [vec_sub(y, v) for v in vs], [vec_scale(-ONE, r) for r in rs]
    )
    for piece in sets.W[nid].pieces:
        target = piece.intersect(reachable)
        if not target.is_empty():
            return target.lex_min_vertex()
    return None


def verify_buyer_hedge(
    hedge: BuyerHedge,
    tree: EventTree,
    pi: ExchangeProcess,
    payoff: dict,
    policy: ExercisePolicy,
) -> bool:
    """Self-financing, consistent stopping, solvency after exercise at the
    stop, and the first-entry property of the stopping time."""
    cones = {nid: build_solvency_cone(pi.at(nid)) for nid in tree.all_nodes()}
    strategy, tau = hedge.strategy, hedge.tau
    for leaf in tree.leaves:
        if sum(1 for nid in tree.path(leaf) if tau.stops_at(nid)) != 1:
            return False
    for nid in tree.all_nodes():
        y = strategy.holdings.get(nid)
        if y is None:
            return False
        children = tree.children(nid)
        if children:
            nxt = strategy.holdings.get(children[0])
            if nxt is None or any(strategy.holdings.get(c) != nxt for c in children):
                return False
            if not cones[nid].cone.contains(vec_sub(y, nxt)):
                return False
        covers = policy.allows(nid) and cones[nid].cone.contains(
            vec_add(y, rat_vector(payoff[nid]))
        )
        stopped_above = any(tau.stops_at(anc) for anc in tree.path(nid)[:-1])
        if tau.stops_at(nid):
            if not policy.allows(nid) or stopped_above or not covers:
                return False
        elif covers and not stopped_above:
            return False  # first-entry property violated
    return True


# ---------------------------------------------------------------------------
# Dual certificate via the European reduction
# ---------------------------------------------------------------------------

@dataclass
class BuyerCertificate:
    asset: int
    tau: StoppingTime
    chi: RandomisedStoppingTime
    transitions: dict
    prices: dict
    value: object
    seller_certificate: SellerCertificate

    def pair(self) -> MartingalePair:
        return MartingalePair(transitions=self.transitions, prices=self.prices, numeraire=self.asset)


def european_policy(tree: EventTree, tau: StoppingTime) -> ExercisePolicy:
    return ExercisePolicy({nid: tau.stops_at(nid) for nid in tree.all_nodes()})


def buyer_dual(
    tree: EventTree,
    pi: ExchangeProcess,
    payoff: dict,
    tau: StoppingTime,
    seed: MartingalePair,
    asset: int,
) -> BuyerCertificate:
    """Dual certificate for the buyer at the optimal stopping time.

    Prices the European option delivering the negated payoff at tau with
    the seller machinery; the resulting stopping time is necessarily the
    pure one at tau, and negating the value gives the bid.
    """
    neg_payoff = {
        nid: vec_neg(rat_vector(payoff[nid]))
        for nid in tree.all_nodes()
        if tau.stops_at(nid)
    }
    policy_tau = european_policy(tree, tau)
    euro_sets = build_seller_sets(tree, pi, neg_payoff, policy_tau)
    cert = seller_dual(euro_sets, seed, asset)
    if not cert.chi.is_pure():
        raise PricingError("European dual produced a non-pure stopping time")
    for nid in tree.all_nodes():
        stops = tau.stops_at(nid)
        mass = cert.chi.mass(nid)
        if (stops and mass != 1) or (not stops and mass != 0):
            raise PricingError("European dual stopping time differs from tau")
    value = -cert.value
    return BuyerCertificate(
        asset=asset,
        tau=tau,
        chi=cert.chi,
        transitions=cert.transitions,
        prices=cert.prices,
        value=value,
        seller_certificate=cert,
    )
