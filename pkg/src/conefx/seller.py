"""Seller-side pricing: backward set recursion, ask price, hedge and dual.

Backward pass, per node: the exercise set is the payoff translate of the
solvency cone where exercise is allowed (otherwise the whole space); the
continuation set intersects the next-period target sets over all children,
gets the solvency cone added (rebalancing), and the target set is the
intersection of the two.  The ask price is the cheapest cash-axis endowment
inside the root target set.

Forward passes: the optimal hedge walks down the tree picking a rebalanced
portfolio inside the continuation set at every node; the dual certificate
walks down the support-function epigraphs, splitting each point between the
exercise and continuation epigraphs (a convex decomposition on the sliced
epigraphs) and then across children, which yields a randomised stopping
time, transition weights and a price process whose expected stopped payoff
reproduces the ask exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import (
    GeometryError,
    Polyhedron,
    decompose_in_hull,
    support_epigraph_of_negation,
    support_of_negation,
)
from .market import EventTree, ExchangeProcess, MartingalePair, build_solvency_cone
from .policies import (
    ExercisePolicy,
    PolicyError,
    RandomisedStoppingTime,
    future_exercise_flags,
    validate_policy,
)
from .rationals import ONE, ZERO, dot, rat, rat_vector, unit, vec_scale, vec_sub

STANDARD = "standard"
INTERCHANGED = "interchanged"


class PricingError(ValueError):
    pass


class EndowmentError(PricingError):
    pass


@dataclass
class SellerSets:
    """Per-node exercise (U), rebalanced (V), continuation (W), target (Z)."""

    tree: EventTree
    pi: ExchangeProcess
    payoff: dict
    policy: ExercisePolicy
    convention: str
    cones: dict
    star: dict        # exercise possible now or later
    star_next: dict   # exercise possible strictly later
    U: dict = field(default_factory=dict)
    V: dict = field(default_factory=dict)
    W: dict = field(default_factory=dict)
    Z: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.pi.d

    def root_target(self) -> Polyhedron:
        return self.Z[self.tree.root]


def build_seller_sets(
    tree: EventTree,
    pi: ExchangeProcess,
    payoff: dict,
    policy: ExercisePolicy,
    convention: str = STANDARD,
) -> SellerSets:
    if convention not in (STANDARD, INTERCHANGED):
        raise PricingError(f"unknown convention {convention!r}")
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
    sets = SellerSets(
        tree=tree, pi=pi, payoff={k: rat_vector(v) for k, v in payoff.items()},
        policy=policy, convention=convention, cones=cones, star=star, star_next=star_next,
    )
    full = Polyhedron.full_space(d).canonical()
    for nid in reversed(tree.all_nodes()):
        allowed = policy.allows(nid)
        if allowed:
            if nid not in sets.payoff:
                raise PricingError(f"missing payoff at exercise node {nid!r}")
            U = cones[nid].cone.translate(sets.payoff[nid]).canonical()
        else:
            U = full
        sets.U[nid] = U
        if not star[nid]:
            sets.W[nid] = sets.V[nid] = sets.Z[nid] = full
            continue
        if not star_next[nid]:
            sets.W[nid] = sets.V[nid] = full
            sets.Z[nid] = U
            continue
        W = sets.Z[tree.children(nid)[0]]
        for child in tree.children(nid)[1:]:
            W = W.intersect(sets.Z[child])
        sets.W[nid] = W
        if convention == STANDARD:
            V = W.minkowski_sum_cone(cones[nid].cone)
            sets.V[nid] = V
            sets.Z[nid] = U.intersect(V)
        else:
            Z = W.intersect(U).minkowski_sum_cone(cones[nid].cone)
            sets.V[nid] = Z
            sets.Z[nid] = Z
        if sets.Z[nid].is_empty():
            raise PricingError(f"target set collapsed at node {nid!r}")
    return sets


def ask_price(sets: SellerSets, asset: int):
    """min{x : x e_asset lies in the root target set} (0-based asset)."""
    try:
        return sets.root_target().min_along_axis(asset)
    except GeometryError as exc:
        raise PricingError(f"ask price does not exist: {exc}") from exc


# ---------------------------------------------------------------------------
# Hedging
# ---------------------------------------------------------------------------

@dataclass
class Strategy:
    """Predictable portfolio process: one incoming holding vector per node."""

    holdings: dict  # node id -> d-vector held at that node

    def at(self, nid: str):
        return self.holdings[nid]


def seller_hedge(sets: SellerSets, x0, asset: int) -> Strategy:
    """Optimal-from-x0 superhedge built by the forward feasibility walk.

    At every node the next holding is a canonical point (lexicographically
    least vertex) of the continuation set intersected with what the current
    holding can rebalance into.
    """
    if sets.convention != STANDARD:
        raise PricingError("hedge construction is defined for the standard convention")
    tree = sets.tree
    d = sets.d
    y0 = vec_scale(rat(x0), unit(d, asset))
    if not sets.root_target().contains(y0):
        raise EndowmentError("endowment insufficient")
    holdings = {tree.root: y0}
    for nid in tree.all_nodes():
        children = tree.children(nid)
        if not children:
            continue
        y = holdings[nid]
        target = sets.W[nid].intersect(_reachable(sets, nid, y))
        if target.is_empty():
            raise PricingError(f"no rebalancing target at node {nid!r}")
        z = target.lex_min_vertex()
        for child in children:
            holdings[child] = z
    return Strategy(holdings=holdings)


def _reachable(sets: SellerSets, nid: str, y) -> Polyhedron:
    """{z : y - z is solvent at the node} = y - solvency cone."""
    cone = sets.cones[nid].cone
    vs, rs = cone.vrep()
    return Polyhedron.from_generators(
        cone.dim, [vec_sub(y, v) for v in vs], [vec_scale(-ONE, r) for r in rs]
    )


def verify_seller_hedge(
    strategy: Strategy,
    tree: EventTree,
    pi: ExchangeProcess,
    payoff: dict,
    policy: ExercisePolicy,
) -> bool:
    """Self-financing plus settlement cover at every exercise node."""
    cones = {nid: build_solvency_cone(pi.at(nid)) for nid in tree.all_nodes()}
    for nid in tree.all_nodes():
        y = strategy.holdings.get(nid)
        if y is None:
            return False
        children = tree.children(nid)
        if children:
            nxt = strategy.holdings.get(children[0])
            if nxt is None or any(strategy.holdings.get(c) != nxt for c in children):
                return False  # not predictable
            if not cones[nid].cone.contains(vec_sub(y, nxt)):
                return False
        if policy.allows(nid):
            if not cones[nid].cone.contains(vec_sub(y, rat_vector(payoff[nid]))):
                return False
    return True


def trivial_hedge_level(payoff: dict, policy: ExercisePolicy, tree: EventTree) -> tuple:
    """Coordinatewise maximum payoff over exercise nodes: always superhedges."""
    d = len(next(iter(payoff.values())))
    out = [None] * d
    for nid in tree.all_nodes():
        if policy.allows(nid):
            v = rat_vector(payoff[nid])
            for j in range(d):
                out[j] = v[j] if out[j] is None or v[j] > out[j] else out[j]
    if any(v is None for v in out):
        raise PricingError("policy allows no exercise anywhere")
    return tuple(out)


# ---------------------------------------------------------------------------
# Support epigraphs and the dual construction
# ---------------------------------------------------------------------------

def support_epigraphs(sets: SellerSets, which: str = "Z") -> dict:
    """Per-node epigraph of the support function of the negated set."""
    family = getattr(sets, which)
    return {nid: support_epigraph_of_negation(p) for nid, p in family.items()}


@dataclass
class SellerCertificate:
    """Optimal randomised stopping time and approximate martingale pair.

    The expectation of the stopped, price-weighted payoff under the carried
    transition weights equals the ask exactly; the per-node splitting data
    (lambda, X, Y) documents how each epigraph point was decomposed.
    """

    asset: int
    chi: RandomisedStoppingTime
    transitions: dict   # child node id -> conditional weight
    prices: dict        # node id -> price vector, asset coordinate = 1
    value: object
    lambdas: dict
    X: dict
    Y: dict

    def pair(self) -> MartingalePair:
        return MartingalePair(transitions=self.transitions, prices=self.prices, numeraire=self.asset)


def seller_dual(sets: SellerSets, seed: MartingalePair, asset: int) -> SellerCertificate:
    """Forward construction of the optimal dual certificate.

    Seeded with an equivalent martingale pair; at every node the current
    epigraph point either splits between the exercise and continuation
    epigraphs (deciding how much stopping mass to spend) or is forced, and
    continuation points split across the children's epigraphs, producing
    the transition weights.
    """
    if sets.convention != STANDARD:
        raise PricingError("dual construction is defined for the standard convention")
    if seed.numeraire != asset:
        raise PricingError("seed pair must be normalised to the priced asset")
    tree, d, i = sets.tree, sets.d, asset

    epi_U = {nid: support_epigraph_of_negation(sets.U[nid]) for nid in tree.all_nodes()}
    epi_V = {nid: support_epigraph_of_negation(sets.V[nid]) for nid in tree.all_nodes()}
    epi_Z = {nid: support_epigraph_of_negation(sets.Z[nid]) for nid in tree.all_nodes()}

    root_slice = epi_Z[tree.root].domain_slice(i)
    if root_slice.is_empty():
        raise PricingError("root support slice is empty; no-arbitrage violated")
    # value coordinate comes first, so the lexicographic minimum picks the
    # least support value and then the lex-least point of the minimising face
    start = min(root_slice.vertices())
    Y: dict = {tree.root: tuple(start[1:])}
    lambdas: dict = {}
    X: dict = {}
    prices: dict = {}
    transitions: dict = {}
    chi_mass: dict = {}
    residual = {tree.root: ONE}

    for nid in tree.all_nodes():
        children = tree.children(nid)
        allowed = sets.policy.allows(nid)
        y_here = Y[nid]
        if not sets.star[nid]:
            lam = ZERO
            x_here = seed.prices[nid]
            s_here = seed.prices[nid]
        elif allowed and sets.star_next[nid]:
            zval = support_of_negation(sets.Z[nid], y_here)
            if zval is None:
                raise PricingError(f"support value unbounded at node {nid!r}")
            pieces = [epi_V[nid].domain_slice(i), epi_U[nid].domain_slice(i)]
            parts = decompose_in_hull((zval,) + tuple(y_here), pieces)
            lam, x_here, s_here = _split_two(parts, d)
            if x_here is None:
                x_here = tuple(pieces[0].lex_min_vertex()[1:])
            if s_here is None:
                s_here = seed.prices[nid]
        elif allowed:
            lam = ONE
            s_here = y_here
            x_here = seed.prices[nid]
        else:
            lam = ZERO
            x_here = y_here
            s_here = seed.prices[nid]
        lambdas[nid] = lam
        X[nid] = x_here
        prices[nid] = s_here
        res = residual[nid]
        chi_mass[nid] = lam * res
        res_next = res - chi_mass[nid]

        if not children:
            continue
        if sets.star_next[nid]:
            wval = support_of_negation(sets.W[nid], x_here)
            if wval is None:
                raise PricingError(f"continuation support unbounded at node {nid!r}")
            pieces = [epi_Z[c].domain_slice(i) for c in children]
            parts = decompose_in_hull((wval,) + tuple(x_here), pieces)
            weights = {c: ZERO for c in children}
            points = {c: None for c in children}
            for part in parts:
                c = children[part.piece]
                weights[c] = part.weight
                points[c] = tuple(part.witness[1:])
            for idx, c in enumerate(children):
                if points[c] is None:  # zero-weight branch still needs a
                    points[c] = tuple(pieces[idx].lex_min_vertex()[1:])  # valid point
                transitions[c] = weights[c]
                Y[c] = points[c]
                residual[c] = res_next
        else:
            for c in children:
                transitions[c] = seed.transitions[c]
                Y[c] = seed.prices[c]
                residual[c] = res_next

    chi = RandomisedStoppingTime({nid: m for nid, m in chi_mass.items() if m})
    value = ZERO
    mass = {tree.root: ONE}
    for nid in tree.all_nodes():
        for c in tree.children(nid):
            mass[c] = mass[nid] * transitions[c]
        if chi_mass.get(nid):
            value += mass[nid] * chi_mass[nid] * dot(sets.payoff[nid], prices[nid])
    return SellerCertificate(
        asset=asset, chi=chi, transitions=transitions, prices=prices,
        value=value, lambdas=lambdas, X=X, Y=Y,
    )


def _split_two(parts, d: int):
    """Group decomposition weights into (lambda on piece 1, X, S)."""
    w_v = sum((p.weight for p in parts if p.piece == 0), ZERO)
    w_u = sum((p.weight for p in parts if p.piece == 1), ZERO)
    x_here = None
    s_here = None
    if w_v:
        acc = (ZERO,) * (d + 1)
        for p in parts:
            if p.piece == 0:
                acc = tuple(a + p.weight * b for a, b in zip(acc, p.witness))
        x_here = tuple(c / w_v for c in acc[1:])
    if w_u:
        acc = (ZERO,) * (d + 1)
        for p in parts:
            if p.piece == 1:
                acc = tuple(a + p.weight * b for a, b in zip(acc, p.witness))
        s_here = tuple(c / w_u for c in acc[1:])
    return w_u, x_here, s_here
