"""Independent brute-force verification layer.

Everything here deliberately avoids the polyhedral kernel: superhedging
prices come from direct exact LPs whose solvency constraints use explicit
exchange-volume variables, the buyer price enumerates stopping times, and
martingale-pair properties are checked from first principles.  Agreement
between this module and the geometric recursions is the package's main
correctness argument.
"""

from __future__ import annotations

from .lp import GE, OPTIMAL, UNBOUNDED, LinearProgram
from .market import EventTree, ExchangeProcess, MartingalePair
from .policies import (
    ExercisePolicy,
    RandomisedStoppingTime,
    enumerate_stopping_times,
)
from .rationals import ONE, ZERO, dot, rat, rat_vector


class OracleError(RuntimeError):
    pass


def _add_solvency_membership(lp, pi_mat, point_coeffs, const):
    """Constrain (linear expression) + const to lie in the node's solvency cone.

    Introduces exchange volumes beta[i][j] >= 0 and requires every
    coordinate of the expression to stay nonnegative after the exchanges,
    which is the definition of solvency rather than a cone H-description.
    """
    d = len(pi_mat)
    beta = [[None] * d for _ in range(d)]
    for i in range(d):
        for j in range(d):
            if i != j:
                beta[i][j] = lp.add_var(nonneg=True)
    for m in range(d):
        coeffs = dict(point_coeffs[m])
        for i in range(d):
            for j in range(d):
                if i == j:
                    continue
                # exchanging i -> j: receive in j, pay pi[i][j] in i
                if j == m:
                    coeffs[beta[i][j]] = coeffs.get(beta[i][j], ZERO) + ONE
                if i == m:
                    coeffs[beta[i][j]] = coeffs.get(beta[i][j], ZERO) - pi_mat[i][j]
        lp.add_constraint(coeffs, GE, -const[m])


def lp_ask(
    tree: EventTree,
    pi: ExchangeProcess,
    payoff: dict,
    policy: ExercisePolicy,
    asset: int,
):
    """Seller's price by direct LP over self-financing strategies.

    Minimises x such that the strategy started from x units of the priced
    asset can rebalance self-financingly and covers the payoff at every
    exercise node.
    """
    d = pi.d
    lp = LinearProgram()
    x = lp.add_var()
    post = {nid: lp.add_vars(d) for nid in tree.all_nodes() if tree.children(nid)}

    def incoming(nid):
        parent = tree.parent(nid)
        if parent is None:
            return [({x: ONE} if m == asset else {}) for m in range(d)]
        return [{post[parent][m]: ONE} for m in range(d)]

    for nid in tree.all_nodes():
        inc = incoming(nid)
        if tree.children(nid):
            coeffs = [dict(inc[m]) for m in range(d)]
            for m in range(d):
                coeffs[m][post[nid][m]] = coeffs[m].get(post[nid][m], ZERO) - ONE
            _add_solvency_membership(lp, pi.at(nid), coeffs, [ZERO] * d)
        if policy.allows(nid):
            xi = rat_vector(payoff[nid])
            _add_solvency_membership(lp, pi.at(nid), inc, [-v for v in xi])
    lp.set_objective({x: ONE})
    res = lp.solve()
    if res.status == UNBOUNDED:
        raise OracleError("superhedging cost unbounded below: no-arbitrage fails")
    if res.status != OPTIMAL:
        raise OracleError("superhedging LP infeasible, which cannot happen")
    return res.objective


def lp_bid(
    tree: EventTree,
    pi: ExchangeProcess,
    payoff: dict,
    policy: ExercisePolicy,
    asset: int,
    cap: int = 10**6,
):
    """Buyer's price: best stopping time against European seller LPs.

    Enumerates every stopping time consistent with the policy and prices
    the European option with negated payoff at each; the bid is the largest
    negated value.  Returns (bid, best stopping time).
    """
    best, best_tau = None, None
    for tau in enumerate_stopping_times(tree, policy, cap=cap):
        euro_policy = ExercisePolicy({nid: tau.stops_at(nid) for nid in tree.all_nodes()})
        neg = {
            nid: [-v for v in rat_vector(payoff[nid])]
            for nid in tree.all_nodes()
            if tau.stops_at(nid)
        }
        val = -lp_ask(tree, pi, neg, euro_policy, asset)
        if best is None or val > best:
            best, best_tau = val, tau
    return best, best_tau


def seller_feasible_from(
    tree: EventTree,
    pi: ExchangeProcess,
    payoff: dict,
    policy: ExercisePolicy,
    endowment,
) -> bool:
    """Can the seller superhedge starting from this initial portfolio?"""
    d = pi.d
    y0 = rat_vector(endowment)
    lp = LinearProgram()
    post = {nid: lp.add_vars(d) for nid in tree.all_nodes() if tree.children(nid)}

    def incoming(nid):
        parent = tree.parent(nid)
        if parent is None:
            return [{} for _ in range(d)], y0
        return [{post[parent][m]: ONE} for m in range(d)], (ZERO,) * d

    for nid in tree.all_nodes():
        inc, const = incoming(nid)
        if tree.children(nid):
            coeffs = [dict(inc[m]) for m in range(d)]
            for m in range(d):
                coeffs[m][post[nid][m]] = coeffs[m].get(post[nid][m], ZERO) - ONE
            _add_solvency_membership(lp, pi.at(nid), coeffs, const)
        if policy.allows(nid):
            xi = rat_vector(payoff[nid])
            _add_solvency_membership(
                lp, pi.at(nid), inc, tuple(c - v for c, v in zip(const, xi))
            )
    res = lp.solve()
    return res.status == OPTIMAL


def buyer_feasible_from(
    tree: EventTree,
    pi: ExchangeProcess,
    payoff: dict,
    policy: ExercisePolicy,
    endowment,
    cap: int = 10**6,
) -> bool:
    """Can the buyer reach solvency from this initial portfolio by choosing
    some consistent stopping time?"""
    for tau in enumerate_stopping_times(tree, policy, cap=cap):
        euro_policy = ExercisePolicy({nid: tau.stops_at(nid) for nid in tree.all_nodes()})
        neg = {
            nid: [-v for v in rat_vector(payoff[nid])]
            for nid in tree.all_nodes()
            if tau.stops_at(nid)
        }
        if seller_feasible_from(tree, pi, neg, euro_policy, endowment):
            return True
    return False


# ---------------------------------------------------------------------------
# Expectations and pair verification
# ---------------------------------------------------------------------------

def node_masses(tree: EventTree, transitions: dict) -> dict:
    mass = {tree.root: ONE}
    for nid in tree.all_nodes():
        for c in tree.children(nid):
            mass[c] = mass[nid] * rat(transitions[c])
    return mass


def expectation(pair: MartingalePair, payoff: dict, chi: RandomisedStoppingTime, tree: EventTree):
    """E[ sum_t chi_t xi_t . S_t ] under the pair's measure, exact."""
    mass = node_masses(tree, pair.transitions)
    total = ZERO
    for nid in tree.all_nodes():
        m = chi.mass(nid)
        if m:
            total += mass[nid] * m * dot(rat_vector(payoff[nid]), pair.prices[nid])
    return total


def tail_value_expectations(pair, chi, tree: EventTree) -> dict:
    """Per node: E[ sum_{s>t} chi_s S_s | node ], the conditional tail values."""
    out = {}
    for nid in reversed(tree.all_nodes()):
        d = len(pair.prices[nid])
        acc = (ZERO,) * d
        for c in tree.children(nid):
            p = rat(pair.transitions[c])
            child_term = tuple(
                p * (chi.mass(c) * pair.prices[c][j] + out[c][j]) for j in range(d)
            )
            acc = tuple(a + b for a, b in zip(acc, child_term))
        out[nid] = acc
    return out


def verify_pair(
    pair: MartingalePair,
    chi: RandomisedStoppingTime,
    tree: EventTree,
    pi: ExchangeProcess,
    asset: int = None,
) -> bool:
    """Exact approximate-martingale-pair checks.

    Per node: transition weights are nonnegative and sum to one across
    children; the price lies in the dual solvency cone and is nonzero; the
    conditional expectation of the tail value lies in the dual cone; and
    the price is normalised to one on the priced asset when given.
    """
    from .market import solvency_generators

    for nid in tree.all_nodes():
        children = tree.children(nid)
        if children:
            total = ZERO
            for c in children:
                p = rat(pair.transitions.get(c, ZERO))
                if p < 0:
                    return False
                total += p
            if total != 1:
                return False
        s = pair.prices.get(nid)
        if s is None:
            return False
        s = rat_vector(s)
        if all(v == 0 for v in s):
            return False
        if asset is not None and s[asset] != 1:
            return False
        gens = solvency_generators(pi.at(nid))
        if any(dot(s, g) < 0 for g in gens):
            return False
    tails = tail_value_expectations(pair, chi, tree)
    for nid in tree.all_nodes():
        gens = solvency_generators(pi.at(nid))
        if any(dot(tails[nid], g) < 0 for g in gens):
            return False
    return True


def perturb_pair(
    pair_bar: MartingalePair,
    chi: RandomisedStoppingTime,
    payoff: dict,
    delta,
    seed: MartingalePair,
    tree: EventTree,
):
    """Equivalent pair within delta of the given pair's expected value.

    If the pair is already strictly positive it is returned unchanged.
    Otherwise it is mixed with the strictly positive seed: measures mix
    with weight eps = min(1, (delta/2)/|difference|) and prices mix with
    measure-reweighted coefficients, preserving the dual-cone constraints.
    """
    delta = rat(delta)
    if delta <= 0:
        raise OracleError("delta must be positive")
    if pair_bar.is_strictly_positive():
        return pair_bar
    e_bar = expectation(pair_bar, payoff, chi, tree)
    e_seed = expectation(seed, payoff, chi, tree)
    if e_bar == e_seed:
        return seed
    gap = abs(e_seed - e_bar)
    eps = min(ONE, (delta / 2) / gap)
    mass_bar = node_masses(tree, pair_bar.transitions)
    mass_seed = node_masses(tree, seed.transitions)
    mass_mix = {
        nid: (1 - eps) * mass_bar[nid] + eps * mass_seed[nid] for nid in tree.all_nodes()
    }
    transitions = {}
    prices = {}
    for nid in tree.all_nodes():
        for c in tree.children(nid):
            transitions[c] = mass_mix[c] / mass_mix[nid]
        d = len(pair_bar.prices[nid])
        prices[nid] = tuple(
            ((1 - eps) * mass_bar[nid] * pair_bar.prices[nid][j]
             + eps * mass_seed[nid] * seed.prices[nid][j]) / mass_mix[nid]
            for j in range(d)
        )
    return MartingalePair(transitions=transitions, prices=prices, numeraire=pair_bar.numeraire)


# ---------------------------------------------------------------------------
# Arbitrage search (independent cross-check of the no-arbitrage test)
# ---------------------------------------------------------------------------

def find_arbitrage(tree: EventTree, pi: ExchangeProcess):
    """A zero-endowment strategy whose terminal holding can be exchanged
    into a nonzero nonnegative portfolio, or None when weak no-arbitrage
    holds.

    Maximises the total nonnegative residual extractable at the horizon
    subject to self-financing from zero; a positive optimum (or an
    unbounded one) is an explicit arbitrage.  The final-date exchange
    matters: without it, price drift hidden behind one trading date would
    not count as an arbitrage even though no consistent price system
    exists.
    """
    d = pi.d
    lp = LinearProgram()
    post = {nid: lp.add_vars(d) for nid in tree.all_nodes() if tree.children(nid)}

    def incoming(nid):
        parent = tree.parent(nid)
        if parent is None:
            return [{} for _ in range(d)]
        return [{post[parent][m]: ONE} for m in range(d)]

    objective = {}
    for nid in tree.all_nodes():
        inc = incoming(nid)
        if tree.children(nid):
            coeffs = [dict(inc[m]) for m in range(d)]
            for m in range(d):
                coeffs[m][post[nid][m]] = coeffs[m].get(post[nid][m], ZERO) - ONE
            _add_solvency_membership(lp, pi.at(nid), coeffs, [ZERO] * d)
        else:
            residual = lp.add_vars(d, nonneg=True)
            coeffs = [dict(inc[m]) for m in range(d)]
            for m in range(d):
                coeffs[m][residual[m]] = coeffs[m].get(residual[m], ZERO) - ONE
                objective[residual[m]] = -ONE  # maximise the extracted mass
            _add_solvency_membership(lp, pi.at(nid), coeffs, [ZERO] * d)
    lp.set_objective(objective)
    res = lp.solve()
    if res.status == UNBOUNDED:
        source = res.ray
    elif res.status == OPTIMAL and res.objective < 0:
        source = res.x
    else:
        return None
    return {nid: tuple(source[j] for j in post[nid]) for nid in post}
