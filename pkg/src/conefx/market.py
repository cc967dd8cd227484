"""Finite event trees, exchange rates, solvency cones and no-arbitrage.

The market has d assets ("currencies") traded at the nodes of a finite
scenario tree.  At each node, pi[i][j] > 0 is the amount of asset i that
buys one unit of asset j; the solvency cone of the node collects every
portfolio that can be exchanged into a nonnegative one at those rates.

Weak no-arbitrage is certified constructively: an exact LP searches for a
strictly positive martingale measure together with a price process valued
in the dual solvency cones, maximising the minimum node mass so that strict
positivity is decidable rather than approximate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .geometry import Polyhedron
from .lp import EQ, GE, OPTIMAL, LinearProgram
from .rationals import ONE, ZERO, rat, rat_matrix, rat_vector, unit, zeros


class MarketError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Event tree
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TreeNode:
    id: str
    time: int
    parent: str | None
    children: tuple


class EventTree:
    """Finite filtered tree: a single root at time 0, all leaves at time T.

    Nodes are identified with the atoms of the filtration at their time;
    adapted processes are maps keyed by node id.  Optional reference weights
    assign a positive mass to every leaf.
    """

    def __init__(self, nodes, weights=None):
        self.nodes: dict[str, TreeNode] = {}
        children: dict[str, list] = {}
        roots = []
        for n in nodes:
            node = n if isinstance(n, TreeNode) else TreeNode(str(n[0]), int(n[1]), n[2], ())
            if node.id in self.nodes:
                raise MarketError(f"duplicate node id {node.id!r}")
            self.nodes[node.id] = node
            children.setdefault(node.id, [])
            if node.parent is None:
                roots.append(node.id)
            else:
                children.setdefault(node.parent, []).append(node.id)
        for nid, node in list(self.nodes.items()):
            kids = tuple(sorted(children.get(nid, ())))
            self.nodes[nid] = TreeNode(node.id, node.time, node.parent, kids)
        if len(roots) != 1:
            raise MarketError("tree must have exactly one root")
        self.root = roots[0]
        if self.nodes[self.root].time != 0:
            raise MarketError("root must be at time 0")
        for node in self.nodes.values():
            if node.parent is not None:
                p = self.nodes.get(node.parent)
                if p is None:
                    raise MarketError(f"unknown parent {node.parent!r}")
                if node.time != p.time + 1:
                    raise MarketError(f"node {node.id!r} is not one step after its parent")
        self.horizon = max(n.time for n in self.nodes.values())
        self._by_time: list[list[str]] = [[] for _ in range(self.horizon + 1)]
        for node in sorted(self.nodes.values(), key=lambda n: (n.time, n.id)):
            self._by_time[node.time].append(node.id)
        for node in self.nodes.values():
            if not node.children and node.time != self.horizon:
                raise MarketError(f"leaf {node.id!r} is not at the horizon")
        self.leaves = tuple(self._by_time[self.horizon])
        if weights is None:
            self.weights = {leaf: ONE for leaf in self.leaves}
        else:
            self.weights = {str(k): rat(v) for k, v in weights.items()}
            for leaf in self.leaves:
                if self.weights.get(leaf, ZERO) <= 0:
                    raise MarketError(f"leaf {leaf!r} needs a positive reference weight")

    def at_time(self, t: int) -> list:
        return list(self._by_time[t])

    def all_nodes(self) -> list:
        return [nid for level in self._by_time for nid in level]

    def children(self, nid: str) -> tuple:
        return self.nodes[nid].children

    def parent(self, nid: str):
        return self.nodes[nid].parent

    def time(self, nid: str) -> int:
        return self.nodes[nid].time

    def path(self, nid: str) -> list:
        """Node ids from the root down to nid, inclusive."""
        out = []
        while nid is not None:
            out.append(nid)
            nid = self.nodes[nid].parent
        return out[::-1]

    def subtree_leaves(self, nid: str) -> list:
        node = self.nodes[nid]
        if not node.children:
            return [nid]
        out = []
        for c in node.children:
            out.extend(self.subtree_leaves(c))
        return out


# ---------------------------------------------------------------------------
# Exchange rates and solvency cones
# ---------------------------------------------------------------------------

class ExchangeProcess:
    """One positive d x d exchange-rate matrix with unit diagonal per node."""

    def __init__(self, d: int, matrices: dict):
        self.d = d
        self.matrices = {}
        for nid, m in matrices.items():
            mat = rat_matrix(m)
            if len(mat) != d or any(len(row) != d for row in mat):
                raise MarketError(f"exchange matrix at {nid!r} is not {d}x{d}")
            for i in range(d):
                if mat[i][i] != 1:
                    raise MarketError(f"exchange matrix at {nid!r} has a non-unit diagonal")
                for j in range(d):
                    if mat[i][j] <= 0:
                        raise MarketError(f"exchange rate at {nid!r} is not positive")
            self.matrices[str(nid)] = mat

    def at(self, nid: str):
        return self.matrices[nid]


def frictionless_to_pi(tree: EventTree, prices: dict, k) -> ExchangeProcess:
    """Exchange rates pi[i][j] = (1+k) S^j / S^i from frictionless prices.

    Every asset carries an explicit price (a cash account is simply an asset
    with price 1); the cost rate k >= 0 widens every off-diagonal entry.
    """
    k = rat(k)
    if k < 0:
        raise MarketError("transaction cost rate must be nonnegative")
    first = next(iter(prices.values()))
    d = len(first)
    mats = {}
    for nid in tree.all_nodes():
        if nid not in prices:
            raise MarketError(f"missing price vector at node {nid!r}")
        s = rat_vector(prices[nid])
        if any(x <= 0 for x in s):
            raise MarketError(f"nonpositive price at node {nid!r}")
        mats[nid] = [
            [ONE if i == j else (1 + k) * s[j] / s[i] for j in range(d)]
            for i in range(d)
        ]
    return ExchangeProcess(d, mats)


def solvency_generators(pi) -> list:
    """Generators of the solvency cone: e^k plus pi[i][j] e^i - e^j (i != j)."""
    d = len(pi)
    gens = [unit(d, i) for i in range(d)]
    for i in range(d):
        for j in range(d):
            if i != j:
                g = list(zeros(d))
                g[i] = pi[i][j]
                g[j] -= 1
                gens.append(tuple(g))
    return gens


@dataclass(frozen=True)
class SolvencyCone:
    cone: Polyhedron  # solvent portfolios
    dual: Polyhedron  # consistent price directions {y : y.x >= 0 on the cone}
    generators: tuple = field(compare=False, default=())


def build_solvency_cone(pi) -> SolvencyCone:
    return _solvency_cone_cached(rat_matrix(pi))


@lru_cache(maxsize=4096)
def _solvency_cone_cached(pi) -> SolvencyCone:
    d = len(pi)
    gens = solvency_generators(pi)
    cone = Polyhedron.cone_from_rays(d, gens).canonical()
    dual = Polyhedron.from_hrep(d, [(g, ZERO) for g in gens]).canonical()
    return SolvencyCone(cone=cone, dual=dual, generators=tuple(gens))


def dual_cone_section(pi, i: int) -> Polyhedron:
    """Explicit slice {s : s_i = 1} of the dual solvency cone.

    Bounds 1/pi[j][i] <= s_j <= pi[i][j] for j != i together with the cross
    rates s_j <= pi[k][j] s_k; must agree with sectioning the polar cone.
    """
    d = len(pi)
    e = unit(d, i)
    rows = [(e, ONE), (tuple(-c for c in e), -ONE)]
    for j in range(d):
        if j == i:
            continue
        ej = unit(d, j)
        rows.append((ej, 1 / pi[j][i]))                     # s_j >= 1/pi[j][i]
        rows.append((tuple(-c for c in ej), -pi[i][j]))     # s_j <= pi[i][j]
        for kk in range(d):
            if kk == i or kk == j:
                continue
            row = list(zeros(d))
            row[kk] = pi[kk][j]
            row[j] = -ONE
            rows.append((tuple(row), ZERO))                 # pi[k][j] s_k - s_j >= 0
    return Polyhedron.from_hrep(d, rows).canonical()


# ---------------------------------------------------------------------------
# Weak no-arbitrage via an exact max-min LP
# ---------------------------------------------------------------------------

@dataclass
class MartingalePair:
    """Transition probabilities plus a price process with S_i normalised to 1.

    ``transitions[child]`` is the conditional probability of reaching the
    child from its parent; ``prices[node]`` is the d-vector S at the node.
    """

    transitions: dict
    prices: dict
    numeraire: int

    def node_mass(self, tree: EventTree, nid: str):
        m = ONE
        for step in tree.path(nid)[1:]:
            m *= self.transitions[step]
        return m

    def is_strictly_positive(self) -> bool:
        return all(p > 0 for p in self.transitions.values())


@dataclass
class NAResult:
    holds: bool
    pair: MartingalePair | None
    margin: object  # optimal min node mass; > 0 iff the property holds


def check_weak_na(tree: EventTree, pi: ExchangeProcess, numeraire: int) -> NAResult:
    """Decide weak no-arbitrage and produce an equivalent martingale pair.

    Searches for node masses m(node) = P(node) S(node) with S normalised to
    1 on the numeraire asset: mass conservation across children makes S a
    martingale, membership of the dual cones prices it consistently, and
    maximising the minimum node mass makes equivalence (strict positivity)
    an exact sign test on the optimum.
    """
    d = pi.d
    lp = LinearProgram()
    # masses live in the dual cones, which sit inside the nonnegative
    # orthant, so the unit-vector generator rows are implied by the bounds
    mvars = {nid: lp.add_vars(d, nonneg=True) for nid in tree.all_nodes()}
    eps = lp.add_var(nonneg=True)
    lp.add_constraint({mvars[tree.root][numeraire]: ONE}, EQ, ONE)
    for nid in tree.all_nodes():
        node = tree.nodes[nid]
        if node.children:
            for c in range(d):
                coeffs = {mvars[ch][c]: ONE for ch in node.children}
                coeffs[mvars[nid][c]] = coeffs.get(mvars[nid][c], ZERO) - ONE
                lp.add_constraint(coeffs, EQ, ZERO)
        mat = pi.at(nid)
        for i in range(d):
            for j in range(d):
                if i != j:
                    # exchange generator pi[i][j] e_i - e_j priced nonnegatively
                    lp.add_constraint(
                        {mvars[nid][i]: mat[i][j], mvars[nid][j]: -ONE}, GE, ZERO
                    )
        lp.add_constraint({mvars[nid][numeraire]: ONE, eps: -ONE}, GE, ZERO)
    lp.set_objective({eps: -ONE})
    res = lp.solve()
    if res.status != OPTIMAL or res.x[eps] <= 0:
        margin = res.x[eps] if res.status == OPTIMAL else None
        return NAResult(holds=False, pair=None, margin=margin)
    transitions, prices = {}, {}
    for nid in tree.all_nodes():
        m = [res.x[j] for j in mvars[nid]]
        prices[nid] = tuple(c / m[numeraire] for c in m)
        parent = tree.parent(nid)
        if parent is not None:
            pm = res.x[mvars[parent][numeraire]]
            transitions[nid] = m[numeraire] / pm
    pair = MartingalePair(transitions=transitions, prices=prices, numeraire=numeraire)
    return NAResult(holds=True, pair=pair, margin=res.x[eps])
