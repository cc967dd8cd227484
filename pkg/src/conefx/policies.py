"""Exercise policies and (randomised) stopping times on event trees.

An exercise policy marks the nodes at which the option holder may exercise.
Validity asks for two things beyond adaptedness (which is structural here):
whether future exercise is possible must be decided by the current node
(all of a node's children agree), and every scenario must offer at least
one exercise opportunity.

Stopping times are node-level stop flags with exactly one stop per
root-to-leaf path; randomised stopping times spread one unit of stopping
mass along each path.
"""

from __future__ import annotations

from dataclasses import dataclass

from .market import EventTree
from .rationals import ONE, ZERO


class PolicyError(ValueError):
    pass


class EnumerationCapError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExercisePolicy:
    allow: dict  # node id -> bool

    def allows(self, nid: str) -> bool:
        return bool(self.allow.get(nid, False))


@dataclass(frozen=True)
class StoppingTime:
    stop: dict  # node id -> bool

    def stops_at(self, nid: str) -> bool:
        return bool(self.stop.get(nid, False))

    def stop_node_on_path(self, tree: EventTree, leaf: str) -> str:
        for nid in tree.path(leaf):
            if self.stops_at(nid):
                return nid
        raise PolicyError(f"no stop on the path to {leaf!r}")

    def key(self, tree: EventTree) -> tuple:
        return tuple(nid for nid in tree.all_nodes() if self.stops_at(nid))


@dataclass(frozen=True)
class RandomisedStoppingTime:
    chi: dict  # node id -> rational mass in [0, 1]

    def mass(self, nid: str):
        return self.chi.get(nid, ZERO)

    def residual_before(self, tree: EventTree, nid: str):
        """chi*_t at the node: 1 minus the mass spent strictly above it."""
        spent = ZERO
        for anc in tree.path(nid)[:-1]:
            spent += self.mass(anc)
        return ONE - spent

    def is_pure(self) -> bool:
        return all(m == 0 or m == 1 for m in self.chi.values())


def pure(tree: EventTree, tau: StoppingTime) -> RandomisedStoppingTime:
    return RandomisedStoppingTime({nid: ONE for nid in tree.all_nodes() if tau.stops_at(nid)})


# ---------------------------------------------------------------------------
# Policy structure
# ---------------------------------------------------------------------------

def future_exercise_flags(tree: EventTree, policy: ExercisePolicy) -> dict:
    """Node flags for "exercise is possible now or later" (the starred sets).

    Only meaningful for valid policies, where children of a node agree on
    their own flags; computed with "any child" which then equals "every
    child".
    """
    star: dict[str, bool] = {}
    for nid in reversed(tree.all_nodes()):
        node = tree.nodes[nid]
        star[nid] = policy.allows(nid) or any(star[c] for c in node.children)
    return star


@dataclass(frozen=True)
class PolicyViolation:
    node: str
    code: str
    message: str


def validate_policy(tree: EventTree, policy: ExercisePolicy) -> list:
    """Empty list iff the per-node flags form a valid exercise policy."""
    violations = []
    star: dict[str, bool] = {}
    for nid in reversed(tree.all_nodes()):
        node = tree.nodes[nid]
        flags = [star[c] for c in node.children]
        if flags and any(flags) and not all(flags):
            violations.append(
                PolicyViolation(
                    node=nid,
                    code="future-not-measurable",
                    message=f"children of {nid!r} disagree on future exercise",
                )
            )
        star[nid] = policy.allows(nid) or (bool(flags) and any(flags))
    if not star.get(tree.root, False):
        # when no children disagree anywhere, a false root flag means some
        # scenario (in fact every scenario) never gets to exercise
        violations.append(
            PolicyViolation(
                node=tree.root,
                code="no-exercise-opportunity",
                message="some scenario never allows exercise",
            )
        )
    return violations


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------

def make_european(tree: EventTree) -> ExercisePolicy:
    return make_bermudan(tree, [tree.horizon])


def make_american(tree: EventTree) -> ExercisePolicy:
    return ExercisePolicy({nid: True for nid in tree.all_nodes()})


def make_bermudan(tree: EventTree, dates) -> ExercisePolicy:
    dates = set(int(t) for t in dates)
    if not dates:
        raise PolicyError("a Bermudan policy needs at least one exercise date")
    if any(t < 0 or t > tree.horizon for t in dates):
        raise PolicyError("exercise date outside the tree horizon")
    if tree.horizon not in dates and max(dates) != tree.horizon:
        # policy is still valid: every path crosses every date level
        pass
    return ExercisePolicy({nid: tree.time(nid) in dates for nid in tree.all_nodes()})


def make_random_expiry(tree: EventTree, sigma: StoppingTime) -> ExercisePolicy:
    """Exercise allowed while the expiry stopping time has not yet passed."""
    allow = {}
    for nid in tree.all_nodes():
        stopped_before = any(sigma.stops_at(anc) for anc in tree.path(nid)[:-1])
        allow[nid] = not stopped_before
    return ExercisePolicy(allow)


# ---------------------------------------------------------------------------
# Stopping times consistent with a policy
# ---------------------------------------------------------------------------

def enumerate_stopping_times(tree: EventTree, policy: ExercisePolicy, cap: int = 10**6) -> list:
    """All stopping times whose stop sets stay inside the policy.

    Exhaustive and duplicate free; intended for desk-scale trees, with a
    hard cap to stop combinatorial blowup.
    """
    star = future_exercise_flags(tree, policy)

    def per_node(nid: str) -> list:
        options = []
        if policy.allows(nid):
            options.append((nid,))
        node = tree.nodes[nid]
        if node.children and all(star[c] for c in node.children):
            partial = [()]
            for c in node.children:
                sub = per_node(c)
                partial = [p + s for p in partial for s in sub]
                if len(partial) > cap:
                    raise EnumerationCapError(f"stopping-time enumeration exceeded cap {cap}")
            options.extend(partial)
        if len(options) > cap:
            raise EnumerationCapError(f"stopping-time enumeration exceeded cap {cap}")
        return options

    stop_sets = per_node(tree.root)
    out = [StoppingTime({nid: True for nid in s}) for s in stop_sets]
    if not out:
        raise PolicyError("policy admits no consistent stopping time")
    return out


def witness_stopping_time(tree: EventTree, policy: ExercisePolicy, t_prime: int) -> StoppingTime:
    """A consistent stopping time whose time-t' stop set is the whole
    exercise set at t'.

    Before t' it stops only where no future exercise remains; at t' it
    stops on every allowed node; afterwards it stops at the first allowed
    node not preceded by an earlier stop.
    """
    star = future_exercise_flags(tree, policy)
    stop = {}
    for nid in tree.all_nodes():
        t = tree.time(nid)
        node = tree.nodes[nid]
        future = bool(node.children) and all(star.get(c, False) for c in node.children)
        if t < t_prime:
            stop[nid] = policy.allows(nid) and not future
        elif t == t_prime:
            stop[nid] = policy.allows(nid)
        else:
            earlier = any(stop.get(anc, False) for anc in tree.path(nid)[:-1])
            stop[nid] = policy.allows(nid) and not earlier
    return StoppingTime({nid: True for nid, s in stop.items() if s})


def is_consistent_stopping_time(tree: EventTree, policy: ExercisePolicy, tau: StoppingTime) -> bool:
    for nid in tree.all_nodes():
        if tau.stops_at(nid) and not policy.allows(nid):
            return False
    try:
        for leaf in tree.leaves:
            path = tree.path(leaf)
            if sum(1 for nid in path if tau.stops_at(nid)) != 1:
                return False
    except PolicyError:
        return False
    return True


def validate_randomised(tree: EventTree, policy: ExercisePolicy, chi: RandomisedStoppingTime) -> bool:
    """True iff chi is a randomised stopping time supported inside the policy."""
    for nid, m in chi.chi.items():
        if nid not in tree.nodes:
            return False
        if m < 0:
            return False
        if m > 0 and not policy.allows(nid):
            return False
    for leaf in tree.leaves:
        total = sum((chi.mass(nid) for nid in tree.path(leaf)), ZERO)
        if total != 1:
            return False
    return True
