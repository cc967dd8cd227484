"""JSON model files and output schemas.

Rationals travel as "p/q" strings (plain "p" for integers).  A model file
looks like::

    {
      "d": 3,
      "tree": [{"id": "r", "time": 0, "parent": null}, ...],
      "pi": {"r": [["1", "7/3", "7/60"], ...], ...}
            or {"prices": {"r": ["10", "20", "1"], ...}, "k": "1/6"},
      "payoff": {"r": ["1", "-1", "33"], ...},
      "exercise": {"r": true, ...},
      "q": {"leaf": "1/4", ...},                      # optional weights
      "options": {"asset": 3, "convention": "standard", "cap": 1000000}
    }

Parsing failures carry the JSON path of the offending entry.  Asset indices
are 1-based on the wire (the default is the last asset, the cash account of
the worked examples) and 0-based inside the library.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .geometry import Polyhedron, PolyUnion
from .market import EventTree, ExchangeProcess, MarketError, frictionless_to_pi
from .policies import ExercisePolicy, RandomisedStoppingTime, StoppingTime
from .rationals import fmt, rat


class ModelError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class Model:
    d: int
    tree: EventTree
    pi: ExchangeProcess
    payoff: dict
    policy: ExercisePolicy
    asset: int          # 0-based priced asset
    convention: str
    cap: int


def _rat_at(path, value):
    try:
        return rat(value)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ModelError(path, f"bad rational {value!r}: {exc}") from exc


def parse_model(doc: dict) -> Model:
    if not isinstance(doc, dict):
        raise ModelError("$", "model must be a JSON object")
    try:
        d = int(doc["d"])
    except (KeyError, TypeError, ValueError):
        raise ModelError("$.d", "missing or non-integer asset count")
    if d < 2:
        raise ModelError("$.d", "need at least two assets")

    raw_tree = doc.get("tree")
    if not isinstance(raw_tree, list) or not raw_tree:
        raise ModelError("$.tree", "missing or empty node list")
    nodes = []
    for idx, entry in enumerate(raw_tree):
        path = f"$.tree[{idx}]"
        if not isinstance(entry, dict) or "id" not in entry or "time" not in entry:
            raise ModelError(path, "node needs 'id' and 'time'")
        parent = entry.get("parent")
        nodes.append((str(entry["id"]), int(entry["time"]), None if parent is None else str(parent)))
    weights = doc.get("q")
    try:
        tree = EventTree(nodes, weights=weights)
    except MarketError as exc:
        raise ModelError("$.tree", str(exc)) from exc

    raw_pi = doc.get("pi")
    if isinstance(raw_pi, dict) and "prices" in raw_pi:
        prices = {}
        for nid, vec in raw_pi["prices"].items():
            prices[str(nid)] = [_rat_at(f"$.pi.prices[{nid!r}]", v) for v in vec]
        k = _rat_at("$.pi.k", raw_pi.get("k", 0))
        try:
            pi = frictionless_to_pi(tree, prices, k)
        except MarketError as exc:
            raise ModelError("$.pi", str(exc)) from exc
    elif isinstance(raw_pi, dict):
        mats = {}
        for nid, mat in raw_pi.items():
            mats[str(nid)] = [
                [_rat_at(f"$.pi[{nid!r}][{i}][{j}]", v) for j, v in enumerate(row)]
                for i, row in enumerate(mat)
            ]
        missing = [nid for nid in tree.all_nodes() if nid not in mats]
        if missing:
            raise ModelError("$.pi", f"missing exchange matrix at node {missing[0]!r}")
        try:
            pi = ExchangeProcess(d, mats)
        except MarketError as exc:
            raise ModelError("$.pi", str(exc)) from exc
    else:
        raise ModelError("$.pi", "expected per-node matrices or {'prices':..., 'k':...}")

    raw_payoff = doc.get("payoff")
    if not isinstance(raw_payoff, dict):
        raise ModelError("$.payoff", "expected per-node payoff vectors")
    payoff = {}
    for nid, vec in raw_payoff.items():
        if str(nid) not in tree.nodes:
            raise ModelError(f"$.payoff[{nid!r}]", "unknown node")
        if len(vec) != d:
            raise ModelError(f"$.payoff[{nid!r}]", f"payoff vector must have {d} entries")
        payoff[str(nid)] = tuple(_rat_at(f"$.payoff[{nid!r}]", v) for v in vec)

    raw_ex = doc.get("exercise")
    if not isinstance(raw_ex, dict):
        raise ModelError("$.exercise", "expected per-node booleans")
    allow = {}
    for nid, flag in raw_ex.items():
        if str(nid) not in tree.nodes:
            raise ModelError(f"$.exercise[{nid!r}]", "unknown node")
        allow[str(nid)] = bool(flag)
    policy = ExercisePolicy(allow)
    for nid in tree.all_nodes():
        if policy.allows(nid) and nid not in payoff:
            raise ModelError(f"$.payoff[{nid!r}]", "exercise node without payoff")

    options = doc.get("options") or {}
    asset_1b = options.get("asset", d)
    try:
        asset_1b = int(asset_1b)
    except (TypeError, ValueError):
        raise ModelError("$.options.asset", "asset index must be an integer")
    if not 1 <= asset_1b <= d:
        raise ModelError("$.options.asset", f"asset index out of range 1..{d}")
    convention = options.get("convention", "standard")
    if convention not in ("standard", "interchanged"):
        raise ModelError("$.options.convention", f"unknown convention {convention!r}")
    cap = int(options.get("cap", 10**6))
    return Model(
        d=d, tree=tree, pi=pi, payoff=payoff, policy=policy,
        asset=asset_1b - 1, convention=convention, cap=cap,
    )


def load_model(path: str) -> Model:
    with open(path) as fh:
        return parse_model(json.load(fh))


# ---------------------------------------------------------------------------
# Output shapes
# ---------------------------------------------------------------------------

def vec_to_json(v) -> list:
    return [fmt(x) for x in v]


def polyhedron_to_json(p: Polyhedron) -> dict:
    if p.is_empty():
        return {"dim": p.dim, "empty": True, "hrep": [], "vertices": [], "rays": []}
    vs, rs = p.vrep()
    return {
        "dim": p.dim,
        "hrep": [[*(fmt(c) for c in a), fmt(b)] for a, b in p.hrep()],
        "vertices": [vec_to_json(v) for v in vs],
        "rays": [vec_to_json(r) for r in rs],
    }


def polyhedron_from_json(doc: dict) -> Polyhedron:
    dim = int(doc["dim"])
    if doc.get("empty"):
        return Polyhedron.empty(dim)
    if doc.get("vertices"):
        return Polyhedron.from_generators(
            dim,
            [[rat(c) for c in v] for v in doc["vertices"]],
            [[rat(c) for c in r] for r in doc.get("rays", [])],
        )
    return Polyhedron.from_hrep(
        dim, [([rat(c) for c in row[:-1]], rat(row[-1])) for row in doc.get("hrep", [])]
    )


def union_to_json(u: PolyUnion) -> dict:
    return {"dim": u.dim, "pieces": [polyhedron_to_json(p) for p in u.pieces]}


def stopping_time_to_json(tree: EventTree, tau: StoppingTime) -> dict:
    return {nid: tau.stops_at(nid) for nid in tree.all_nodes()}


def randomised_to_json(tree: EventTree, chi: RandomisedStoppingTime) -> dict:
    return {nid: fmt(chi.mass(nid)) for nid in tree.all_nodes() if chi.mass(nid)}


def policy_to_json(tree: EventTree, policy: ExercisePolicy) -> dict:
    return {nid: policy.allows(nid) for nid in tree.all_nodes()}


def strategy_to_json(tree: EventTree, strategy) -> dict:
    return {nid: vec_to_json(strategy.holdings[nid]) for nid in tree.all_nodes()}


def dump_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
