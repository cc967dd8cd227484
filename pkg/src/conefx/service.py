"""FastAPI service exposing the pricing engine.

Each endpoint takes the JSON model (same schema as the model files) plus
per-request options and returns exact rationals as "p/q" strings.  Domain
failures map to structured error codes so thin clients can translate them
into exit codes:

* ``invalid-model`` (422)          malformed input
* ``na-failed`` (409)              weak no-arbitrage does not hold
* ``endowment-insufficient`` (409) hedge requested below the price
* ``enumeration-cap`` / ``piece-cap`` (413) resource guards
* ``verification-failed`` / ``oracle-mismatch`` (500) internal cross-checks
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import oracle
from .buyer import (
    build_buyer_sets,
    bid_price,
    buyer_dual,
    buyer_hedge,
    verify_buyer_hedge,
)
from .geometry import ResourceCapError, negated_epigraph_section, union_vertices
from .market import check_weak_na
from .policies import EnumerationCapError, PolicyError, validate_randomised
from .rationals import approx, fmt, rat, unit, vec_scale
from .seller import (
    EndowmentError,
    PricingError,
    ask_price,
    build_seller_sets,
    seller_dual,
    seller_hedge,
    verify_seller_hedge,
)
from .serde import (
    Model,
    ModelError,
    parse_model,
    polyhedron_to_json,
    randomised_to_json,
    stopping_time_to_json,
    strategy_to_json,
    vec_to_json,
)

app = FastAPI(title="conefx", description="exact bid/ask pricing under proportional transaction costs")


class PriceRequest(BaseModel):
    model: dict
    side: str  # "ask" or "bid"
    asset: Optional[int] = None  # 1-based; default from the model options
    convention: Optional[str] = None
    oracle: bool = False
    cap: Optional[int] = None


class PriceResponse(BaseModel):
    side: str
    asset: int
    exact: str
    approx: str
    oracle_checked: bool = False


class CheckNARequest(BaseModel):
    model: dict
    asset: Optional[int] = None
    oracle: bool = False


class CheckNAResponse(BaseModel):
    holds: bool
    margin: Optional[str] = None
    transitions: Optional[dict] = None
    prices: Optional[dict] = None


class HedgeRequest(BaseModel):
    model: dict
    side: str
    asset: Optional[int] = None
    endowment: Optional[str] = None  # scalar multiple of the priced asset


class HedgeResponse(BaseModel):
    side: str
    asset: int
    endowment: str
    holdings: dict
    tau: Optional[dict] = None
    verified: bool


class DualRequest(BaseModel):
    model: dict
    side: str
    asset: Optional[int] = None


class DualResponse(BaseModel):
    side: str
    asset: int
    value: str
    price: str
    chi: dict
    transitions: dict
    prices: dict
    tau: Optional[dict] = None
    lambdas: Optional[dict] = None


class ExportRequest(BaseModel):
    model: dict
    side: str
    asset: Optional[int] = None
    axis: Optional[int] = None  # 1-based slicing axis for dual sections
    convention: Optional[str] = None


class ExportResponse(BaseModel):
    side: str
    asset: int
    axis: int
    nodes: dict


def _fail(status: int, code: str, message: str):
    raise HTTPException(status_code=status, detail={"code": code, "message": message})


def _load(doc: dict, asset: Optional[int], convention: Optional[str] = None) -> Model:
    try:
        model = parse_model(doc)
    except ModelError as exc:
        _fail(422, "invalid-model", str(exc))
    if asset is not None:
        if not 1 <= asset <= model.d:
            _fail(422, "invalid-model", f"asset index out of range 1..{model.d}")
        model.asset = asset - 1
    if convention:
        if convention not in ("standard", "interchanged"):
            _fail(422, "invalid-model", f"unknown convention {convention!r}")
        model.convention = convention
    return model


def _na_pair(model: Model):
    na = check_weak_na(model.tree, model.pi, model.asset)
    if not na.holds:
        _fail(409, "na-failed", "weak no-arbitrage fails for this model")
    return na.pair


def _guarded(fn):
    try:
        return fn()
    except (EnumerationCapError, ResourceCapError) as exc:
        code = "enumeration-cap" if isinstance(exc, EnumerationCapError) else "piece-cap"
        _fail(413, code, str(exc))
    except EndowmentError as exc:
        _fail(409, "endowment-insufficient", str(exc))
    except (PolicyError, ModelError) as exc:
        _fail(422, "invalid-model", str(exc))
    except PricingError as exc:
        _fail(409, "na-failed", str(exc))


@app.post("/check-na", response_model=CheckNAResponse)
def check_na(req: CheckNARequest) -> CheckNAResponse:
    model = _load(req.model, req.asset)
    na = _guarded(lambda: check_weak_na(model.tree, model.pi, model.asset))
    if req.oracle:
        arb = oracle.find_arbitrage(model.tree, model.pi)
        if na.holds == (arb is not None):
            _fail(500, "oracle-mismatch", "arbitrage search disagrees with the martingale test")
    if not na.holds:
        return CheckNAResponse(holds=False, margin=None if na.margin is None else fmt(na.margin))
    return CheckNAResponse(
        holds=True,
        margin=fmt(na.margin),
        transitions={nid: fmt(p) for nid, p in sorted(na.pair.transitions.items())},
        prices={nid: vec_to_json(v) for nid, v in sorted(na.pair.prices.items())},
    )


def _compute_price(model: Model, side: str):
    if side == "ask":
        sets = build_seller_sets(model.tree, model.pi, model.payoff, model.policy, model.convention)
        return ask_price(sets, model.asset), sets
    if side == "bid":
        sets = build_buyer_sets(model.tree, model.pi, model.payoff, model.policy, piece_cap=model.cap)
        return bid_price(sets, model.asset), sets
    _fail(422, "invalid-model", f"side must be 'ask' or 'bid', got {side!r}")


@app.post("/price", response_model=PriceResponse)
def price(req: PriceRequest) -> PriceResponse:
    model = _load(req.model, req.asset, req.convention)
    if req.cap:
        model.cap = req.cap
    _na_pair(model)
    value, _ = _guarded(lambda: _compute_price(model, req.side))
    checked = False
    if req.oracle:
        if model.convention != "standard":
            _fail(422, "invalid-model", "oracle cross-check applies to the standard convention")
        if req.side == "ask":
            ref = _guarded(lambda: oracle.lp_ask(model.tree, model.pi, model.payoff, model.policy, model.asset))
        else:
            ref = _guarded(
                lambda: oracle.lp_bid(
                    model.tree, model.pi, model.payoff, model.policy, model.asset, cap=model.cap
                )[0]
            )
        if ref != value:
            _fail(500, "oracle-mismatch", f"oracle price {fmt(ref)} != {fmt(value)}")
        checked = True
    return PriceResponse(
        side=req.side, asset=model.asset + 1, exact=fmt(value), approx=approx(value),
        oracle_checked=checked,
    )


@app.post("/hedge", response_model=HedgeResponse)
def hedge(req: HedgeRequest) -> HedgeResponse:
    model = _load(req.model, req.asset)
    _na_pair(model)
    value, sets = _guarded(lambda: _compute_price(model, req.side))
    if req.side == "ask":
        endowment = rat(req.endowment) if req.endowment is not None else value
        strategy = _guarded(lambda: seller_hedge(sets, endowment, model.asset))
        ok = verify_seller_hedge(strategy, model.tree, model.pi, model.payoff, model.policy)
        if not ok:
            _fail(500, "verification-failed", "constructed hedge failed verification")
        return HedgeResponse(
            side="ask", asset=model.asset + 1, endowment=fmt(endowment),
            holdings=strategy_to_json(model.tree, strategy), verified=True,
        )
    endowment = rat(req.endowment) if req.endowment is not None else -value
    z = vec_scale(endowment, unit(model.d, model.asset))
    hedge_pair = _guarded(lambda: buyer_hedge(sets, z))
    ok = verify_buyer_hedge(hedge_pair, model.tree, model.pi, model.payoff, model.policy)
    if not ok:
        _fail(500, "verification-failed", "constructed hedge failed verification")
    return HedgeResponse(
        side="bid", asset=model.asset + 1, endowment=fmt(endowment),
        holdings=strategy_to_json(model.tree, hedge_pair.strategy),
        tau=stopping_time_to_json(model.tree, hedge_pair.tau), verified=True,
    )


@app.post("/dual", response_model=DualResponse)
def dual(req: DualRequest) -> DualResponse:
    model = _load(req.model, req.asset)
    pair = _na_pair(model)
    value, sets = _guarded(lambda: _compute_price(model, req.side))
    if req.side == "ask":
        cert = _guarded(lambda: seller_dual(sets, pair, model.asset))
        if cert.value != value:
            _fail(500, "verification-failed", "dual value does not match the ask")
        if not validate_randomised(model.tree, model.policy, cert.chi):
            _fail(500, "verification-failed", "dual stopping time inconsistent with the policy")
        if not oracle.verify_pair(cert.pair(), cert.chi, model.tree, model.pi, model.asset):
            _fail(500, "verification-failed", "dual pair failed the martingale checks")
        return DualResponse(
            side="ask", asset=model.asset + 1, value=fmt(cert.value), price=fmt(value),
            chi=randomised_to_json(model.tree, cert.chi),
            transitions={nid: fmt(p) for nid, p in sorted(cert.transitions.items())},
            prices={nid: vec_to_json(v) for nid, v in sorted(cert.prices.items())},
            lambdas={nid: fmt(l) for nid, l in sorted(cert.lambdas.items())},
        )
    hedge_pair = _guarded(
        lambda: buyer_hedge(sets, vec_scale(-value, unit(model.d, model.asset)))
    )
    cert = _guarded(
        lambda: buyer_dual(model.tree, model.pi, model.payoff, hedge_pair.tau, pair, model.asset)
    )
    if cert.value != value:
        _fail(500, "verification-failed", "dual value does not match the bid")
    if not oracle.verify_pair(cert.pair(), cert.chi, model.tree, model.pi, model.asset):
        _fail(500, "verification-failed", "dual pair failed the martingale checks")
    return DualResponse(
        side="bid", asset=model.asset + 1, value=fmt(cert.value), price=fmt(value),
        chi=randomised_to_json(model.tree, cert.chi),
        transitions={nid: fmt(p) for nid, p in sorted(cert.transitions.items())},
        prices={nid: vec_to_json(v) for nid, v in sorted(cert.prices.items())},
        tau=stopping_time_to_json(model.tree, cert.tau),
    )


@app.post("/export-sets", response_model=ExportResponse)
def export_sets(req: ExportRequest) -> ExportResponse:
    model = _load(req.model, req.asset, req.convention)
    _na_pair(model)
    axis = (req.axis - 1) if req.axis is not None else model.asset
    if not 0 <= axis < model.d:
        _fail(422, "invalid-model", f"axis out of range 1..{model.d}")
    _, sets = _guarded(lambda: _compute_price(model, req.side))
    nodes = {}
    if req.side == "ask":
        full = None
        for nid in model.tree.all_nodes():
            entry = {}
            for family in ("U", "V", "W", "Z"):
                p = getattr(sets, family)[nid]
                if not p.hrep():  # no constraints: the whole space
                    entry[family] = {"marker": "full-space"}
                    continue
                body = polyhedron_to_json(p)
                body["dual_section"] = polyhedron_to_json(negated_epigraph_section(p, axis))
                entry[family] = body
            nodes[nid] = entry
    else:
        for nid in model.tree.all_nodes():
            entry = {}
            u = sets.U[nid]
            entry["U"] = polyhedron_to_json(u) if u is not None else {"marker": "empty"}
            for family in ("V", "W", "Z"):
                un = getattr(sets, family)[nid]
                if un.is_empty():
                    entry[family] = {"marker": "empty"}
                    continue
                body = {"pieces": [polyhedron_to_json(p) for p in un.pieces]}
                if family == "Z":
                    verts = union_vertices(un)
                    v_union = sets.V[nid]
                    body["vertices"] = [
                        {
                            "point": vec_to_json(v),
                            "in_exercise": u is not None and u.contains(v),
                            "in_continuation": any(p.contains(v) for p in v_union.pieces),
                        }
                        for v in verts
                    ]
                entry[family] = body
            nodes[nid] = entry
    return ExportResponse(side=req.side, asset=model.asset + 1, axis=axis + 1, nodes=nodes)
