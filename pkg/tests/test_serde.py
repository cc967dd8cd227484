import json

import pytest

from conefx.geometry import Polyhedron
from conefx.rationals import rat
from conefx.serde import (
    ModelError,
    parse_model,
    polyhedron_from_json,
    polyhedron_to_json,
)


def test_parse_golden_model(golden_doc):
    model = parse_model(golden_doc)
    assert model.d == 3
    assert model.tree.horizon == 1
    assert model.tree.leaves == ("w1", "w2", "w3", "w4")
    assert model.asset == 2  # defaults to the last asset, 0-based internally
    assert model.policy.allows("r")
    assert model.payoff["r"] == (rat(1), rat(-1), rat(33))
    assert model.pi.at("r")[2][0] == rat(35, 3)


def test_parse_explicit_matrices(golden_doc):
    doc = json.loads(json.dumps(golden_doc))
    model = parse_model(golden_doc)
    doc["pi"] = {
        nid: [[str(model.pi.at(nid)[i][j]) for j in range(3)] for i in range(3)]
        for nid in model.tree.all_nodes()
    }
    again = parse_model(doc)
    for nid in model.tree.all_nodes():
        assert again.pi.at(nid) == model.pi.at(nid)


@pytest.mark.parametrize(
    "mutate,path_fragment",
    [
        (lambda d: d.pop("d"), "$.d"),
        (lambda d: d.update(d=1), "$.d"),
        (lambda d: d.update(tree=[]), "$.tree"),
        (lambda d: d["tree"].append({"id": "x", "time": 3, "parent": "w1"}), "$.tree"),
        (lambda d: d["pi"]["prices"].update(r=["10", "20", "-1"]), "$.pi"),
        (lambda d: d["pi"].update(k="1/0"), "$.pi.k"),
        (lambda d: d["payoff"].update(r=["1", "2"]), "$.payoff['r']"),
        (lambda d: d["payoff"].update(zz=["1", "2", "3"]), "$.payoff['zz']"),
        (lambda d: d["exercise"].update(zz=True), "$.exercise['zz']"),
        (lambda d: d.update(options={"asset": 9}), "$.options.asset"),
        (lambda d: d.update(options={"convention": "sideways"}), "$.options.convention"),
        (lambda d: d["payoff"].pop("w3"), "$.payoff['w3']"),
    ],
)
def test_located_diagnostics(golden_doc, mutate, path_fragment):
    doc = json.loads(json.dumps(golden_doc))
    mutate(doc)
    with pytest.raises(ModelError) as err:
        parse_model(doc)
    assert path_fragment in str(err.value)


def test_float_rationals_rejected(golden_doc):
    doc = json.loads(json.dumps(golden_doc))
    doc["payoff"]["r"] = [0.5, "1", "2"]
    with pytest.raises(ModelError):
        parse_model(doc)


def test_polyhedron_json_roundtrip():
    p = Polyhedron.from_generators(
        2, [(rat(1, 3), rat(2))], [(rat(1), rat(0))]
    ).canonical()
    doc = polyhedron_to_json(p)
    assert doc["dim"] == 2
    assert doc["vertices"] == [["1/3", "2"]]
    assert doc["rays"] == [["1", "0"]]
    assert all(len(row) == 3 for row in doc["hrep"])
    q = polyhedron_from_json(doc)
    assert q.canonical().same_set(p)
    # hrep-only documents load too
    q2 = polyhedron_from_json({"dim": 2, "hrep": doc["hrep"]})
    assert q2.same_set(p)


def test_empty_polyhedron_json():
    doc = polyhedron_to_json(Polyhedron.empty(2))
    assert doc["empty"] and doc["vertices"] == []
    assert polyhedron_from_json(doc).is_empty()


def test_reference_weights_parsed(golden_doc):
    doc = json.loads(json.dumps(golden_doc))
    doc["q"] = {"w1": "1/4", "w2": "1/4", "w3": "1/4", "w4": "1/4"}
    model = parse_model(doc)
    assert model.tree.weights["w3"] == rat(1, 4)
    doc["q"]["w4"] = "0"
    with pytest.raises(ModelError):
        parse_model(doc)


def test_policy_and_stopping_exports(golden_doc):
    from conefx.serde import policy_to_json, stopping_time_to_json
    from conefx.policies import StoppingTime

    model = parse_model(golden_doc)
    pol = policy_to_json(model.tree, model.policy)
    assert pol == {nid: True for nid in model.tree.all_nodes()}
    tau = StoppingTime({"r": True})
    flags = stopping_time_to_json(model.tree, tau)
    assert flags["r"] is True and flags["w1"] is False
