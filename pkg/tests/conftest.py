import json
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from conefx.market import EventTree, frictionless_to_pi
from conefx.policies import make_american
from conefx.rationals import rat

MODELS_DIR = os.path.join(os.path.dirname(__file__), "..", "models")


def single_step_model():
    """The worked single-step American example: three assets (cash last),
    four scenarios, cost rate 1/6, ask 134/3 and bid 59/3."""
    nodes = [("r", 0, None)] + [(f"w{i}", 1, "r") for i in range(1, 5)]
    tree = EventTree(nodes)
    prices = {
        "r": ("10", "20", "1"),
        "w1": ("8", "18", "1"),
        "w2": ("12", "18", "1"),
        "w3": ("8", "22", "1"),
        "w4": ("12", "22", "1"),
    }
    pi = frictionless_to_pi(tree, prices, rat(1, 6))
    payoff = {
        "r": tuple(map(rat, ("1", "-1", "33"))),
        "w1": tuple(map(rat, ("-1", "1", "10"))),
        "w2": tuple(map(rat, ("-2", "1", "10"))),
        "w3": tuple(map(rat, ("-1", "2", "10"))),
        "w4": tuple(map(rat, ("-2", "2", "10"))),
    }
    policy = make_american(tree)
    return tree, pi, payoff, policy


@pytest.fixture(scope="session")
def golden():
    return single_step_model()


@pytest.fixture(scope="session")
def golden_doc():
    with open(os.path.join(MODELS_DIR, "single_step_american.json")) as fh:
        return json.load(fh)


GOLDEN_ASK = rat(134, 3)
GOLDEN_BID = rat(59, 3)

GOLDEN_DUAL_SECTION_VERTICES = {
    ("10", "120/7", "181/7"),
    ("60/7", "132/7", "262/7"),
    ("35/3", "22", "106/3"),
    ("35/3", "70/3", "38"),
    ("60/7", "120/7", "184/7"),
    ("35/3", "20", "950/33"),
    ("11", "132/7", "194/7"),
    ("66/7", "22", "310/7"),
    ("60/7", "20", "3170/77"),
    ("10", "70/3", "134/3"),
}

GOLDEN_BID_VERTEX_EXERCISE_ONLY = {("-1", "1", "-33")}
GOLDEN_BID_VERTEX_CONTINUATION_ONLY = {("4", "-13/2", "163/2"), ("4", "-15/7", "-10")}
GOLDEN_BID_VERTEX_COMMON = {
    ("-1", "-39/7", "361/3"),
    ("19/5", "-15/7", "-23/3"),
    ("39/10", "-73/35", "-10"),
    ("4", "-233/112", "-89/8"),
    ("127/30", "-15/7", "-12"),
}


def as_rat_set(strings):
    return {tuple(rat(c) for c in v) for v in strings}
