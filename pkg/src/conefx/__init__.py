"""Exact bid/ask pricing for options on finite event trees with
proportional transaction costs between several assets.

The core objects are exact rational polyhedra (``conefx.geometry``),
currency-market models on event trees (``conefx.market``), exercise
policies and stopping times (``conefx.policies``), the seller and buyer
pricing recursions with their hedges and dual certificates
(``conefx.seller``, ``conefx.buyer``), and an independent LP-based
verification layer (``conefx.oracle``).  ``conefx.service`` wraps it all in
a FastAPI app and ``conefx.cli`` is a thin command-line client.
"""

from .buyer import bid_price, build_buyer_sets, buyer_dual, buyer_hedge, verify_buyer_hedge
from .market import EventTree, ExchangeProcess, check_weak_na, frictionless_to_pi
from .policies import (
    ExercisePolicy,
    RandomisedStoppingTime,
    StoppingTime,
    make_american,
    make_bermudan,
    make_european,
    make_random_expiry,
)
from .seller import (
    ask_price,
    build_seller_sets,
    seller_dual,
    seller_hedge,
    verify_seller_hedge,
)

__all__ = [
    "EventTree",
    "ExchangeProcess",
    "ExercisePolicy",
    "RandomisedStoppingTime",
    "StoppingTime",
    "ask_price",
    "bid_price",
    "build_buyer_sets",
    "build_seller_sets",
    "buyer_dual",
    "buyer_hedge",
    "check_weak_na",
    "frictionless_to_pi",
    "make_american",
    "make_bermudan",
    "make_european",
    "make_random_expiry",
    "seller_dual",
    "seller_hedge",
    "verify_buyer_hedge",
    "verify_seller_hedge",
]

__version__ = "0.1.0"
