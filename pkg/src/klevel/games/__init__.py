"""Game engines: pure state transitions plus the engine adapters the scheduler drives."""
from __future__ import annotations

from typing import Any, Mapping

from .g08a import G08AEngine, G08AState, g08a_step
from .neg import NEGEngine, NEGState, NegMove, neg_score, neg_step
from .pd import PayoffMatrix, PDEngine, PDState, pd_payoff
from .sag import SAGEngine, SAGState, sag_step, sag_survival_round

__all__ = [
    "G08AEngine", "G08AState", "g08a_step",
    "SAGEngine", "SAGState", "sag_step", "sag_survival_round",
    "NEGEngine", "NEGState", "NegMove", "neg_step", "neg_score",
    "PDEngine", "PDState", "PayoffMatrix", "pd_payoff",
    "make_engine",
]


def make_engine(kind: str, max_rounds: int = 10, params: Mapping[str, Any] | None = None):
    params = dict(params or {})
    if kind == "G08A":
        return G08AEngine(**params)
    if kind == "SAG":
        return SAGEngine(max_rounds=max_rounds, **params)
    if kind == "NEG":
        if "pool" in params:
            params["pool"] = tuple(params["pool"])
        return NEGEngine(**params)
    if kind == "PD":
        return PDEngine(PayoffMatrix.from_config(params.get("matrix")))
    raise ValueError(f"unknown game {kind!r}")
