"""Programmatic G0.8A opponents that never adapt.

Six fixed patterns: a constant anchor, a decreasing arithmetic sequence, and
copying last round's target, each in a deterministic and a noisy flavour.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Mapping

import numpy as np

from .core import Decision, View, stream
from .games.g08a import LOW, HIGH, clamp_choice, previous_target

KINDS = ("ZeroLevelFix", "ZeroLevelVar", "MonoTrendFix", "MonoTrendVar", "LastBidsFix", "LastBidsVar")
DISPLAY_NAMES = {
    "ZeroLevelFix": "0-Level (Fix)",
    "ZeroLevelVar": "0-Level (Var)",
    "MonoTrendFix": "MonoTrend (Fix)",
    "MonoTrendVar": "MonoTrend (Var)",
    "LastBidsFix": "LastBids (Fix)",
    "LastBidsVar": "LastBids (Var)",
}
_BY_DISPLAY = {v: k for k, v in DISPLAY_NAMES.items()}

ANCHOR = 40
DEFAULT_DIFF = 3
VAR_DIFFS = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class StrategySpec:
    kind: str
    start: int = ANCHOR
    common_diff: int = DEFAULT_DIFF
    spread: float = 5.0
    # "variance": spread is a variance (sd = sqrt(spread)); "sd": spread is the sd
    spread_mode: str = "variance"

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown strategy {self.kind!r}")
        if self.spread <= 0:
            raise ValueError("spread must be positive")
        if self.spread_mode not in ("variance", "sd"):
            raise ValueError(f"spread_mode must be 'variance' or 'sd', got {self.spread_mode!r}")

    @property
    def sd(self) -> float:
        return math.sqrt(self.spread) if self.spread_mode == "variance" else self.spread

    @property
    def deterministic(self) -> bool:
        return self.kind.endswith("Fix") or self.kind == "MonoTrendVar"

    @property
    def label(self) -> str:
        return DISPLAY_NAMES[self.kind]


def parse_strategy(name: str | Mapping[str, Any]) -> StrategySpec:
    """Accepts ``"0-Level (Fix)"``, ``"ZeroLevelFix"`` or a dict with ``kind``/params."""
    if isinstance(name, Mapping):
        params = dict(name)
        kind = params.pop("kind", None) or params.pop("strategy")
        return replace(parse_strategy(kind), **params)
    kind = _BY_DISPLAY.get(name.strip(), name.strip())
    return StrategySpec(kind)


def deterministic_choice(spec: StrategySpec, round: int, prev_target: Fraction | None) -> Fraction:
    """Centre of the strategy's output before noise and clamping."""
    if spec.kind.startswith("ZeroLevel"):
        return Fraction(spec.start)
    if spec.kind.startswith("MonoTrend"):
        return Fraction(spec.start - (round - 1) * spec.common_diff)
    if prev_target is None:
        return Fraction(ANCHOR)
    return Fraction(prev_target)


def next_choice(
    spec: StrategySpec,
    history: Mapping[int, list],
    round: int,
    rng: np.random.Generator | None = None,
) -> int:
    """Choice in [1, 100] for ``round`` given the public history.

    ``MonoTrendVar`` expects ``spec.common_diff`` to already hold the agent's
    drawn difference; :class:`StrategyAgent` takes care of that.
    """
    if round < 1:
        raise ValueError("round must be >= 1")
    centre = deterministic_choice(spec, round, previous_target(history))
    if spec.kind in ("ZeroLevelVar", "LastBidsVar"):
        if rng is None:
            raise ValueError(f"{spec.kind} needs a random stream")
        return clamp_choice(float(rng.normal(float(centre), spec.sd)))
    return clamp_choice(centre)


def draw_common_diff(seed: int, agent: int) -> int:
    """Per-agent difference for MonoTrendVar, drawn once per match."""
    return int(stream(seed, agent, "monotrend-diff").integers(VAR_DIFFS[0], VAR_DIFFS[-1] + 1))


class StrategyAgent:
    """Decider wrapper around a programmatic strategy."""

    def __init__(self, spec: StrategySpec, seed: int = 0, agent: int = 0) -> None:
        if spec.kind == "MonoTrendVar":
            spec = replace(spec, common_diff=draw_common_diff(seed, agent))
        self.spec = spec

    def decide(self, view: View) -> Decision:
        return Decision(next_choice(self.spec, view.history, view.round, view.rng))


__all__ = [
    "KINDS", "DISPLAY_NAMES", "StrategySpec", "StrategyAgent", "parse_strategy",
    "next_choice", "deterministic_choice", "draw_common_diff", "LOW", "HIGH",
]
