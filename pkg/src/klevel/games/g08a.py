"""Guessing 0.8 of the Average.

Every agent names an integer in [1, 100]; whoever is closest to 0.8 times
the group mean scores a point.  All-equal rounds award nothing.  Averages and
targets are kept as exact fractions so the distance comparison never drifts.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any, Mapping, Sequence

LOW, HIGH = 1, 100
DEFAULT_COEFFICIENT = Fraction(4, 5)
FIRST_ROUND_FALLBACK = 50


@dataclass(frozen=True)
class G08ARound:
    choices: tuple[int, ...]
    average: Fraction
    target: Fraction
    winners: tuple[int, ...]


@dataclass(frozen=True)
class G08AState:
    num_agents: int
    round: int = 1
    past_rounds: tuple[G08ARound, ...] = ()
    scores: tuple[int, ...] = ()
    coefficient: Fraction = DEFAULT_COEFFICIENT

    @classmethod
    def new(cls, num_agents: int, coefficient: Fraction = DEFAULT_COEFFICIENT) -> "G08AState":
        return cls(num_agents, scores=(0,) * num_agents, coefficient=Fraction(coefficient))

    @property
    def last_target(self) -> Fraction | None:
        return self.past_rounds[-1].target if self.past_rounds else None


def round_half_up(x: float | Fraction) -> int:
    return math.floor(x + Fraction(1, 2)) if isinstance(x, Fraction) else math.floor(x + 0.5)


def clamp_choice(x: float | Fraction) -> int:
    return min(HIGH, max(LOW, round_half_up(x)))


def g08a_step(
    state: G08AState, choices: Sequence[int]
) -> tuple[G08AState, tuple[int, ...], Fraction]:
    if len(choices) != state.num_agents:
        raise ValueError(f"expected {state.num_agents} choices, got {len(choices)}")
    for c in choices:
        if not (isinstance(c, int) and LOW <= c <= HIGH):
            raise ValueError(f"choice {c!r} outside [{LOW}, {HIGH}]")
    average = Fraction(sum(choices), len(choices))
    target = state.coefficient * average
    if len(set(choices)) == 1:
        winners: tuple[int, ...] = ()
    else:
        best = min(abs(c - target) for c in choices)
        winners = tuple(i for i, c in enumerate(choices) if abs(c - target) == best)
    scores = tuple(s + (1 if i in winners else 0) for i, s in enumerate(state.scores))
    rnd = G08ARound(tuple(choices), average, target, winners)
    new = replace(state, round=state.round + 1, past_rounds=state.past_rounds + (rnd,), scores=scores)
    return new, winners, target


_INT = re.compile(r"-?\d+(?:\.\d+)?")


def parse_number(text: str | None, low: float = LOW, high: float = HIGH) -> float | None:
    """Last number in range; failing that, the last number at all (caller clamps)."""
    if not text:
        return None
    found = [float(m) for m in _INT.findall(text)]
    if not found:
        return None
    in_range = [x for x in found if low <= x <= high]
    return in_range[-1] if in_range else found[-1]


class G08AEngine:
    kind = "G08A"

    def __init__(self, coefficient: Fraction | float | str = DEFAULT_COEFFICIENT) -> None:
        self.coefficient = Fraction(coefficient)

    def initial_state(self, num_agents: int, seed: int) -> G08AState:
        return G08AState.new(num_agents, self.coefficient)

    def movers(self, state: G08AState) -> tuple[int, ...]:
        return tuple(range(state.num_agents))

    active = movers

    def snapshot(self, state: G08AState, observer: int | None = None) -> dict:
        return {
            "round": state.round,
            "num_players": state.num_agents,
            "coefficient": state.coefficient,
            "scores": list(state.scores),
            "past_rounds": [
                {"choices": list(r.choices), "average": r.average, "target": r.target,
                 "winners": list(r.winners)}
                for r in state.past_rounds
            ],
        }

    def coerce(self, state: G08AState, agent: int, action: Any) -> tuple[int, str | None]:
        if isinstance(action, (int, float, Fraction)) and not isinstance(action, bool):
            value = clamp_choice(action)
            if value != action:
                return value, f"clamped {action} to {value}"
            return value, None
        if state.past_rounds:
            prev = state.past_rounds[-1].choices[agent]
            return prev, f"unparseable action {action!r}; repeated previous choice {prev}"
        return FIRST_ROUND_FALLBACK, f"unparseable action {action!r}; used {FIRST_ROUND_FALLBACK}"

    def step(self, state: G08AState, actions: Mapping[int, int]) -> tuple[G08AState, dict]:
        choices = [actions[i] for i in range(state.num_agents)]
        new, winners, target = g08a_step(state, choices)
        rnd = new.past_rounds[-1]
        return new, {"choices": choices, "average": rnd.average, "target": target,
                     "winners": list(winners)}

    def is_over(self, state: G08AState) -> bool:
        return False

    def outcome(self, state: G08AState) -> dict:
        return {"scores": list(state.scores), "rounds_played": len(state.past_rounds)}

    def parse(self, text: str | None) -> float | None:
        return parse_number(text)

    def decode_action(self, raw: Any) -> int:
        return int(raw)


def previous_target(
    history: Mapping[int, list], coefficient: Fraction = DEFAULT_COEFFICIENT
) -> Fraction | None:
    """Target of the last completed round, recomputed from everyone's public choices."""
    last = [entries[-1][1] for entries in history.values() if entries]
    if not last:
        return None
    return Fraction(coefficient) * Fraction(sum(last), len(last))

