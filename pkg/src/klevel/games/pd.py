"""Iterated Prisoner's Dilemma with a configurable payoff matrix."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from typing import Any, Iterable, Mapping

COOPERATE, DEFECT = "C", "D"
ACTIONS = (COOPERATE, DEFECT)


@dataclass(frozen=True)
class PayoffMatrix:
    temptation: int = 5
    reward: int = 3
    punishment: int = 1
    sucker: int = 0

    def __post_init__(self) -> None:
        t, r, p, s = self.temptation, self.reward, self.punishment, self.sucker
        if not (t > r > p > s):
            raise ValueError(f"payoffs must satisfy T > R > P > S, got {(t, r, p, s)}")
        if not (2 * r > t + s):
            raise ValueError(f"payoffs must satisfy 2R > T + S, got {(t, r, p, s)}")

    @classmethod
    def from_config(cls, cfg: Mapping[str, int] | Iterable[int] | None) -> "PayoffMatrix":
        if cfg is None:
            return cls()
        if isinstance(cfg, Mapping):
            return cls(**{k: int(v) for k, v in cfg.items()})
        return cls(*(int(v) for v in cfg))


def pd_payoff(a1: str, a2: str, matrix: PayoffMatrix = PayoffMatrix()) -> tuple[int, int]:
    if a1 not in ACTIONS or a2 not in ACTIONS:
        raise ValueError(f"actions must be C or D, got {(a1, a2)}")
    m = matrix
    table = {
        (COOPERATE, COOPERATE): (m.reward, m.reward),
        (COOPERATE, DEFECT): (m.sucker, m.temptation),
        (DEFECT, COOPERATE): (m.temptation, m.sucker),
        (DEFECT, DEFECT): (m.punishment, m.punishment),
    }
    return table[(a1, a2)]


def best_response(opponent: str, matrix: PayoffMatrix = PayoffMatrix()) -> str:
    return max(ACTIONS, key=lambda a: (pd_payoff(a, opponent, matrix)[0], a == COOPERATE))


@dataclass(frozen=True)
class PDState:
    round: int = 1
    joint: tuple[tuple[str, str], ...] = ()
    payoffs: tuple[int, int] = (0, 0)
    matrix: PayoffMatrix = PayoffMatrix()


def pd_step(state: PDState, a1: str, a2: str) -> PDState:
    p1, p2 = pd_payoff(a1, a2, state.matrix)
    return replace(state, round=state.round + 1, joint=state.joint + ((a1, a2),),
                   payoffs=(state.payoffs[0] + p1, state.payoffs[1] + p2))


def outcome_counts(joint: Iterable[tuple[str, str]]) -> list[list[int]]:
    """2x2 tally; rows = first agent's action (C, D), columns = second agent's."""
    counts = [[0, 0], [0, 0]]
    for a1, a2 in joint:
        counts[ACTIONS.index(a1)][ACTIONS.index(a2)] += 1
    return counts


_TAG = re.compile(r"<answer>(.*?)</answer>", re.S | re.I)


def parse_action(text: str | None) -> str | None:
    """Last ``<answer>{"action": "C"|"D"}</answer>`` block."""
    if not text:
        return None
    for block in reversed(_TAG.findall(text)):
        try:
            obj = json.loads(block)
        except json.JSONDecodeError:
            continue
        action = str(obj.get("action", "")).strip().upper()[:1] if isinstance(obj, dict) else ""
        if action in ACTIONS:
            return action
    return None


class PDEngine:
    kind = "PD"

    def __init__(self, matrix: PayoffMatrix | None = None) -> None:
        self.matrix = matrix or PayoffMatrix()

    def initial_state(self, num_agents: int, seed: int) -> PDState:
        if num_agents != 2:
            raise ValueError("prisoner's dilemma is a two-agent game")
        return PDState(matrix=self.matrix)

    def movers(self, state: PDState) -> tuple[int, ...]:
        return (0, 1)

    active = movers

    def snapshot(self, state: PDState, observer: int | None = None) -> dict:
        m = state.matrix
        return {
            "round": state.round,
            "payoff_matrix": {"temptation": m.temptation, "reward": m.reward,
                              "punishment": m.punishment, "sucker": m.sucker},
            "past_rounds": [list(j) for j in state.joint],
            "payoffs": list(state.payoffs),
        }

    def coerce(self, state: PDState, agent: int, action: Any) -> tuple[str, str | None]:
        if isinstance(action, str) and action.strip().upper() in ACTIONS:
            return action.strip().upper(), None
        return COOPERATE, f"invalid action {action!r}; cooperated"

    def step(self, state: PDState, actions: Mapping[int, str]) -> tuple[PDState, dict]:
        new = pd_step(state, actions[0], actions[1])
        p = pd_payoff(actions[0], actions[1], state.matrix)
        return new, {"joint": [actions[0], actions[1]], "payoffs": list(p)}

    def is_over(self, state: PDState) -> bool:
        return False

    def outcome(self, state: PDState) -> dict:
        return {"payoffs": list(state.payoffs), "counts": outcome_counts(state.joint)}

    def parse(self, text: str | None) -> str | None:
        return parse_action(text)

    def decode_action(self, raw: Any) -> str:
        return str(raw)
