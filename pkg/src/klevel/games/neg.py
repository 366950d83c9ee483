"""Two-party negotiation over a shared item pool with private valuations.

Agents alternate moves.  A move is a free-text message, a proposal that
splits the pool, an acceptance of the other side's pending proposal, or a
walk-away.  Only proposals and acceptances carry mechanics; messages are
opaque to the engine.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from typing import Any, Mapping

import numpy as np

from ..core import stream

ITEMS = ("peppers", "cherries", "strawberries")
DEFAULT_POOL = (2, 2, 2)
UTILITY_RANGE = (1, 10)
DEFAULT_MAX_MOVES = 20
MOVE_KINDS = ("message", "propose", "accept", "walk_away")

Allocation = tuple[tuple[int, ...], tuple[int, ...]]


@dataclass(frozen=True)
class NegMove:
    kind: str
    text: str = ""
    allocation: Allocation | None = None


@dataclass(frozen=True)
class NegEntry:
    agent: int
    move: NegMove
    flag: str | None = None


@dataclass(frozen=True)
class NEGState:
    pool: tuple[int, ...]
    utilities: tuple[tuple[int, ...], ...]
    first_mover: int = 0
    moves: int = 0
    max_moves: int = DEFAULT_MAX_MOVES
    dialogue: tuple[NegEntry, ...] = ()
    pending: tuple[int, Allocation] | None = None
    status: str = "open"
    allocation: Allocation | None = None

    @property
    def to_move(self) -> int:
        return (self.first_mover + self.moves) % 2


def draw_utilities(seed: int, num_items: int = len(ITEMS), low: int = UTILITY_RANGE[0],
                   high: int = UTILITY_RANGE[1]) -> tuple[tuple[int, ...], ...]:
    out = []
    for agent in range(2):
        rng = stream(seed, agent, "neg-utility")
        out.append(tuple(int(x) for x in rng.integers(low, high + 1, size=num_items)))
    return tuple(out)


def is_partition(allocation: Any, pool: tuple[int, ...]) -> bool:
    try:
        a, b = allocation
        return (
            len(a) == len(pool) == len(b)
            and all(isinstance(x, (int, np.integer)) and x >= 0 for x in (*a, *b))
            and all(x + y == p for x, y, p in zip(a, b, pool))
        )
    except (TypeError, ValueError):
        return False


def neg_step(state: NEGState, move: NegMove) -> tuple[NEGState, str | None]:
    """Apply the current mover's move.  Returns the new state and a fallback flag."""
    if state.status != "open":
        raise ValueError(f"negotiation already {state.status}")
    mover = state.to_move
    flag = None
    if move.kind not in MOVE_KINDS:
        flag = f"unknown move kind {move.kind!r}; treated as message"
        move = NegMove("message", move.text)
    if move.kind == "accept" and (state.pending is None or state.pending[0] == mover):
        flag = "accept without a pending proposal from the other side; treated as message"
        move = NegMove("message", move.text)
    if move.kind == "propose" and not is_partition(move.allocation, state.pool):
        flag = f"proposal {move.allocation!r} does not partition the pool; treated as message"
        move = NegMove("message", move.text)

    pending, status, allocation = state.pending, state.status, state.allocation
    if move.kind == "propose":
        alloc = tuple(tuple(int(x) for x in side) for side in move.allocation)  # type: ignore[union-attr]
        pending = (mover, alloc)
        move = NegMove("propose", move.text, alloc)
    elif move.kind == "accept":
        allocation = state.pending[1]  # type: ignore[index]
        status = "agreed"
    elif move.kind == "walk_away":
        status = "failed"

    moves = state.moves + 1
    if status == "open" and moves >= state.max_moves:
        status = "failed"
    new = replace(state, moves=moves, dialogue=state.dialogue + (NegEntry(mover, move, flag),),
                  pending=pending, status=status, allocation=allocation)
    return new, flag


def neg_score(state: NEGState) -> dict:
    if state.status == "open":
        raise ValueError("negotiation still open")
    if state.status == "failed" or state.allocation is None:
        return {"winner": None, "utilities": [0, 0]}
    utils = [sum(c * u for c, u in zip(state.allocation[i], state.utilities[i])) for i in range(2)]
    winner = 0 if utils[0] > utils[1] else 1 if utils[1] > utils[0] else None
    return {"winner": winner, "utilities": utils}


_TAG = re.compile(r"<move>(.*?)</move>", re.S | re.I)


def parse_move(text: str | None) -> NegMove | None:
    """Extract the last ``<move>{json}</move>`` block."""
    if not text:
        return None
    blocks = _TAG.findall(text)
    if not blocks:
        return None
    try:
        obj = json.loads(blocks[-1])
    except json.JSONDecodeError:
        return None
    return decode_move(obj)


def decode_move(obj: Any) -> NegMove | None:
    if isinstance(obj, NegMove):
        return obj
    if not isinstance(obj, Mapping) or "kind" not in obj:
        return None
    alloc = obj.get("allocation")
    if alloc is not None:
        try:
            alloc = tuple(tuple(side) for side in alloc)
        except TypeError:
            alloc = None
    return NegMove(str(obj["kind"]), str(obj.get("text", "")), alloc)


class NEGEngine:
    kind = "NEG"

    def __init__(self, pool: tuple[int, ...] = DEFAULT_POOL, max_moves: int = DEFAULT_MAX_MOVES,
                 first_mover: int = 0, utilities: tuple[tuple[int, ...], ...] | None = None,
                 utility_range: tuple[int, int] = UTILITY_RANGE) -> None:
        self.pool = tuple(pool)
        self.max_moves = max_moves
        self.first_mover = first_mover
        self.utilities = utilities
        self.utility_range = tuple(utility_range)

    def initial_state(self, num_agents: int, seed: int) -> NEGState:
        if num_agents != 2:
            raise ValueError("negotiation is a two-agent game")
        utils = self.utilities or draw_utilities(seed, len(self.pool), *self.utility_range)
        return NEGState(self.pool, tuple(tuple(u) for u in utils), self.first_mover, 0, self.max_moves)

    def movers(self, state: NEGState) -> tuple[int, ...]:
        return (state.to_move,)

    def active(self, state: NEGState) -> tuple[int, ...]:
        return (0, 1)

    def snapshot(self, state: NEGState, observer: int | None = None) -> dict:
        snap = {
            "move": state.moves + 1,
            "items": list(ITEMS[: len(state.pool)]),
            "pool": list(state.pool),
            "to_move": state.to_move,
            "max_moves": state.max_moves,
            "status": state.status,
            "pending": None if state.pending is None else
            {"proposer": state.pending[0], "allocation": [list(s) for s in state.pending[1]]},
            "dialogue": [
                {"agent": e.agent, "kind": e.move.kind, "text": e.move.text,
                 "allocation": None if e.move.allocation is None else [list(s) for s in e.move.allocation]}
                for e in state.dialogue
            ],
        }
        if observer is not None:
            snap["your_utilities"] = list(state.utilities[observer])
        return snap

    def coerce(self, state: NEGState, agent: int, action: Any) -> tuple[NegMove, str | None]:
        move = decode_move(action)
        if move is None:
            return NegMove("message", "" if action is None else str(action)), "unparseable move; no-op message"
        return move, None

    def step(self, state: NEGState, actions: Mapping[int, Any]) -> tuple[NEGState, dict]:
        move = actions[state.to_move]
        new, flag = neg_step(state, move)
        return new, {"agent": state.to_move, "kind": new.dialogue[-1].move.kind, "flag": flag,
                     "status": new.status}

    def is_over(self, state: NEGState) -> bool:
        return state.status != "open"

    def outcome(self, state: NEGState) -> dict:
        out = {"status": state.status, "allocation": state.allocation, "utilities_private": state.utilities}
        if state.status != "open":
            out.update(neg_score(state))
        return out

    def parse(self, text: str | None) -> NegMove | None:
        return parse_move(text)

    def decode_action(self, raw: Any) -> NegMove:
        move = decode_move(raw)
        if move is None:
            raise ValueError(f"not a move: {raw!r}")
        return move
