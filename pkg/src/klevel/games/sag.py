"""Survival Auction Game.

Residents bid daily for a single water ration.  Winning restores health,
every further dry day costs as many health points as the length of the
current dry streak, and anyone at zero health is out.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Mapping, Sequence

from .g08a import parse_number

START_HEALTH = 8
MAX_HEALTH = 10
DAILY_INCOME = 100
WATER_GAIN = 2


@dataclass(frozen=True)
class Auction:
    day: int
    bids: tuple[int | None, ...]
    winner: int | None
    price: int
    clamped: tuple[int, ...] = ()


@dataclass(frozen=True)
class SAGState:
    day: int
    health: tuple[int, ...]
    balance: tuple[int, ...]
    streak: tuple[int, ...]
    alive: tuple[bool, ...]
    eliminated_on: tuple[int | None, ...]
    auctions: tuple[Auction, ...] = ()
    start_health: int = START_HEALTH
    max_health: int = MAX_HEALTH
    income: int = DAILY_INCOME
    gain: int = WATER_GAIN

    @classmethod
    def new(cls, num_agents: int, start_health: int = START_HEALTH, max_health: int = MAX_HEALTH,
            income: int = DAILY_INCOME, gain: int = WATER_GAIN) -> "SAGState":
        n = num_agents
        return cls(
            day=1,
            health=(start_health,) * n,
            balance=(0,) * n,
            streak=(0,) * n,
            alive=(True,) * n,
            eliminated_on=(None,) * n,
            start_health=start_health,
            max_health=max_health,
            income=income,
            gain=gain,
        )

    @property
    def num_agents(self) -> int:
        return len(self.health)

    def living(self) -> tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.alive) if a)


def sag_step(state: SAGState, bids: Mapping[int, int] | Sequence[int | None]) -> SAGState:
    """Advance one day.  Bids from eliminated agents are ignored."""
    if not any(state.alive):
        raise ValueError("no agent alive")
    if not isinstance(bids, Mapping):
        bids = {i: b for i, b in enumerate(bids) if b is not None}

    n = state.num_agents
    balance = [b + state.income if state.alive[i] else b for i, b in enumerate(state.balance)]
    placed: list[int | None] = [None] * n
    clamped = []
    for i in state.living():
        bid = int(bids.get(i, 0) or 0)
        if bid < 0:
            bid = 0
            clamped.append(i)
        if bid > balance[i]:
            bid = balance[i]
            clamped.append(i)
        placed[i] = bid

    top = max(b for b in placed if b is not None)
    leaders = [i for i, b in enumerate(placed) if b == top]
    winner = leaders[0] if len(leaders) == 1 else None
    price = top if winner is not None else 0

    health = list(state.health)
    streak = list(state.streak)
    alive = list(state.alive)
    eliminated = list(state.eliminated_on)
    for i in state.living():
        if i == winner:
            balance[i] -= price
            health[i] = min(state.max_health, health[i] + state.gain)
            streak[i] = 0
        else:
            streak[i] += 1
            health[i] -= streak[i]
            if health[i] <= 0:
                health[i] = 0
                alive[i] = False
                eliminated[i] = state.day

    auction = Auction(state.day, tuple(placed), winner, price, tuple(clamped))
    return replace(
        state,
        day=state.day + 1,
        health=tuple(health),
        balance=tuple(balance),
        streak=tuple(streak),
        alive=tuple(alive),
        eliminated_on=tuple(eliminated),
        auctions=state.auctions + (auction,),
    )


def survival_rounds(state: SAGState, max_rounds: int) -> list[int]:
    """Last day each agent was alive; survivors count the full game."""
    return [max_rounds if e is None else e for e in state.eliminated_on]


def sag_survival_round(record: Mapping[str, Any]) -> list[int]:
    """Per-agent survival round from a finished match record."""
    return list(record["outcome"]["survival_rounds"])


class SAGEngine:
    kind = "SAG"

    def __init__(self, max_rounds: int = 10, start_health: int = START_HEALTH,
                 max_health: int = MAX_HEALTH, income: int = DAILY_INCOME, gain: int = WATER_GAIN) -> None:
        self.max_rounds = max_rounds
        self.params = dict(start_health=start_health, max_health=max_health, income=income, gain=gain)

    def initial_state(self, num_agents: int, seed: int) -> SAGState:
        return SAGState.new(num_agents, **self.params)

    def movers(self, state: SAGState) -> tuple[int, ...]:
        return state.living()

    def active(self, state: SAGState) -> tuple[int, ...]:
        return state.living()

    def snapshot(self, state: SAGState, observer: int | None = None) -> dict:
        # health and balances are public; every bid is revealed after the day
        return {
            "day": state.day,
            "health": list(state.health),
            "balance": list(state.balance),
            "dry_streak": list(state.streak),
            "alive": list(state.alive),
            "income": state.income,
            "max_health": state.max_health,
            "start_health": state.start_health,
            "gain": state.gain,
            "past_auctions": [
                {"day": a.day, "bids": list(a.bids), "winner": a.winner, "price": a.price}
                for a in state.auctions
            ],
        }

    def coerce(self, state: SAGState, agent: int, action: Any) -> tuple[int, str | None]:
        if isinstance(action, (int, float)) and not isinstance(action, bool):
            bid = int(round(action))
            cap = state.balance[agent] + state.income
            if bid < 0:
                return 0, f"negative bid {action} set to 0"
            if bid > cap:
                return cap, f"bid {action} clamped to balance {cap}"
            if bid != action:
                return bid, f"bid {action} rounded to {bid}"
            return bid, None
        return 0, f"unparseable bid {action!r}; bid 0"

    def step(self, state: SAGState, actions: Mapping[int, int]) -> tuple[SAGState, dict]:
        new = sag_step(state, actions)
        a = new.auctions[-1]
        return new, {
            "day": a.day,
            "bids": list(a.bids),
            "winner": a.winner,
            "price": a.price,
            "clamped": list(a.clamped),
            "eliminated": [i for i in state.living() if not new.alive[i]],
            "health": list(new.health),
        }

    def is_over(self, state: SAGState) -> bool:
        return len(state.living()) <= 1

    def outcome(self, state: SAGState) -> dict:
        return {
            "survival_rounds": survival_rounds(state, self.max_rounds),
            "health": list(state.health),
            "balance": list(state.balance),
            "days_played": len(state.auctions),
            "spent": [sum(a.price for a in state.auctions if a.winner == i) for i in range(state.num_agents)],
        }

    def parse(self, text: str | None) -> float | None:
        return parse_number(text, 0, float("inf"))

    def decode_action(self, raw: Any) -> int:
        return int(raw)
