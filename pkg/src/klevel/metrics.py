"""Per-method metrics computed from finished match records."""
from __future__ import annotations

import math
from collections import defaultdict
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

from .games.pd import outcome_counts
from .stats import mean_std

Record = Mapping[str, Any]


class MetricError(ValueError):
    pass


def strategic_depth(choice: float, alpha: float) -> float:
    """Reasoning levels between ``choice`` and a uniform-random player's mean of 50."""
    if choice <= 0:
        raise MetricError(f"choice must be positive, got {choice}")
    if not 0 < alpha < 1:
        raise MetricError(f"alpha must lie in (0, 1), got {alpha}")
    return math.log(choice / 50) / math.log(alpha)


def player_index(record: Record) -> int:
    """Index of the agent marked ``role: player``; agent 0 when none is marked."""
    for i, a in enumerate(record["config"].get("agents", [])):
        if a.get("role") == "player":
            return i
    return 0


def _game(records: Sequence[Record], allowed: tuple[str, ...]) -> str:
    if not records:
        raise MetricError("no match records")
    games = {r["config"]["game_kind"] for r in records}
    if len(games) != 1:
        raise MetricError(f"records mix games {sorted(games)}")
    game = games.pop()
    if game not in allowed:
        raise MetricError(f"metric is defined for {allowed}, not {game}")
    return game


def _who(record: Record, player: int | None) -> int:
    return player_index(record) if player is None else player


def win_rate(records: Sequence[Record], player: int | None = None) -> float:
    """G0.8A: rounds won over rounds played.  NEG: games won over games, ties counting one half.

    A failed negotiation has no winner and counts zero for both sides.
    """
    game = _game(records, ("G08A", "NEG"))
    wins = 0.0
    total = 0
    for rec in records:
        me = _who(rec, player)
        if game == "G08A":
            for rnd in rec["rounds"]:
                wins += me in rnd["result"]["winners"]
                total += 1
        else:
            out = rec["outcome"]
            if out.get("status") == "agreed":
                wins += 1.0 if out["winner"] == me else 0.5 if out["winner"] is None else 0.0
            total += 1
    if total == 0:
        raise MetricError("records contain no rounds")
    return wins / total


def per_match_win_rates(records: Sequence[Record], player: int | None = None) -> list[float]:
    """One win rate per record, the sample that repeat-level std and t-tests use."""
    return [win_rate([r], player) for r in records]


def survival_round(record: Record, player: int | None = None) -> int:
    return int(record["outcome"]["survival_rounds"][_who(record, player)])


def avg_survival_round(records: Sequence[Record], player: int | None = None) -> float:
    _game(records, ("SAG",))
    return sum(survival_round(r, player) for r in records) / len(records)


def _actual(game: str, rnd: Mapping[str, Any], me: int) -> float | None:
    res = rnd["result"]
    if game == "G08A":
        return float(Fraction(str(res["average"])))
    bids = [b for i, b in enumerate(res["bids"]) if i != me and b is not None]
    return float(max(bids)) if bids else None


def prediction_deviations(records: Sequence[Record], player: int | None = None) -> list[list[float | None]]:
    """Per record, per round: |predicted - actual|, or None where nothing was predicted."""
    game = _game(records, ("G08A", "SAG"))
    out = []
    for rec in records:
        me = _who(rec, player)
        row: list[float | None] = []
        for rnd in rec["rounds"]:
            act = next((a for a in rnd["actions"] if a["agent"] == me), None)
            pred = (act or {}).get("prediction") or {}
            value = pred.get("value")
            actual = _actual(game, rnd, me)
            row.append(None if value is None or actual is None else abs(float(value) - actual))
        out.append(row)
    return out


def pred_acc(records: Sequence[Record], player: int | None = None) -> tuple[float, list[float | None]]:
    """Mean prediction deviation over all predicted rounds, and the per-round mean series."""
    devs = prediction_deviations(records, player)
    flat = [d for row in devs for d in row if d is not None]
    if not flat:
        labels = sorted({_label(r, _who(r, player)) for r in records})
        raise MetricError(f"no predictions logged for {', '.join(labels)}")
    width = max(len(row) for row in devs)
    series: list[float | None] = []
    for t in range(width):
        col = [row[t] for row in devs if t < len(row) and row[t] is not None]
        series.append(sum(col) / len(col) if col else None)
    return sum(flat) / len(flat), series


def tuning_range(records: Sequence[Record], player: int | None = None) -> list[float | None]:
    """Per-round mean |final - initial| over records that logged an initial action."""
    if not records:
        raise MetricError("no match records")
    by_round: dict[int, list[float]] = defaultdict(list)
    width = 0
    for rec in records:
        me = _who(rec, player)
        width = max(width, len(rec["rounds"]))
        for t, rnd in enumerate(rec["rounds"]):
            for a in rnd["actions"]:
                if a["agent"] == me and isinstance(a.get("initial_action"), (int, float)):
                    by_round[t].append(abs(float(a["action"]) - float(a["initial_action"])))
    if not by_round:
        labels = sorted({_label(r, _who(r, player)) for r in records})
        raise MetricError(f"no initial actions logged for {', '.join(labels)}")
    return [sum(by_round[t]) / len(by_round[t]) if by_round[t] else None for t in range(width)]


def first_round_choices(records: Iterable[Record], player: int | None = None) -> list[float]:
    out = []
    for rec in records:
        if rec["rounds"]:
            me = _who(rec, player)
            out.append(float(rec["rounds"][0]["result"]["choices"][me]))
    return out


def pd_tally(records: Sequence[Record]) -> list[list[int]]:
    """Joint-outcome counts over all rounds; rows are agent 0's C/D, columns agent 1's."""
    _game(records, ("PD",))
    joint = [tuple(r["result"]["joint"]) for rec in records for r in rec["rounds"]]
    return outcome_counts(joint)


def _label(record: Record, idx: int) -> str:
    agents = record["config"].get("agents", [])
    if idx < len(agents):
        a = agents[idx]
        return str(a.get("label") or a.get("method") or a.get("strategy") or f"agent {idx}")
    return f"agent {idx}"


def player_metric(records: Sequence[Record], player: int | None = None) -> tuple[str, list[float]]:
    """The headline per-repeat metric for the game: win rate, or survival round for SAG."""
    game = _game(records, ("G08A", "NEG", "SAG"))
    if game == "SAG":
        return "survival_round", [float(survival_round(r, player)) for r in records]
    return "win_rate", per_match_win_rates(records, player)


def summary(values: Sequence[float]) -> tuple[float, float]:
    return mean_std(values)
