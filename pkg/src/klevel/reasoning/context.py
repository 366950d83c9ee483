"""Prompt contexts and the template catalog they render through."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from string import Template
from typing import Any, Mapping

from ..core import DEFAULT_TEMPERATURE, DEFAULT_TOP_P
from ..games.neg import ITEMS

PLAYER_NAMES = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


def player_name(i: int) -> str:
    return f"Player {PLAYER_NAMES[i]}" if i < len(PLAYER_NAMES) else f"Player {i + 1}"


class Catalog:
    """Template files looked up as ``<game>/<method>.<step>.txt`` then ``common/<method>.<step>.txt``."""

    def __init__(self, root: str | Path | None = None) -> None:
        self.root = Path(root) if root else Path(str(resources.files("klevel") / "templates"))
        self._cache: dict[str, str] = {}

    def _read(self, rel: str) -> str | None:
        if rel not in self._cache:
            path = self.root / rel
            if not path.is_file():
                return None
            self._cache[rel] = path.read_text(encoding="utf-8").strip()
        return self._cache[rel]

    def get(self, game: str, name: str) -> str:
        text = self._read(f"{game.lower()}/{name}.txt")
        if text is None:
            text = self._read(f"common/{name}.txt")
        if text is None:
            raise KeyError(f"no template {name!r} for game {game}")
        return text

    def has(self, game: str, name: str) -> bool:
        try:
            self.get(game, name)
            return True
        except KeyError:
            return False


DEFAULT_CATALOG = Catalog()


@dataclass(frozen=True)
class PromptContext:
    """Everything one backend call is conditioned on.

    ``agent`` is the perspective the prompt is written from, which differs
    from the deciding agent during anticipation.  ``history`` is that agent's
    own public history.  ``anticipations`` maps other agents to predicted
    moves and is present only for prediction-conditioned steps.
    """

    game: str
    template: str
    agent: int
    num_agents: int
    max_rounds: int
    snapshot: Mapping[str, Any]
    history: tuple = ()
    anticipations: Mapping[int, Any] | None = None
    preamble: str | None = None
    memory: tuple[str, ...] = ()
    extra: Mapping[str, str] = field(default_factory=dict)
    temperature: float = DEFAULT_TEMPERATURE
    top_p: float = DEFAULT_TOP_P
    catalog: Catalog = field(default=DEFAULT_CATALOG, compare=False, repr=False)

    def messages(self) -> list[dict]:
        cat = self.catalog
        system = rules_text(self, cat)
        if self.preamble:
            system = f"{self.preamble}\n\n{system}"
        fields = {
            "state": lambda: state_text(self),
            "history": lambda: history_text(self),
            "anticipations": lambda: anticipation_text(self),
            "answer": lambda: cat.get(self.game, "answer"),
            "predict": lambda: cat.get(self.game, "predict"),
            "memory": lambda: "\n".join(f"- {m}" for m in self.memory) or "- (none yet)",
            "draft": lambda: self.extra.get("draft", ""),
            "critique": lambda: self.extra.get("critique", ""),
            "outcome": lambda: self.extra.get("outcome", ""),
        }
        body = Template(cat.get(self.game, self.template)).safe_substitute(_Lazy(fields))
        return [{"role": "system", "content": system}, {"role": "user", "content": body}]

    def prompt(self) -> str:
        return "\n\n".join(m["content"] for m in self.messages())


class _Lazy(dict):
    """Only renders the fields a template actually uses."""

    def __getitem__(self, key: str) -> str:
        return super().__getitem__(key)()


# --------------------------------------------------------------------------
# game-specific rendering

def _num(x: Any) -> str:
    if isinstance(x, str) and "/" in x:
        x = Fraction(x)
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{float(x):.2f}"
    if isinstance(x, float):
        return f"{x:g}"
    return str(x)


def rules_text(ctx: PromptContext, cat: Catalog) -> str:
    s = ctx.snapshot
    values: dict[str, Any] = {"num_players": ctx.num_agents, "max_rounds": ctx.max_rounds}
    if ctx.game == "G08A":
        coef = Fraction(str(s.get("coefficient", "4/5")))
        values["coefficient_pct"] = _num(coef * 100)
    elif ctx.game == "SAG":
        values.update(start_health=s.get("start_health", 8), max_health=s["max_health"],
                      income=s["income"], gain=s.get("gain", 2))
    elif ctx.game == "NEG":
        values["pool_text"] = ", ".join(f"{c} {name}" for c, name in zip(s["pool"], s["items"]))
        values["max_moves"] = s["max_moves"]
    elif ctx.game == "PD":
        values.update(s["payoff_matrix"])
    return Template(cat.get(ctx.game, "rules")).safe_substitute(values)


def state_text(ctx: PromptContext) -> str:
    s, me = ctx.snapshot, ctx.agent
    you = f"You are {player_name(me)}."
    if ctx.game == "G08A":
        lines = [f"{you} This is round {s['round']} of {ctx.max_rounds}. Current scores:"]
        lines += [f"  {player_name(i)}: {v}" for i, v in enumerate(s["scores"])]
        for r_i, r in enumerate(s["past_rounds"], start=1):
            picks = ", ".join(f"{player_name(i)}={c}" for i, c in enumerate(r["choices"]))
            winners = ", ".join(player_name(i) for i in r["winners"]) or "nobody"
            lines.append(f"Round {r_i}: {picks}; average {_num(r['average'])}, "
                         f"target {_num(r['target'])}, winner(s): {winners}.")
        return "\n".join(lines)
    if ctx.game == "SAG":
        lines = [f"{you} Today is day {s['day']} of {ctx.max_rounds}. You will receive "
                 f"${s['income']} before today's auction, so you can bid at most "
                 f"${s['balance'][me] + s['income']}."]
        for i in range(len(s["health"])):
            status = "alive" if s["alive"][i] else "eliminated"
            lines.append(f"  {player_name(i)}: health {s['health'][i]}, balance ${s['balance'][i]}, "
                         f"{s['dry_streak'][i]} day(s) without water, {status}")
        for a in s["past_auctions"]:
            bids = ", ".join(f"{player_name(i)}=${b}" for i, b in enumerate(a["bids"]) if b is not None)
            won = f"{player_name(a['winner'])} won for ${a['price']}" if a["winner"] is not None \
                else "tie, nobody got water"
            lines.append(f"Day {a['day']}: {bids}; {won}.")
        return "\n".join(lines)
    if ctx.game == "NEG":
        lines = [f"{you} This is move {s['move']} of at most {s['max_moves']}. "
                 f"Item order: {', '.join(s['items'])}."]
        if "your_utilities" in s:
            vals = ", ".join(f"{name}={u}" for name, u in zip(s["items"], s["your_utilities"]))
            lines.append(f"Your private values per item: {vals}.")
        else:
            lines.append("Your private values are not shown in this view.")
        for d in s["dialogue"]:
            lines.append(f"{player_name(d['agent'])}: {_neg_move_text(d)}")
        if s["pending"] is not None:
            lines.append(f"Pending proposal by {player_name(s['pending']['proposer'])}: "
                         f"{_alloc_text(s['pending']['allocation'], s['items'])}")
        return "\n".join(lines)
    if ctx.game == "PD":
        lines = [f"{you} This is round {s['round']} of {ctx.max_rounds}. "
                 f"Total points so far: {', '.join(f'{player_name(i)}={p}' for i, p in enumerate(s['payoffs']))}."]
        for r_i, (a, b) in enumerate(s["past_rounds"], start=1):
            lines.append(f"Round {r_i}: {player_name(0)}={a}, {player_name(1)}={b}")
        return "\n".join(lines)
    raise ValueError(ctx.game)


def _alloc_text(alloc: Any, items: list[str]) -> str:
    sides = []
    for who, counts in zip(("first party", "second party"), alloc):
        sides.append(f"{who} gets " + ", ".join(f"{c} {n}" for c, n in zip(counts, items)))
    return "; ".join(sides)


def _neg_move_text(d: Mapping[str, Any]) -> str:
    if d["kind"] == "propose":
        return f"proposes [{d['allocation']}] {d['text']}".strip()
    if d["kind"] == "message":
        return f"says: {d['text']}"
    return d["kind"].replace("_", " ") + (f" ({d['text']})" if d["text"] else "")


def action_text(game: str, action: Any) -> str:
    if action is None:
        return "unknown"
    if game == "NEG":
        if isinstance(action, Mapping):
            return _neg_move_text({"kind": action.get("kind"), "text": action.get("text", ""),
                                   "allocation": action.get("allocation")})
        if not hasattr(action, "kind"):
            return str(action)
        return _neg_move_text({"kind": action.kind, "text": action.text,
                               "allocation": None if action.allocation is None else
                               [list(x) for x in action.allocation]})
    return _num(action)


def history_text(ctx: PromptContext) -> str:
    if not ctx.history:
        return "You have no previous moves."
    moves = "; ".join(f"{i}: {action_text(ctx.game, a)}" for i, (_, a) in enumerate(ctx.history, start=1))
    return f"Your previous moves by round: {moves}."


def anticipation_text(ctx: PromptContext) -> str:
    if not ctx.anticipations:
        return "(no anticipated moves)"
    return "\n".join(f"  {player_name(j)}: {action_text(ctx.game, a)}"
                     for j, a in sorted(ctx.anticipations.items()))


def estimate_tokens(text: str) -> int:
    """Vendor-neutral proxy: one token per four characters, rounded up."""
    return math.ceil(len(text) / 4)
