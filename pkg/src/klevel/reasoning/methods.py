"""Reasoning pipelines: recursive K-level reasoning and six single-agent baselines.

Every pipeline is orchestration over a backend: it builds prompt contexts,
calls ``backend.complete`` and parses the reply with the game's extraction
grammar.  Usage of every call is summed into the returned decision.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Mapping, Sequence

from ..core import DEFAULT_TEMPERATURE, DEFAULT_TOP_P, BackendError, Decision, EnvSnapshot, Usage, View
from ..games import make_engine
from .context import DEFAULT_CATALOG, Catalog, PromptContext, action_text, player_name

METHODS = ("direct", "cot", "persona", "pcot", "refine", "reflect", "kr")
DISPLAY_NAMES = {
    "direct": "Direct", "cot": "CoT", "persona": "Persona", "pcot": "PCoT",
    "refine": "Refine", "reflect": "Reflect", "kr": "K-R",
}

_PREDICTION = re.compile(r"prediction\s*:\s*([^\n]+)", re.I)
_NUMBER = re.compile(r"-?\d+(?:\.\d+)?")


def call_count(k: int, m: int) -> int:
    """Backend calls for one K-level decision among ``m`` agents (no memoisation)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return 1 if k == 1 else 1 + (m - 1) * call_count(k - 1, m)


# --------------------------------------------------------------------------
# predictions

def summarise_anticipations(game: str, own: Any, anticipated: Mapping[int, Any]) -> float | None:
    """The scalar a method is scored on: predicted group average (G08A) or top opponent bid (SAG)."""
    vals = [float(v) for v in anticipated.values() if isinstance(v, (int, float))]
    if game == "G08A":
        if not vals or not isinstance(own, (int, float)):
            return None
        return (sum(vals) + float(own)) / (len(vals) + 1)
    if game == "SAG":
        return max(vals) if vals else None
    return None


def parse_prediction(game: str, text: str) -> Any:
    found = _PREDICTION.findall(text or "")
    if not found:
        return None
    raw = found[-1].strip()
    if game in ("G08A", "SAG"):
        nums = _NUMBER.findall(raw)
        return float(nums[0]) if nums else None
    if game == "PD":
        up = raw.upper()
        return "D" if "D" in up.split() or up.startswith("D") else ("C" if up.startswith("C") else None)
    return raw


def _scalar(a: Any) -> Any:
    return float(a) if isinstance(a, Fraction) else a


# --------------------------------------------------------------------------
# the agent

@dataclass
class _Calls:
    """Accumulates usage and flags over the calls of one decision."""

    usage: Usage = field(default_factory=Usage)
    flags: list[str] = field(default_factory=list)


class MethodAgent:
    """A decider that reasons through a backend with one of :data:`METHODS`.

    ``k`` applies to ``kr`` only.  ``kr_draft`` makes K-R additionally log a
    level-1 draft as ``initial_action`` (one extra call), which is what the
    tuning-range statistic needs; it is off by default so call counts follow
    the plain recursion.  ``memoize`` reuses identical anticipation contexts
    inside one decision.
    """

    def __init__(
        self,
        method: str,
        backend: Any,
        game: str,
        num_agents: int,
        max_rounds: int,
        k: int = 2,
        catalog: Catalog = DEFAULT_CATALOG,
        temperature: float = DEFAULT_TEMPERATURE,
        top_p: float = DEFAULT_TOP_P,
        kr_draft: bool = False,
        memoize: bool = False,
        parse: Callable[[str], Any] | None = None,
    ) -> None:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
        if k < 1:
            raise ValueError("thinking level k must be >= 1")
        self.method = method
        self.backend = backend
        self.game = game
        self.num_agents = num_agents
        self.max_rounds = max_rounds
        self.k = k
        self.catalog = catalog
        self.temperature = temperature
        self.top_p = top_p
        self.kr_draft = kr_draft
        self.memoize = memoize
        self.parse = parse or make_engine(game, max_rounds).parse
        self.memory: list[str] = []

    @property
    def label(self) -> str:
        name = DISPLAY_NAMES[self.method]
        return f"{name}(k={self.k})" if self.method == "kr" else name

    # ---- plumbing

    def context(self, template: str, agent: int, snapshot: Mapping[str, Any], history: Sequence,
                **kw: Any) -> PromptContext:
        return PromptContext(
            game=self.game, template=template, agent=agent, num_agents=self.num_agents,
            max_rounds=self.max_rounds, snapshot=snapshot, history=tuple(history),
            temperature=self.temperature, top_p=self.top_p, catalog=self.catalog, **kw,
        )

    def _call(self, ctx: PromptContext, acc: _Calls) -> str:
        out = self.backend.complete(ctx)
        acc.usage.add(out.usage)
        return out.text

    def _decide_once(self, ctx: PromptContext, acc: _Calls) -> tuple[Any, str]:
        text = self._call(ctx, acc)
        return self.parse(text), text

    # ---- entry points

    def decide(self, view: View) -> Decision:
        snap = view.snapshot.public_state
        history = view.history[view.agent]
        acc = _Calls()
        handler = getattr(self, f"_{self.method}")
        action, prediction, initial = handler(view, snap, history, acc)
        if action is None:
            acc.flags.append("unparseable reply; engine fallback applies")
        return Decision(_scalar(action), prediction, _scalar(initial), acc.usage, acc.flags)

    def end_round(self, agent: int, snap: EnvSnapshot, history: Mapping[int, list],
                  result: Mapping[str, Any]) -> dict | None:
        """Reflect only: summarise the finished round into one memory entry."""
        if self.method != "reflect":
            return None
        acc = _Calls()
        ctx = self.context("reflect.summarize", agent, snap.public_state, history[agent],
                           memory=tuple(self.memory),
                           extra={"outcome": outcome_text(self.game, agent, result)})
        try:
            text = self._call(ctx, acc).strip()
        except BackendError as exc:
            return {"text": None, "usage": acc.usage, "flags": [f"reflection failed: {exc}; memory unchanged"],
                    "memory_size": len(self.memory)}
        self.memory.append(text)
        return {"text": text, "usage": acc.usage, "flags": [], "memory_size": len(self.memory)}

    # ---- baselines

    def _direct(self, view, snap, history, acc):
        action, _ = self._decide_once(self.context("direct.decide", view.agent, snap, history), acc)
        return action, None, None

    def _cot(self, view, snap, history, acc):
        action, _ = self._decide_once(self.context("cot.decide", view.agent, snap, history), acc)
        return action, None, None

    def _persona(self, view, snap, history, acc):
        preamble = self.catalog.get(self.game, "persona.preamble")
        ctx = self.context("persona.decide", view.agent, snap, history, preamble=preamble)
        action, _ = self._decide_once(ctx, acc)
        return action, None, None

    def _pcot(self, view, snap, history, acc):
        action, text = self._decide_once(self.context("pcot.decide", view.agent, snap, history), acc)
        value = parse_prediction(self.game, text)
        if value is None:
            acc.flags.append("prediction missing from reply")
            return action, None, None
        return action, {"value": value, "source": "pcot"}, None

    def _refine(self, view, snap, history, acc):
        draft_text = self._call(self.context("refine.draft", view.agent, snap, history), acc)
        draft = self.parse(draft_text)
        try:
            critique = self._call(self.context("refine.critique", view.agent, snap, history,
                                               extra={"draft": draft_text}), acc)
            revised = self.parse(self._call(self.context(
                "refine.revise", view.agent, snap, history,
                extra={"draft": draft_text, "critique": critique}), acc))
        except BackendError as exc:
            acc.flags.append(f"refinement failed ({exc}); kept draft")
            return draft, None, draft
        if revised is None:
            acc.flags.append("revision unparseable; kept draft")
            return draft, None, draft
        return revised, None, draft

    def _reflect(self, view, snap, history, acc):
        ctx = self.context("reflect.decide", view.agent, snap, history, memory=tuple(self.memory))
        action, _ = self._decide_once(ctx, acc)
        return action, None, None

    # ---- K-level reasoning

    def _kr(self, view, snap, history, acc):
        public = view.public if view.public is not None else snap
        initial = None
        if self.kr_draft:
            initial, _ = self._decide_once(self.context("direct.decide", view.agent, snap, history), acc)
        cache: dict | None = {} if self.memoize else None
        action, anticipated = self.k_reasoning(view.agent, self.k, snap, public, view.history,
                                               view.active, acc, cache)
        prediction = None
        if anticipated is not None:
            prediction = {
                "anticipations": {str(j): _scalar(a) for j, a in anticipated.items()},
                "value": summarise_anticipations(self.game, action, anticipated),
                "source": "kr",
            }
        return action, prediction, initial

    def k_reasoning(self, agent: int, k: int, snapshot: Mapping[str, Any], public: Mapping[str, Any],
                    histories: Mapping[int, Sequence], active: Sequence[int], acc: _Calls,
                    cache: dict | None = None) -> tuple[Any, dict[int, Any] | None]:
        """Level-k action of ``agent``.

        Level 1 is a single call on the agent's own view.  Above that, every
        other active agent is simulated at level k-1 from the public snapshot
        and its own history, and the final call is conditioned on those
        anticipated moves.  Returns the action and the anticipations used.
        """
        if k == 1:
            action, _ = self._decide_once(self.context("direct.decide", agent, snapshot, histories[agent]), acc)
            return action, None
        anticipated: dict[int, Any] = {}
        for j in active:
            if j == agent:
                continue
            key = (j, k - 1)
            if cache is not None and key in cache:
                anticipated[j] = cache[key]
                continue
            a_j, _ = self.k_reasoning(j, k - 1, public, public, histories, active, acc, cache)
            if a_j is None:
                acc.flags.append(f"anticipation of {player_name(j)} at level {k - 1} unparseable")
            anticipated[j] = _scalar(a_j)
            if cache is not None:
                cache[key] = anticipated[j]
        ctx = self.context("kr.decide", agent, snapshot, histories[agent], anticipations=anticipated)
        action, _ = self._decide_once(ctx, acc)
        return action, anticipated


def outcome_text(game: str, agent: int, result: Mapping[str, Any]) -> str:
    """One-line account of a finished round from ``agent``'s side."""
    if game == "G08A":
        won = agent in result["winners"]
        return (f"The average was {float(Fraction(str(result['average']))):.2f} and the target "
                f"{float(Fraction(str(result['target']))):.2f}. You chose {result['choices'][agent]} "
                f"and {'won' if won else 'lost'} the round.")
    if game == "SAG":
        w = result["winner"]
        who = "Nobody got water (tie)." if w is None else (
            "You won the water." if w == agent else f"{player_name(w)} won the water for ${result['price']}.")
        return f"{who} Your health is now {result['health'][agent]}."
    if game == "PD":
        me, other = result["joint"][agent], result["joint"][1 - agent]
        return (f"You played {me}, the other player played {other}; "
                f"you scored {result['payoffs'][agent]}.")
    if game == "NEG":
        return f"{player_name(result['agent'])} made a {result['kind']} move; negotiation is {result['status']}."
    return action_text(game, result)
