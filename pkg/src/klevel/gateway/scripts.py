"""Deterministic stand-ins for a language model, addressed by script id.

Each script maps a :class:`PromptContext` to response text in the same
format a live model is asked to use, so the parsing path is exercised too.
The ``default`` script plays every game with simple heuristics: at level 1
it follows the obvious trend, and whenever anticipated opponent moves are in
the context it best-responds to them.
"""
from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Callable

from ..games.g08a import clamp_choice
from ..games.pd import PayoffMatrix, best_response
from ..reasoning.context import PromptContext

Script = Callable[[PromptContext], str]
_REGISTRY: dict[str, Script] = {}


def register(name: str) -> Callable[[Script], Script]:
    def deco(fn: Script) -> Script:
        _REGISTRY[name] = fn
        return fn
    return deco


def get_script(name: str) -> Script:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown script {name!r}; known: {sorted(_REGISTRY)}") from None


def script_names() -> list[str]:
    return sorted(_REGISTRY)


def _step(ctx: PromptContext) -> str:
    return ctx.template.split(".", 1)[1]


def _last_number(text: str) -> float | None:
    from ..games.g08a import parse_number
    return parse_number(text, 0, math.inf)


# --------------------------------------------------------------------------
# G0.8A

def _g08a_prev_target(ctx: PromptContext) -> Fraction | None:
    past = ctx.snapshot["past_rounds"]
    return Fraction(str(past[-1]["target"])) if past else None


def _g08a_best_response(ctx: PromptContext, others: list[float]) -> int:
    # choose x minimising |x - c (x + S) / M|  =>  x = c S / (M - c)
    coef = Fraction(str(ctx.snapshot.get("coefficient", "4/5")))
    m = len(others) + 1
    s = Fraction(sum(Fraction(o).limit_denominator(1000) for o in others))
    return clamp_choice(coef * s / (m - coef))


def g08a_level1(ctx: PromptContext) -> int:
    prev = _g08a_prev_target(ctx)
    return 40 if prev is None else clamp_choice(prev)


def _g08a(ctx: PromptContext) -> str:
    step = _step(ctx)
    if step == "summarize":
        return "Lesson: the target keeps falling, so choose below last round's target."
    if step == "critique":
        draft = _last_number(ctx.extra.get("draft", "")) or 40
        return (f"The answer {draft:g} ignores that everyone else is also adjusting downward. "
                f"A choice about 10% lower would be closer to the likely target.")
    if step == "revise":
        draft = _last_number(ctx.extra.get("draft", "")) or 40
        return f"Following the feedback I lower my number.\nChoice: {clamp_choice(draft * 0.9)}"
    if ctx.anticipations:
        others = [a for a in ctx.anticipations.values() if a is not None]
        choice = _g08a_best_response(ctx, others) if others else g08a_level1(ctx)
        return f"Given the anticipated choices, the best response is {choice}.\nChoice: {choice}"
    if ctx.template == "pcot.decide":
        past = ctx.snapshot["past_rounds"]
        pred = float(Fraction(str(past[-1]["target"]))) if past else 50.0
        return (f"Prediction: {pred:.2f}\nIf the average is about {pred:.2f}, the target is about "
                f"{0.8 * pred:.2f}.\nChoice: {clamp_choice(0.8 * pred)}")
    choice = g08a_level1(ctx)
    if ctx.template == "cot.decide":
        return f"Step 1: look at the last target. Step 2: stay close to it.\nChoice: {choice}"
    return f"Choice: {choice}"


# --------------------------------------------------------------------------
# survival auction

def _sag_cap(ctx: PromptContext) -> int:
    s = ctx.snapshot
    return s["balance"][ctx.agent] + s["income"]


def sag_level1(ctx: PromptContext) -> int:
    s, me = ctx.snapshot, ctx.agent
    need = s["max_health"] - s["health"][me]
    # the agent index breaks ties between otherwise identical bidders
    return min(_sag_cap(ctx), 10 * need + 5 * s["dry_streak"][me] + 10 + me)


def _sag(ctx: PromptContext) -> str:
    step = _step(ctx)
    cap = _sag_cap(ctx)
    if step == "summarize":
        return "Lesson: keep enough money to outbid the others when health is low."
    if step == "critique":
        return "The bid may be too low if others are thirsty; consider whether health justifies more."
    if step == "revise":
        draft = _last_number(ctx.extra.get("draft", "")) or 0
        return f"Bid: {min(cap, int(draft) + 10)}"
    if ctx.anticipations:
        others = [a for a in ctx.anticipations.values() if a is not None]
        top = int(max(others)) if others else 0
        health = ctx.snapshot["health"][ctx.agent]
        bid = min(cap, top + 1) if health <= 7 or top + 1 <= cap // 2 else min(cap, sag_level1(ctx))
        return f"The highest anticipated bid is {top}.\nBid: {bid}"
    if ctx.template == "pcot.decide":
        past = ctx.snapshot["past_auctions"]
        others = [b for i, b in enumerate(past[-1]["bids"]) if i != ctx.agent and b is not None] if past else []
        pred = max(others, default=20)
        return f"Prediction: {pred}\nBid: {min(cap, pred + 1)}"
    return f"Bid: {sag_level1(ctx)}"


# --------------------------------------------------------------------------
# negotiation

def _neg(ctx: PromptContext) -> str:
    s = ctx.snapshot
    step = _step(ctx)
    if step == "summarize":
        return "Lesson: ask for the items I value most and concede the rest."
    if step == "critique":
        return "Make sure the proposal keeps the items you value most."
    utils = s.get("your_utilities")
    pool = s["pool"]
    if utils is None:
        # simulated from outside: assume an even split is proposed
        mine = [p // 2 + p % 2 for p in pool]
        alloc = [mine, [p - m for p, m in zip(pool, mine)]]
        return "<move>" + json.dumps({"kind": "propose", "text": "even split", "allocation": alloc}) + "</move>"
    total = sum(u * p for u, p in zip(utils, pool))
    pending = s["pending"]
    if pending is not None and pending["proposer"] != ctx.agent:
        mine = pending["allocation"][ctx.agent]
        value = sum(u * c for u, c in zip(utils, mine))
        threshold = 0.5 if s["move"] < s["max_moves"] // 2 else 0.3
        if value >= threshold * total:
            return '<move>{"kind": "accept", "text": "deal"}</move>'
    lead = "Prediction: the other side will ask for its favourite item\n" if ctx.template == "pcot.decide" else ""
    ranked = sorted(range(len(pool)), key=lambda k: -utils[k])
    mine = [0] * len(pool)
    for rank, k in enumerate(ranked):
        mine[k] = pool[k] if rank == 0 else pool[k] // 2
    theirs = [p - m for p, m in zip(pool, mine)]
    alloc = [mine, theirs] if ctx.agent == 0 else [theirs, mine]
    return lead + "<move>" + json.dumps({"kind": "propose", "text": "my offer", "allocation": alloc}) + "</move>"


# --------------------------------------------------------------------------
# prisoner's dilemma

def _pd(ctx: PromptContext) -> str:
    step = _step(ctx)
    if step == "summarize":
        return "Lesson: watch whether the other player keeps cooperating."
    if step == "critique":
        return "Consider what the other player gains by defecting."
    if ctx.anticipations:
        matrix = PayoffMatrix(**ctx.snapshot["payoff_matrix"])
        others = [a for a in ctx.anticipations.values() if a in ("C", "D")]
        expected = "D" if others.count("D") * 2 >= len(others) and others else "C"
        action = best_response(expected, matrix)
        return f"The other player is expected to play {expected}.\n<answer>{{\"action\": \"{action}\"}}</answer>"
    if ctx.template == "pcot.decide":
        return 'Prediction: C\n<answer>{"action": "C"}</answer>'
    return '<answer>{"action": "C"}</answer>'


@register("default")
def default_script(ctx: PromptContext) -> str:
    return {"G08A": _g08a, "SAG": _sag, "NEG": _neg, "PD": _pd}[ctx.game](ctx)


@register("echo-40")
def echo_40(ctx: PromptContext) -> str:
    return "40"


@register("pd-level")
def pd_level(ctx: PromptContext) -> str:
    """Level-1 cooperates; any prediction-conditioned step best-responds."""
    return _pd(ctx)
