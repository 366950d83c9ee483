"""Token accounting across finished matches, in kilo-tokens per game test."""
from __future__ import annotations

from collections import defaultdict
from typing import Iterable, Mapping


def agent_label(agent_cfg: Mapping) -> str:
    return str(agent_cfg.get("label") or agent_cfg.get("method") or agent_cfg.get("strategy") or "unknown")


def tally_report(records: Iterable[Mapping]) -> list[dict]:
    """Average input/output/total tokens per agent per match, grouped by game and method.

    Programmatic agents make no calls and are left out.  No records gives an
    empty table.
    """
    sums: dict[tuple[str, str], list[float]] = defaultdict(lambda: [0.0, 0.0, 0.0, 0])
    for rec in records:
        cfg = rec["config"]
        for idx, agent in enumerate(cfg["agents"]):
            usage = rec["usage"].get(str(idx))
            if not usage or not usage.get("calls"):
                continue
            s = sums[(cfg["game_kind"], agent_label(agent))]
            s[0] += usage["input_tokens"]
            s[1] += usage["output_tokens"]
            s[2] += usage["calls"]
            s[3] += 1
    rows = []
    for (game, method), (inp, out, calls, n) in sorted(sums.items()):
        rows.append({
            "game": game,
            "method": method,
            "samples": n,
            "calls": calls / n,
            "input_k": round(inp / n / 1000, 3),
            "output_k": round(out / n / 1000, 3),
            "total_k": round((inp + out) / n / 1000, 3),
        })
    return rows
