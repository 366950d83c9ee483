"""Independent re-statements of game rules, kept apart from the engines they check."""
from fractions import Fraction


def brute_force_winners(choices, coefficient=Fraction(4, 5)):
    """Independent oracle: integer arithmetic only, scanning every agent."""
    n = len(choices)
    if all(c == choices[0] for c in choices):
        return ()
    num, den = coefficient.numerator, coefficient.denominator
    total = sum(choices)
    # |c - num*total/(den*n)| scaled by den*n
    dist = [abs(c * n * den - num * total) for c in choices]
    best = min(dist)
    return tuple(i for i in range(n) if dist[i] == best)


def oracle_day(players, bids, income=100, gain=2, cap=10):
    """``players``: list of dicts with health/money/dry/alive.  Returns a new list and the winner."""
    out = [dict(p) for p in players]
    for p in out:
        if p["alive"]:
            p["money"] += income
    offers = {}
    for idx, p in enumerate(out):
        if p["alive"]:
            offers[idx] = max(0, min(int(bids[idx]), p["money"]))
    highest = max(offers.values())
    top = [idx for idx, b in offers.items() if b == highest]
    winner = top[0] if len(top) == 1 else None
    for idx, p in enumerate(out):
        if not p["alive"]:
            continue
        if idx == winner:
            p["money"] -= highest
            p["health"] = min(cap, p["health"] + gain)
            p["dry"] = 0
        else:
            p["dry"] += 1
            p["health"] -= p["dry"]
            if p["health"] <= 0:
                p["health"] = 0
                p["alive"] = False
    return out, winner
