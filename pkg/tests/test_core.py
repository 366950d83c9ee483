import json
from fractions import Fraction

import pytest

from klevel.core import (BackendError, Decision, MatchConfig, canonical_json, config_from_dict, derive_seed,
                         replay_actions, run_match, stream)
from klevel.games import make_engine


class Fixed:
    def __init__(self, value):
        self.value = value
        self.seen_rounds = []

    def decide(self, view):
        self.seen_rounds.append(len(view.history[view.agent]))
        return Decision(self.value)


class Failing:
    def __init__(self, at_round):
        self.at_round = at_round

    def decide(self, view):
        if view.round == self.at_round:
            raise BackendError("endpoint down")
        return Decision(30)


class Peeker:
    """Records what the other agents had played when it was asked."""

    def __init__(self):
        self.seen = []

    def decide(self, view):
        self.seen.append({j: len(h) for j, h in view.history.items()})
        return Decision(25)


def test_config_validation():
    with pytest.raises(ValueError):
        MatchConfig("XYZ", 2)
    with pytest.raises(ValueError):
        MatchConfig("G08A", 1)
    with pytest.raises(ValueError):
        MatchConfig("G08A", 2, max_rounds=0)
    with pytest.raises(ValueError):
        MatchConfig("G08A", 2, agents=[{"role": "player"}, {"role": "player"}])
    cfg = MatchConfig("G08A", 3, temperature=0.5)
    assert config_from_dict(json.loads(canonical_json(cfg))) == cfg
    assert (MatchConfig("PD", 2).temperature, MatchConfig("PD", 2).top_p) == (0.7, 0.9)


def test_all_forty_no_points():
    rec = run_match(MatchConfig("G08A", 5, 10), make_engine("G08A"), [Fixed(40) for _ in range(5)])
    assert len(rec["rounds"]) == 10
    assert all(r["result"]["winners"] == [] for r in rec["rounds"])
    assert rec["outcome"]["scores"] == [0] * 5


def test_sag_early_termination():
    deciders = [Fixed(90)] + [Fixed(0) for _ in range(4)]
    rec = run_match(MatchConfig("SAG", 5, 10), make_engine("SAG", 10), deciders)
    assert len(rec["rounds"]) == 4
    assert rec["outcome"]["survival_rounds"] == [10, 4, 4, 4, 4]


def test_simultaneity_and_history_monotonicity():
    peekers = [Peeker() for _ in range(3)]
    run_match(MatchConfig("G08A", 3, 4), make_engine("G08A"), peekers)
    for p in peekers:
        for t, seen in enumerate(p.seen):
            assert set(seen.values()) == {t}


def test_backend_failure_aborts_and_flags():
    rec = run_match(MatchConfig("G08A", 2, 10), make_engine("G08A"), [Fixed(10), Failing(3)])
    assert rec["valid"] is False
    assert len(rec["rounds"]) == 2
    assert "round 3" in rec["flags"][0]


def test_invalid_action_flagged():
    rec = run_match(MatchConfig("G08A", 2, 2), make_engine("G08A"), [Fixed("??"), Fixed(500)])
    first = rec["rounds"][0]["actions"]
    assert first[0]["action"] == 50 and first[0]["flags"]
    assert first[1]["action"] == 100 and first[1]["flags"]


@pytest.mark.parametrize("game,n", [("G08A", 4), ("SAG", 3), ("PD", 2)])
def test_replay_closure(game, n):
    deciders = [Fixed({"G08A": 10 * (i + 1), "SAG": 20 * i, "PD": "CD"[i % 2]}[game]) for i in range(n)]
    rec = run_match(MatchConfig(game, n, 6), make_engine(game, 6), deciders)
    assert replay_actions(rec, make_engine(game, 6)) == [r["snapshot_after"] for r in rec["rounds"]]


def test_seed_streams():
    assert derive_seed(1, 2, "x") == derive_seed(1, 2, "x")
    assert derive_seed(1, 2, "x") != derive_seed(1, 3, "x")
    assert derive_seed(1, 0, 1) != derive_seed(2, 0, 1)
    assert stream(9, 0, 1).random() == stream(9, 0, 1).random()


def test_canonical_json_fractions():
    assert canonical_json({"b": Fraction(1, 3), "a": (1, 2)}) == '{"a":[1,2],"b":"1/3"}'


def test_determinism_bytes():
    def once():
        return canonical_json(run_match(MatchConfig("G08A", 3, 5, seed=4), make_engine("G08A"),
                                        [Fixed(c) for c in (3, 50, 99)]))
    assert once() == once()
