import math
import random

import pytest
from hypothesis import given, strategies as st

from klevel.metrics import (MetricError, avg_survival_round, pd_tally, per_match_win_rates, player_index, pred_acc,
                            strategic_depth, tuning_range, win_rate)


def g08a_record(winner_sets, preds=None, averages=None, initial=None, finals=None, player_role=0):
    agents = [{"label": "P", "role": "player"} if i == player_role else {"label": "O"} for i in range(3)]
    rounds = []
    for t, w in enumerate(winner_sets):
        act = {"agent": 0, "action": (finals or [30] * len(winner_sets))[t],
               "prediction": None if preds is None else {"value": preds[t]},
               "initial_action": None if initial is None else initial[t]}
        rounds.append({"actions": [act], "result": {"winners": w, "average": (averages or [0] * 99)[t],
                                                    "choices": [30, 40, 50]}})
    return {"config": {"game_kind": "G08A", "agents": agents}, "rounds": rounds, "outcome": {}}


def test_strategic_depth_fixtures():
    assert strategic_depth(47.29, 0.8) == pytest.approx(0.25, abs=0.01)
    assert strategic_depth(32.79, 0.8) == pytest.approx(1.89, abs=0.01)
    assert strategic_depth(35.13, 2 / 3) == pytest.approx(0.87, abs=0.01)
    assert strategic_depth(23.08, 2 / 3) == pytest.approx(1.91, abs=0.01)
    assert strategic_depth(50, 0.3) == 0
    assert strategic_depth(40, 0.8) == pytest.approx(1.0)


@pytest.mark.parametrize("choice,alpha", [(0, 0.8), (-3, 0.8), (40, 1.0), (40, 0.0)])
def test_strategic_depth_domain(choice, alpha):
    with pytest.raises(MetricError):
        strategic_depth(choice, alpha)


@given(st.floats(0.01, 100), st.floats(0.01, 0.99))
def test_depth_round_trip(choice, alpha):
    assert 50 * alpha ** strategic_depth(choice, alpha) == pytest.approx(choice, rel=1e-9)


@given(st.floats(0.01, 99.0), st.floats(0.001, 1.0), st.floats(0.01, 0.99))
def test_depth_decreasing(choice, step, alpha):
    assert strategic_depth(choice + step, alpha) < strategic_depth(choice, alpha)


def test_g08a_win_rate():
    wins = [[0]] * 65 + [[1]] * 35
    recs = [g08a_record(wins[i * 10:(i + 1) * 10]) for i in range(10)]
    assert win_rate(recs) == pytest.approx(0.65)
    assert win_rate([g08a_record([[1], [2]])]) == 0.0
    with pytest.raises(MetricError):
        win_rate([])


def test_win_rate_permutation_and_duplication():
    rng = random.Random(1)
    recs = [g08a_record([[rng.randint(0, 2)] for _ in range(10)]) for _ in range(6)]
    base = win_rate(recs)
    shuffled = recs[:]
    rng.shuffle(shuffled)
    assert win_rate(shuffled) == base
    assert win_rate(recs + recs) == base
    assert per_match_win_rates(recs) == [win_rate([r]) for r in recs]


def neg_record(status, winner, player=0):
    return {"config": {"game_kind": "NEG", "agents": [{"role": "player"}, {}]}, "rounds": [],
            "outcome": {"status": status, "winner": winner}}


def test_neg_win_rate_draws_half():
    recs = [neg_record("agreed", 0), neg_record("agreed", None), neg_record("failed", None), neg_record("agreed", 1)]
    assert win_rate(recs) == pytest.approx(1.5 / 4)
    assert win_rate(recs, player=1) == pytest.approx(1.5 / 4)


def test_mixed_games_rejected():
    with pytest.raises(MetricError):
        win_rate([g08a_record([[0]]), neg_record("agreed", 0)])


def sag_record(survival):
    return {"config": {"game_kind": "SAG", "agents": [{"role": "player"}]}, "outcome": {"survival_rounds": [survival]},
            "rounds": []}


def test_survival():
    assert avg_survival_round([sag_record(s) for s in (10, 10, 8)]) == pytest.approx(9.3333, abs=1e-4)
    assert avg_survival_round([sag_record(10)] * 3) == 10.0
    assert avg_survival_round([sag_record(1)] * 2) == 1.0
    with pytest.raises(MetricError):
        avg_survival_round([])


def test_pred_acc():
    rec = g08a_record([[0], [0]], preds=[30, 25], averages=["28", "24"])
    mean, series = pred_acc([rec])
    assert mean == 1.5 and series == [2.0, 1.0]
    exact = g08a_record([[0], [0]], preds=[28, 24], averages=["28", "24"])
    assert pred_acc([exact])[0] == 0.0
    with pytest.raises(MetricError, match="P"):
        pred_acc([g08a_record([[0], [0]])])


def test_pred_acc_sag_uses_top_opponent_bid():
    rec = {"config": {"game_kind": "SAG", "agents": [{"role": "player", "label": "PCoT"}, {}, {}]},
           "rounds": [{"actions": [{"agent": 0, "prediction": {"value": 40}}],
                       "result": {"bids": [90, 35, None]}}],
           "outcome": {}}
    assert pred_acc([rec]) == (5.0, [5.0])


def test_tuning_range():
    rec = g08a_record([[0], [0]], initial=[40, 30], finals=[32, 30])
    assert tuning_range([rec]) == [8.0, 0.0]
    with pytest.raises(MetricError):
        tuning_range([g08a_record([[0]])])
    big = g08a_record([[0]], initial=[40], finals=[20])
    small = g08a_record([[0]], initial=[40], finals=[36])
    assert tuning_range([big])[0] > tuning_range([small])[0]


def test_pd_tally():
    rec = {"config": {"game_kind": "PD"}, "rounds": [{"result": {"joint": j}} for j in (["D", "D"], ["C", "D"])]}
    assert pd_tally([rec]) == [[0, 1], [0, 1]]


def test_player_index():
    assert player_index(g08a_record([], player_role=2)) == 2
    assert player_index({"config": {"agents": [{}, {}]}}) == 0
