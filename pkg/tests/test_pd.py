import pytest

from klevel.games.pd import PDEngine, PayoffMatrix, PDState, best_response, outcome_counts, parse_action, pd_payoff, pd_step


def test_payoff_lookup():
    assert pd_payoff("C", "C") == (3, 3)
    assert pd_payoff("D", "C") == (5, 0)
    assert pd_payoff("C", "D") == (0, 5)
    assert pd_payoff("D", "D") == (1, 1)
    with pytest.raises(ValueError):
        pd_payoff("X", "C")


@pytest.mark.parametrize("vals", [(3, 5, 1, 0), (5, 3, 1, 1), (6, 3, 1, 0.5)])
def test_malformed_matrix(vals):
    with pytest.raises(ValueError):
        PayoffMatrix(*vals)


def test_from_config():
    assert PayoffMatrix.from_config([4, 3, 1, 0]).temptation == 4
    assert PayoffMatrix.from_config({"temptation": 5, "reward": 3, "punishment": 1, "sucker": 0}) == PayoffMatrix()


def test_defection_dominates():
    assert best_response("C") == "D"
    assert best_response("D") == "D"


def test_cumulative_payoffs_and_counts():
    s = PDState()
    joint = [("C", "C"), ("D", "C"), ("D", "D")]
    for a, b in joint:
        s = pd_step(s, a, b)
    assert s.payoffs == (3 + 5 + 1, 3 + 0 + 1)
    assert outcome_counts(joint) == [[1, 0], [1, 1]]


def test_parse_and_fallback():
    assert parse_action('<answer>{"action": "D"}</answer>') == "D"
    assert parse_action('<answer>{"action": "defect"}</answer>') == "D"
    assert parse_action("I defect") is None
    eng = PDEngine()
    assert eng.coerce(eng.initial_state(2, 0), 0, None)[0] == "C"
    with pytest.raises(ValueError):
        eng.initial_state(3, 0)
