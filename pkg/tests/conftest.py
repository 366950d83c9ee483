import pytest

from klevel.core import MatchConfig, run_match
from klevel.games import make_engine
from klevel.gateway import ScriptedBackend, Transcript
from klevel.reasoning import MethodAgent


class Counting:
    """Scripted backend wrapper that counts calls and keeps every context."""

    def __init__(self, script="default"):
        self.inner = ScriptedBackend(script)
        self.contexts = []

    def complete(self, ctx):
        self.contexts.append(ctx)
        return self.inner.complete(ctx)

    @property
    def calls(self):
        return len(self.contexts)


def scripted_match(game, methods, rounds=10, seed=0, k=2, script="default", **agent_kw):
    """Run a match where agent i uses ``methods[i]`` over a scripted backend."""
    n = len(methods)
    transcript = Transcript()
    engine = make_engine(game, rounds)
    agents = [
        MethodAgent(m, ScriptedBackend(script, f"a{i}", transcript), game, n, rounds, k=k, **agent_kw)
        for i, m in enumerate(methods)
    ]
    cfg = MatchConfig(game, n, rounds, seed, [{"method": m, "label": m} for m in methods])
    return run_match(cfg, engine, agents), transcript


@pytest.fixture
def counting():
    return Counting()
