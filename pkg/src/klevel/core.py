"""Shared match vocabulary and the simultaneous-move scheduler.

A match is driven by a :class:`GameEngine` (pure state transitions) and one
decider per agent.  Each round every mover receives a :class:`View` built from
the same pre-round state, the joint action profile is applied, and the round
is appended to a JSON-serialisable match record.
"""
from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Mapping, Protocol, Sequence

import numpy as np

log = logging.getLogger(__name__)

GAME_KINDS = ("G08A", "SAG", "NEG", "PD")
DEFAULT_MAX_ROUNDS = 10
DEFAULT_TEMPERATURE = 0.7
DEFAULT_TOP_P = 0.9


class BackendError(RuntimeError):
    """A decision backend could not produce a response."""


class UnknownAgentError(KeyError):
    pass


@dataclass(frozen=True)
class AgentId:
    index: int
    label: str = ""

    def __str__(self) -> str:
        return self.label or f"agent{self.index}"


@dataclass
class Usage:
    input_tokens: int = 0
    output_tokens: int = 0
    calls: int = 0

    @property
    def total(self) -> int:
        return self.input_tokens + self.output_tokens

    def add(self, other: "Usage") -> "Usage":
        self.input_tokens += other.input_tokens
        self.output_tokens += other.output_tokens
        self.calls += other.calls
        return self

    def to_dict(self) -> dict:
        return {
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "total": self.total,
            "calls": self.calls,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Usage":
        return cls(int(d["input_tokens"]), int(d["output_tokens"]), int(d.get("calls", 0)))


@dataclass(frozen=True)
class EnvSnapshot:
    game_kind: str
    round: int
    public_state: Mapping[str, Any]


@dataclass
class Decision:
    """What a decider hands back for one round."""

    action: Any
    prediction: dict | None = None
    initial_action: Any = None
    usage: Usage = field(default_factory=Usage)
    flags: list[str] = field(default_factory=list)


@dataclass
class ActionRecord:
    agent: int
    round: int
    action: Any
    prediction: dict | None = None
    initial_action: Any = None
    usage: Usage = field(default_factory=Usage)
    flags: list[str] = field(default_factory=list)


# (public snapshot before the round, the agent's action in that round)
HistoryEntry = tuple[Mapping[str, Any], Any]
PublicHistory = dict[int, list[HistoryEntry]]


@dataclass
class View:
    """Everything an agent may legally see when deciding."""

    agent: int
    round: int
    snapshot: EnvSnapshot
    history: PublicHistory
    num_agents: int
    movers: tuple[int, ...]
    active: tuple[int, ...]
    rng: np.random.Generator | None = None
    # observer-free snapshot, used when simulating another agent's point of view
    public: Mapping[str, Any] | None = None


@dataclass
class MatchConfig:
    game_kind: str
    num_agents: int
    max_rounds: int = DEFAULT_MAX_ROUNDS
    seed: int = 0
    agents: list[dict] = field(default_factory=list)
    temperature: float = DEFAULT_TEMPERATURE
    top_p: float = DEFAULT_TOP_P
    game_params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.game_kind not in GAME_KINDS:
            raise ValueError(f"unknown game kind {self.game_kind!r}")
        if self.num_agents < 2:
            raise ValueError("a match needs at least two agents")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        players = [a for a in self.agents if a.get("role") == "player"]
        if len(players) > 1:
            raise ValueError("at most one agent may be marked 'player'")


class GameEngine(Protocol):
    kind: str

    def initial_state(self, num_agents: int, seed: int) -> Any: ...

    def movers(self, state: Any) -> tuple[int, ...]: ...

    def active(self, state: Any) -> tuple[int, ...]: ...

    def snapshot(self, state: Any, observer: int | None = None) -> dict: ...

    def coerce(self, state: Any, agent: int, action: Any) -> tuple[Any, str | None]: ...

    def step(self, state: Any, actions: Mapping[int, Any]) -> tuple[Any, dict]: ...

    def is_over(self, state: Any) -> bool: ...

    def outcome(self, state: Any) -> dict: ...


class Decider(Protocol):
    def decide(self, view: View) -> Decision: ...


# --------------------------------------------------------------------------
# randomness

def derive_seed(root: int, *keys: int | str) -> int:
    """64-bit seed for an independent stream addressed by ``keys``."""
    words = [int(root) & 0xFFFFFFFFFFFFFFFF]
    for k in keys:
        if isinstance(k, str):
            words.extend(k.encode())
        else:
            words.append(int(k))
    state = np.random.SeedSequence(words).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])


def stream(root: int, *keys: int | str) -> np.random.Generator:
    """Counter-addressed generator: adding agents never perturbs other streams."""
    return np.random.default_rng(derive_seed(root, *keys))


# --------------------------------------------------------------------------
# serialisation

def to_jsonable(obj: Any) -> Any:
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, Usage):
        return obj.to_dict()
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def canonical_json(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


# --------------------------------------------------------------------------
# the scheduler

class MatchRun:
    """A match in progress: engine state plus the record built so far."""

    def __init__(self, config: MatchConfig, engine: GameEngine) -> None:
        if engine.kind != config.game_kind:
            raise ValueError(f"engine {engine.kind} does not match config {config.game_kind}")
        self.config = config
        self.engine = engine
        self.state = engine.initial_state(config.num_agents, config.seed)
        self.rounds: list[dict] = []
        self.history: PublicHistory = {i: [] for i in range(config.num_agents)}
        self.usage: dict[int, Usage] = {i: Usage() for i in range(config.num_agents)}
        self.valid = True
        self.flags: list[str] = []

    @property
    def round(self) -> int:
        return len(self.rounds) + 1

    def finished(self) -> bool:
        return len(self.rounds) >= self.config.max_rounds or self.engine.is_over(self.state)

    def record(self) -> dict:
        usage = {str(i): u.to_dict() for i, u in self.usage.items()}
        return to_jsonable({
            "config": self.config,
            "rounds": self.rounds,
            "outcome": self.engine.outcome(self.state),
            "usage": usage,
            "valid": self.valid,
            "flags": self.flags,
        })


def public_view(run: MatchRun, observer: int | AgentId) -> tuple[EnvSnapshot, PublicHistory]:
    """Snapshot and public history as seen by ``observer``."""
    idx = observer.index if isinstance(observer, AgentId) else observer
    if not 0 <= idx < run.config.num_agents:
        raise UnknownAgentError(observer)
    snap = EnvSnapshot(run.config.game_kind, run.round, run.engine.snapshot(run.state, idx))
    history = {j: list(entries) for j, entries in run.history.items()}
    return snap, history


def _view(run: MatchRun, agent: int) -> View:
    snap, history = public_view(run, agent)
    return View(
        agent=agent,
        round=run.round,
        snapshot=snap,
        history=history,
        num_agents=run.config.num_agents,
        movers=tuple(run.engine.movers(run.state)),
        active=tuple(run.engine.active(run.state)),
        rng=stream(run.config.seed, agent, run.round, "decide"),
        public=run.engine.snapshot(run.state, None),
    )


def play_round(run: MatchRun, deciders: Sequence[Decider]) -> dict:
    """Decide simultaneously against one pre-round state, then apply."""
    movers = tuple(run.engine.movers(run.state))
    public_before = run.engine.snapshot(run.state, None)
    views = {i: _view(run, i) for i in movers}
    decisions: dict[int, Decision] = {}
    for i in movers:
        decisions[i] = deciders[i].decide(views[i])

    actions: dict[int, Any] = {}
    records: list[ActionRecord] = []
    for i in movers:
        d = decisions[i]
        action, flag = run.engine.coerce(run.state, i, d.action)
        flags = list(d.flags)
        if flag:
            flags.append(flag)
            log.debug("round %d agent %d: %s", run.round, i, flag)
        actions[i] = action
        records.append(ActionRecord(i, run.round, action, d.prediction, d.initial_action, d.usage, flags))
        run.usage[i].add(d.usage)

    new_state, result = run.engine.step(run.state, actions)
    run.state = new_state
    for rec in records:
        run.history[rec.agent].append((public_before, rec.action))

    entry = {
        "round": len(run.rounds) + 1,
        "snapshot": public_before,
        "actions": records,
        "result": result,
        "snapshot_after": run.engine.snapshot(new_state, None),
    }

    after = [(i, d) for i, d in enumerate(deciders) if hasattr(d, "end_round")]
    if after:
        reflections = {}
        for i, d in after:
            if i not in movers:
                continue
            snap, history = public_view(run, i)
            out = d.end_round(i, snap, history, result)
            if out is not None:
                reflections[str(i)] = out
                run.usage[i].add(out["usage"])
        if reflections:
            entry["reflections"] = reflections

    run.rounds.append(to_jsonable(entry))
    return run.rounds[-1]


def run_match(
    config: MatchConfig,
    engine: GameEngine,
    deciders: Sequence[Decider],
    on_event: Callable[[dict], None] | None = None,
) -> dict:
    """Play a match to completion and return its record as a plain dict."""
    if len(deciders) != config.num_agents:
        raise ValueError(f"expected {config.num_agents} deciders, got {len(deciders)}")
    run = MatchRun(config, engine)
    while not run.finished():
        try:
            entry = play_round(run, deciders)
        except BackendError as exc:
            run.valid = False
            run.flags.append(f"aborted in round {run.round}: {exc}")
            log.warning("match aborted: %s", exc)
            break
        if on_event is not None:
            on_event({"event": "round", **entry})
    return run.record()


def replay_actions(record: Mapping[str, Any], engine: GameEngine) -> list[dict]:
    """Re-apply recorded actions through ``engine``; returns post-round snapshots."""
    cfg = record["config"]
    state = engine.initial_state(cfg["num_agents"], cfg["seed"])
    snapshots = []
    for rnd in record["rounds"]:
        actions = {a["agent"]: engine.decode_action(a["action"]) for a in rnd["actions"]}
        state, _ = engine.step(state, actions)
        snapshots.append(to_jsonable(engine.snapshot(state, None)))
    return snapshots


def config_from_dict(d: Mapping[str, Any]) -> MatchConfig:
    names = {f.name for f in dataclasses.fields(MatchConfig)}
    return MatchConfig(**{k: v for k, v in d.items() if k in names})
