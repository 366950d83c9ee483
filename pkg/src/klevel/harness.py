"""Experiment orchestration: one player against uniform opponents, repeated.

A run directory holds ``records.jsonl``, ``transcripts.jsonl``,
``matrix.csv``, ``depth.csv`` (G0.8A only) and ``manifest.json``; the
manifest hashes every other file so a run can be verified later.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from . import __version__
from .core import GAME_KINDS, MatchConfig, canonical_json, derive_seed, run_match
from .games import make_engine
from .gateway import BackendSpec, Transcript, make_backend, tally_report
from .metrics import first_round_choices, player_metric, strategic_depth
from .reasoning import DEFAULT_CATALOG, DISPLAY_NAMES, METHODS, MethodAgent
from .stats import mean_std
from .strategies import StrategyAgent, parse_strategy

log = logging.getLogger(__name__)

RECORDS, TRANSCRIPTS, MATRIX, DEPTH, MANIFEST = (
    "records.jsonl", "transcripts.jsonl", "matrix.csv", "depth.csv", "manifest.json")

_METHOD_TEMPLATES = {
    "direct": ["direct.decide"], "cot": ["cot.decide"], "persona": ["persona.preamble", "persona.decide"],
    "pcot": ["pcot.decide", "predict"], "refine": ["refine.draft", "refine.critique", "refine.revise"],
    "reflect": ["reflect.decide", "reflect.summarize"], "kr": ["direct.decide", "kr.decide"],
}
_TWO_PLAYER = ("NEG", "PD")


class SpecError(ValueError):
    pass


def agent_label(agent: Mapping[str, Any]) -> str:
    if agent.get("label"):
        return str(agent["label"])
    if "strategy" in agent:
        return parse_strategy(agent["strategy"]).label
    name = DISPLAY_NAMES[agent["method"]]
    return f"{name}(k={agent.get('k', 2)})" if agent["method"] == "kr" else name


@dataclass
class ExperimentSpec:
    game: str
    player: dict
    opponent: dict
    num_opponents: int = 4
    repeats: int = 10
    rounds: int = 10
    seed: int = 0
    seeds: list[int] | None = None
    backend: dict = field(default_factory=dict)
    game_params: dict = field(default_factory=dict)
    output_dir: str | None = None
    name: str | None = None
    temperature: float | None = None
    top_p: float | None = None

    def __post_init__(self) -> None:
        if self.game not in GAME_KINDS:
            raise SpecError(f"unknown game {self.game!r}")
        if self.repeats < 1:
            raise SpecError("repeats must be >= 1")
        if self.rounds < 1:
            raise SpecError("rounds must be >= 1")
        if self.game in _TWO_PLAYER and self.num_opponents != 1:
            raise SpecError(f"{self.game} is a two-agent game; num_opponents must be 1")
        if self.num_opponents < 1:
            raise SpecError("need at least one opponent")
        if self.seeds is not None and len(self.seeds) != self.repeats:
            raise SpecError("seeds must list one seed per repeat")
        for role, agent in (("player", self.player), ("opponent", self.opponent)):
            self._check_agent(role, agent)

    def _check_agent(self, role: str, agent: Mapping[str, Any]) -> None:
        if "strategy" in agent:
            if self.game != "G08A":
                raise SpecError(f"{role}: programmatic strategies exist for G08A only")
            parse_strategy(agent["strategy"])
            return
        method = agent.get("method")
        if method not in METHODS:
            raise SpecError(f"{role}: unknown method {method!r}")
        for name in _METHOD_TEMPLATES[method] + ["rules", "answer"]:
            if not DEFAULT_CATALOG.has(self.game, name):
                raise SpecError(f"{role}: template {name!r} missing for {self.game}")

    @property
    def num_agents(self) -> int:
        return self.num_opponents + 1

    def to_dict(self) -> dict:
        return asdict(self)

    def spec_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.to_dict()).encode()).hexdigest()

    def match_seed(self, repeat: int) -> int:
        return self.seeds[repeat] if self.seeds is not None else derive_seed(self.seed, "repeat", repeat)

    def backend_spec(self, agent: Mapping[str, Any], mode: str | None = None,
                     transcript: str | None = None) -> BackendSpec:
        cfg = {**self.backend, **agent.get("backend", {})}
        if mode:
            cfg["mode"] = mode
        if transcript:
            cfg["transcript"] = transcript
        for key in ("temperature", "top_p"):
            if getattr(self, key) is not None:
                cfg[key] = getattr(self, key)
        return BackendSpec.from_dict(cfg)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ExperimentSpec":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise SpecError(f"unknown spec fields {sorted(extra)}")
        return cls(**dict(d))

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentSpec":
        with Path(path).open(encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _agent_cfgs(spec: ExperimentSpec) -> list[dict]:
    out = [{**_public(spec.player), "role": "player", "label": agent_label(spec.player)}]
    for _ in range(spec.num_opponents):
        out.append({**_public(spec.opponent), "role": "opponent", "label": agent_label(spec.opponent)})
    return out


def _public(agent: Mapping[str, Any]) -> dict:
    # backend settings stay out of match records so replayed records are identical
    return {k: v for k, v in agent.items() if k != "backend"}


def _game_params(spec: ExperimentSpec, repeat: int) -> dict:
    params = dict(spec.game_params)
    if spec.game == "NEG":
        params.setdefault("first_mover", repeat % 2)
    return params


def _max_rounds(spec: ExperimentSpec, engine: Any) -> int:
    # a negotiation round is one move, so the move cap bounds the match
    return max(spec.rounds, engine.max_moves) if spec.game == "NEG" else spec.rounds


def run_match_for_repeat(spec: ExperimentSpec, repeat: int, mode: str | None = None,
                         replay_source: Transcript | None = None) -> tuple[dict, Transcript]:
    params = _game_params(spec, repeat)
    engine = make_engine(spec.game, spec.rounds, params)
    max_rounds = _max_rounds(spec, engine)
    seed = spec.match_seed(repeat)
    agents = _agent_cfgs(spec)
    config = MatchConfig(spec.game, spec.num_agents, max_rounds, seed, agents, game_params=params,
                         **{k: getattr(spec, k) for k in ("temperature", "top_p") if getattr(spec, k) is not None})
    transcript = Transcript()
    deciders = []
    for idx, cfg in enumerate(agents):
        source = spec.player if idx == 0 else spec.opponent
        if "strategy" in cfg:
            deciders.append(StrategyAgent(parse_strategy(cfg["strategy"]), seed, idx))
            continue
        backend = make_backend(spec.backend_spec(source, mode), f"r{repeat}/a{idx}", transcript, replay_source)
        deciders.append(MethodAgent(
            cfg["method"], backend, spec.game, spec.num_agents, max_rounds, k=int(cfg.get("k", 2)),
            temperature=config.temperature, top_p=config.top_p,
            kr_draft=bool(cfg.get("kr_draft", False)), memoize=bool(cfg.get("memoize", False)),
            parse=engine.parse,
        ))
    record = run_match(config, engine, deciders)
    record["repeat"] = repeat
    return record, transcript


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_experiment(spec: ExperimentSpec, out_dir: str | Path | None = None, mode: str | None = None,
                   parallel: int | None = None, transcripts: str | Path | None = None) -> dict:
    """Play every repeat, persist records and reports, and return the manifest."""
    out = Path(out_dir or spec.output_dir or "runs/experiment")
    effective_mode = mode or spec.backend.get("mode", "scripted")
    replay_source = None
    if effective_mode == "replay":
        path = transcripts or spec.backend.get("transcript")
        if not path or not Path(path).is_file():
            raise SpecError(f"replay transcript {path!r} does not exist")
        replay_source = Transcript.read_jsonl(path)
    elif effective_mode == "live":
        for agent in (spec.player, spec.opponent):
            if "method" in agent:
                spec.backend_spec(agent, mode).validate()
    if parallel is None:
        parallel = 1 if effective_mode == "live" else spec.repeats
    parallel = max(1, min(parallel, spec.repeats))

    def one(r: int) -> tuple[dict | None, Transcript | None, str | None]:
        try:
            rec, tr = run_match_for_repeat(spec, r, mode, replay_source)
            return rec, tr, None
        except Exception as exc:  # keep finished repeats when one fails
            log.exception("repeat %d failed", r)
            return None, None, f"repeat {r}: {type(exc).__name__}: {exc}"

    with ThreadPoolExecutor(max_workers=parallel) as pool:
        results = list(pool.map(one, range(spec.repeats)))

    records = [rec for rec, _, _ in results if rec is not None]
    failures = [err for _, _, err in results if err is not None]
    failures += [f"repeat {rec['repeat']}: {'; '.join(rec['flags'])}" for rec in records if not rec["valid"]]
    transcript = Transcript(r for _, tr, _ in results if tr is not None for r in tr.records)

    out.mkdir(parents=True, exist_ok=True)
    write_records(records, out / RECORDS)
    transcript.write_jsonl(out / TRANSCRIPTS)
    metric, values = ("none", [])
    if records and spec.game != "PD":
        metric, values = player_metric([r for r in records if r["valid"]] or records)
    manifest = {
        "version": __version__,
        "name": spec.name,
        "spec": spec.to_dict(),
        "spec_hash": spec.spec_hash(),
        "mode": effective_mode,
        "game": spec.game,
        "player": agent_label(spec.player),
        "opponent": agent_label(spec.opponent),
        "metric": metric,
        "values": values,
        "seeds": [spec.match_seed(r) for r in range(spec.repeats)],
        "complete": not failures and len(records) == spec.repeats,
        "failures": failures,
        "files": {},
    }
    if metric != "none":
        write_csv(build_matrix([manifest]), out / MATRIX)
    if spec.game == "G08A":
        write_csv(emit_depth_report(records), out / DEPTH)
    for name in (RECORDS, TRANSCRIPTS, MATRIX, DEPTH):
        if (out / name).exists():
            manifest["files"][name] = _sha256(out / name)
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


# --------------------------------------------------------------------------
# persistence

def write_records(records: Iterable[Mapping], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(canonical_json(rec) + "\n")
    return path


def read_records(path: str | Path) -> list[dict]:
    with Path(path).open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def read_manifest(run_dir: str | Path) -> dict:
    return json.loads((Path(run_dir) / MANIFEST).read_text(encoding="utf-8"))


def csv_text(rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def write_csv(rows: Sequence[Sequence[Any]], path: str | Path) -> Path:
    path = Path(path)
    path.write_text(csv_text(rows), encoding="utf-8")
    return path


def verify(run_dir: str | Path) -> list[str]:
    """Problems found in a run directory; empty when every hash matches."""
    run_dir = Path(run_dir)
    manifest = read_manifest(run_dir)
    problems = []
    spec = ExperimentSpec.from_dict(manifest["spec"])
    if spec.spec_hash() != manifest["spec_hash"]:
        problems.append("spec hash does not match the embedded spec")
    for name, digest in manifest["files"].items():
        path = run_dir / name
        if not path.exists():
            problems.append(f"{name}: missing")
        elif _sha256(path) != digest:
            problems.append(f"{name}: hash mismatch")
    return problems


# --------------------------------------------------------------------------
# reports

def _fmt(x: float) -> str:
    return f"{x:.4f}"


def build_matrix(manifests: Sequence[Mapping[str, Any]]) -> list[list[str]]:
    """Opponents down, players across, cells ``mean ± std`` over repeats, plus an Average row.

    The Average cell pools every repeat in the column.
    """
    if not manifests:
        return []
    games = {m["game"] for m in manifests}
    metrics = {m["metric"] for m in manifests}
    if len(games) != 1 or len(metrics) != 1:
        raise SpecError(f"cannot combine games {sorted(games)} / metrics {sorted(metrics)} in one matrix")
    players = list(dict.fromkeys(m["player"] for m in manifests))
    opponents = list(dict.fromkeys(m["opponent"] for m in manifests))
    cells: dict[tuple[str, str], list[float]] = {}
    for m in manifests:
        cells.setdefault((m["opponent"], m["player"]), []).extend(m["values"])

    def cell(values: Sequence[float]) -> str:
        if not values:
            return ""
        mu, sd = mean_std(values)
        return f"{_fmt(mu)} ± {_fmt(sd)}"

    rows = [[f"{metrics.pop()} (opponent \\ player)", *players]]
    for opp in opponents:
        rows.append([opp, *(cell(cells.get((opp, p), [])) for p in players)])
    rows.append(["Average", *(cell([v for o in opponents for v in cells.get((o, p), [])]) for p in players)])
    return rows


def load_anchors(name: str = "human_anchors.csv") -> list[dict]:
    text = (resources.files("klevel") / "data" / name).read_text(encoding="utf-8")
    return list(csv.DictReader(io.StringIO(text)))


def emit_depth_report(records: Sequence[Mapping[str, Any]], alpha: float = 0.8,
                      anchors: bool = True) -> list[list[str]]:
    """First-round mean choice and strategic depth per agent label, then the human anchors."""
    if not records:
        return []
    choices: dict[str, list[float]] = {}
    for rec in records:
        if rec["config"]["game_kind"] != "G08A":
            raise SpecError("depth report needs G08A records")
        for idx, agent in enumerate(rec["config"]["agents"]):
            label = agent.get("label") or f"agent {idx}"
            choices.setdefault(label, []).extend(first_round_choices([rec], idx))
    rows = [["source", "label", "mean_choice", "alpha", "strategic_depth"]]
    for label, xs in choices.items():
        if xs:
            mean = sum(xs) / len(xs)
            rows.append(["run", label, _fmt(mean), _fmt(alpha), _fmt(strategic_depth(mean, alpha))])
    if anchors:
        for a in load_anchors():
            al = float(Fraction(a["alpha"]))
            rows.append(["human", a["experiment"], a["mean_choice"], _fmt(al),
                         _fmt(strategic_depth(float(a["mean_choice"]), al))])
    return rows


def tally_rows(records: Sequence[Mapping[str, Any]]) -> list[list[Any]]:
    table = tally_report(records)
    if not table:
        return []
    header = list(table[0])
    return [header, *([row[h] for h in header] for row in table)]
