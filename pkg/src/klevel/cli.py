"""Command line: run, record, replay, report, verify."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .gateway import ConfigError
from .harness import (DEPTH, MATRIX, RECORDS, ExperimentSpec, SpecError, build_matrix, emit_depth_report,
                      read_manifest, read_records, run_experiment, tally_rows, verify, write_csv)


def _load_spec(args: argparse.Namespace) -> ExperimentSpec:
    spec = ExperimentSpec.load(args.spec)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed, seeds=None)
    return spec


def _run(args: argparse.Namespace, mode: str | None) -> int:
    spec = _load_spec(args)
    manifest = run_experiment(spec, out_dir=args.out, mode=mode, parallel=args.parallel,
                              transcripts=getattr(args, "transcripts", None))
    out = args.out or spec.output_dir or "runs/experiment"
    status = "complete" if manifest["complete"] else "INCOMPLETE"
    print(f"{status}: {len(manifest['seeds'])} repeats of {manifest['player']} vs "
          f"{manifest['opponent']} in {manifest['game']} -> {out}")
    for f in manifest["failures"]:
        print(f"  failure: {f}")
    if manifest["values"]:
        mean = sum(manifest["values"]) / len(manifest["values"])
        print(f"  {manifest['metric']}: {mean:.4f}")
    return 0 if manifest["complete"] else 1


def cmd_run(args: argparse.Namespace) -> int:
    return _run(args, args.mode)


def cmd_record(args: argparse.Namespace) -> int:
    return _run(args, args.mode or "live")


def cmd_replay(args: argparse.Namespace) -> int:
    return _run(args, "replay")


def cmd_report(args: argparse.Namespace) -> int:
    manifests = [read_manifest(d) for d in args.runs]
    records = [r for d in args.runs for r in read_records(Path(d) / RECORDS)]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scored = [m for m in manifests if m["metric"] != "none"]
    if scored:
        write_csv(build_matrix(scored), out / MATRIX)
    g08a = [r for r in records if r["config"]["game_kind"] == "G08A"]
    if g08a:
        write_csv(emit_depth_report(g08a, alpha=args.alpha), out / DEPTH)
    write_csv(tally_rows(records), out / "tokens.csv")
    print(f"report for {len(manifests)} run(s) written to {out}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    bad = 0
    for d in args.runs:
        problems = verify(d)
        print(f"{d}: {'ok' if not problems else 'FAILED'}")
        for p in problems:
            print(f"  {p}")
        bad += bool(problems)
    return 1 if bad else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="klevel", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def experiment(name: str, help: str, modes: bool = True) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help)
        sp.add_argument("--spec", required=True, help="experiment spec (JSON)")
        sp.add_argument("--out", help="output directory (defaults to the spec's output_dir)")
        sp.add_argument("--seed", type=int, help="override the spec's root seed")
        sp.add_argument("--parallel", type=int, help="concurrent matches (live mode defaults to 1)")
        if modes:
            sp.add_argument("--mode", choices=("live", "scripted", "replay"), help="override backend mode")
            sp.add_argument("--transcripts", help="transcript file for replay mode")
        return sp

    experiment("run", "run an experiment").set_defaults(func=cmd_run)
    experiment("record", "run against a live endpoint and keep the transcripts").set_defaults(func=cmd_record)
    rp = experiment("replay", "re-run from recorded transcripts, no network", modes=False)
    rp.add_argument("--transcripts", required=True)
    rp.set_defaults(func=cmd_replay)

    rep = sub.add_parser("report", help="combine run directories into matrix, depth and token tables")
    rep.add_argument("runs", nargs="+")
    rep.add_argument("--out", required=True)
    rep.add_argument("--alpha", type=float, default=0.8)
    rep.set_defaults(func=cmd_report)

    ver = sub.add_parser("verify", help="check run directories against their manifests")
    ver.add_argument("runs", nargs="+")
    ver.set_defaults(func=cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SpecError, ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
