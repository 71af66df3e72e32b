"""Command-line entry point.

Exit codes: 0 success, 1 a check failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import planner, protocol
from .errors import (
    NoConvergence,
    OpLogFormatError,
    SizeMismatch,
    SpatialError,
    SwarmTopoError,
    TreeError,
    EventLogFormatError,
)
from .experiment import TrialConfig, run_trial, summarize, sweep, sweep_csv
from .ops import entry_to_line
from .spatial import RangeConfig, render_svg
from .tree import parse_tree_text

OK, FAIL, USAGE = 0, 1, 2

DEFAULTS = {
    "n": 15,
    "protocol": "line",
    "seed": 0,
    "trials": None,
    "max_rounds": None,
    "out": "out",
    "range": {},
    "record_every": 50,
}


class UsageError(Exception):
    pass


def load_config(args: argparse.Namespace) -> dict:
    """JSON config file (if any) overlaid by explicitly given flags."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(data) - set(DEFAULTS) - {"ns", "protocols", "seeds", "jobs"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(data)
    for key in ("n", "protocol", "seed", "trials", "max_rounds", "out", "record_every"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    try:
        cfg["range_config"] = RangeConfig.from_dict(cfg.get("range") or {})
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    return cfg


def _write_trial(out: Path, res, with_trajectory: bool = True) -> str:
    tc = res.config
    stem = f"{tc.protocol.value}_n{tc.n}_s{tc.seed}"
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{stem}_metrics.csv").write_text(res.series.to_csv())
    (out / f"{stem}_events.log").write_text(protocol.write_event_log(res.trace))
    if with_trajectory:
        (out / f"{stem}_trajectory.csv").write_text(res.recorder.to_csv())
        (out / f"{stem}_paths.svg").write_text(render_svg(res.recorder, res.final_tree))
    return stem


def _trial_problems(res) -> list[str]:
    out = []
    if not res.shape_ok:
        out.append("final tree has the wrong shape")
    if not res.audit_ok:
        out.append("locality audit failed")
    if res.max_edge >= res.config.range.r_range:
        out.append(f"edge reached {res.max_edge:.4f}")
    if min(res.series.column("lambda2_tree")) <= 0:
        out.append("tree lambda2 dropped to zero")
    return out


def cmd_run(args) -> int:
    cfg = load_config(args)
    if cfg["trials"] is None:
        cfg["trials"] = 1
    if cfg["n"] < 2 or cfg["trials"] < 1:
        raise UsageError("need n >= 2 and trials >= 1")
    out = Path(cfg["out"])
    status = OK
    for i in range(cfg["trials"]):
        seed = cfg["seed"] + i
        tc = TrialConfig(cfg["n"], cfg["protocol"], seed, cfg["max_rounds"],
                         cfg["range_config"], cfg["record_every"])
        try:
            res = run_trial(tc)
        except (NoConvergence, SpatialError) as exc:
            print(f"seed {seed}: FAIL {type(exc).__name__}: {exc}")
            status = FAIL
            continue
        stem = _write_trial(out, res)
        problems = _trial_problems(res)
        verdict = "ok" if not problems else "FAIL " + "; ".join(problems)
        print(f"seed {seed}: {verdict} rounds={res.rounds} "
              f"lambda2={res.lambda2_final:.6f} coverage={res.coverage_initial:.3f}"
              f"->{res.coverage_final:.3f} files={out / stem}_*")
        if problems:
            status = FAIL
    return status


def _read_tree(path: str):
    try:
        return parse_tree_text(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def cmd_plan(args) -> int:
    a, b = _read_tree(args.initial), _read_tree(args.target)
    p = planner.plan(a, b)
    text = planner.plan_to_text(p)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    print(f"steps: {len(p)}", file=sys.stderr if not args.out else sys.stdout)
    return OK


def cmd_replay(args) -> int:
    try:
        text = Path(args.plan).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {args.plan}: {exc}") from None
    p, recorded = planner.parse_plan_text(text)
    try:
        final, log = planner.replay_log(p)
    except SwarmTopoError as exc:
        print(f"FAIL {exc}")
        return FAIL
    status = OK
    for i, (entry, (removed, added)) in enumerate(zip(log, recorded)):
        if entry.edges_removed != removed or entry.edges_added != added:
            print(f"FAIL step {i}: recorded edge change differs from replay")
            status = FAIL
        if entry.max_hops() > 2:
            print(f"FAIL step {i}: rewire spans {entry.max_hops()} hops")
            status = FAIL
    if final != p.target:
        print("FAIL replay does not end on the target tree")
        status = FAIL
    if status == OK:
        print(f"ok: {len(p)} steps reach the target")
    return status


def cmd_audit(args) -> int:
    try:
        text = Path(args.log).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {args.log}: {exc}") from None
    if not text.strip():
        print("ok: empty log")
        return OK
    trace = protocol.parse_event_log(text)
    rep = protocol.audit_trace(trace)
    for m in rep.far_messages:
        print(f"round {m.round}: message {m.kind.value} {m.frm}->{m.to} crosses more than one hop")
    for rnd, e in rep.far_rewires:
        print(f"round {rnd}: rewire beyond two hops: {entry_to_line(e)}")
    for rnd in rep.overlapping:
        print(f"round {rnd}: operations share robots")
    for rnd in rep.broken:
        print(f"round {rnd}: edge changes break the tree")
    if rep.ok:
        print(f"ok: {len(trace.rounds)} rounds clean")
        return OK
    return FAIL


def cmd_sweep(args) -> int:
    cfg = load_config(args)
    ns = args.ns or cfg.get("ns") or [15, 30, 60]
    protos = args.protocols or cfg.get("protocols") or ["line", "star"]
    if args.trials is None and "seeds" in cfg:
        seeds = list(cfg["seeds"])
    else:
        count = cfg["trials"] if cfg["trials"] is not None else 5
        seeds = list(range(cfg["seed"], cfg["seed"] + count))
    if not seeds:
        raise UsageError("need at least one seed")
    jobs = args.jobs or cfg.get("jobs") or 1
    out = Path(cfg["out"])
    try:
        results = sweep(ns, protos, seeds, cfg["range_config"], cfg["max_rounds"], jobs)
    except (NoConvergence, SpatialError) as exc:
        print(f"FAIL {type(exc).__name__}: {exc}")
        return FAIL
    status = OK
    for res in results:
        _write_trial(out, res, with_trajectory=args.trajectories)
        problems = _trial_problems(res)
        if problems:
            tc = res.config
            print(f"{tc.protocol.value} n={tc.n} seed={tc.seed}: FAIL " + "; ".join(problems))
            status = FAIL
    table = sweep_csv(summarize(results))
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.csv").write_text(table)
    sys.stdout.write(table)
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="swarmtopo",
                                 description="Local tree rewiring for robot swarms")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with defaults for the flags below")
        p.add_argument("--seed", type=int)
        p.add_argument("--max-rounds", dest="max_rounds", type=int)
        p.add_argument("--out")
        p.add_argument("--record-every", dest="record_every", type=int,
                       help="control steps between trajectory samples")

    p = sub.add_parser("run", help="run trials with spatial execution and arrangement")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--protocol", choices=["line", "star"])
    p.add_argument("--trials", type=int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plan", help="plan a rewiring between two tree files")
    p.add_argument("initial")
    p.add_argument("target")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("replay", help="replay and verify a plan file")
    p.add_argument("plan")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("audit", help="check an event log for non-local messages or rewires")
    p.add_argument("log")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("sweep", help="run an n x protocol x seed grid and summarize")
    common(p)
    p.add_argument("--n", dest="ns", type=int, nargs="+")
    p.add_argument("--protocol", dest="protocols", nargs="+", choices=["line", "star"])
    p.add_argument("--trials", type=int, help="seeds per cell, counted from --seed")
    p.add_argument("--jobs", type=int)
    p.add_argument("--trajectories", action="store_true",
                   help="also write trajectory CSV and SVG per trial")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except (SizeMismatch, TreeError, OpLogFormatError, EventLogFormatError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
