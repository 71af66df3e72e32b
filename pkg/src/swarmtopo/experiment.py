"""Single trials and seed sweeps: protocol run with spatial execution, then arrangement."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import metrics
from .metrics import MetricRow, MetricSeries
from .protocol import Protocol, ProtocolTrace, audit_trace, run_to_fixed_point
from .spatial import (
    RangeConfig,
    Recorder,
    WorldState,
    arrange,
    coverage_area,
    execute_ops_spatially,
    hold,
    random_world,
)
from .tree import LabeledTree


@dataclass(frozen=True)
class TrialConfig:
    n: int
    protocol: Protocol
    seed: int
    max_rounds: Optional[int] = None
    range: RangeConfig = field(default_factory=RangeConfig)
    record_every: int = 20
    keep_messages: bool = True

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need n >= 2")
        object.__setattr__(self, "protocol", Protocol(self.protocol))


@dataclass
class TrialResult:
    config: TrialConfig
    initial_tree: LabeledTree
    final_tree: LabeledTree
    rounds: int
    transform_time: float
    arrange_time: float
    coverage_initial: float
    coverage_final: float
    lambda2_final: float
    series: MetricSeries
    trace: ProtocolTrace
    recorder: Recorder
    max_edge: float
    audit_ok: bool
    # per committing round, starting with the initial tree
    lambda2_rounds: list[float]
    excess_rounds: list[int]
    branching_rounds: list[int]

    @property
    def shape_ok(self) -> bool:
        from .spatial import is_path, is_star
        ok = is_path if self.config.protocol is Protocol.LINE else is_star
        return ok(self.final_tree)


def initial_world(n: int, seed: int, cfg: RangeConfig) -> WorldState:
    """The seed's world; line and star trials with the same seed share it."""
    return random_world(n, cfg, np.random.default_rng(seed))


def _row(world: WorldState, cfg: RangeConfig, rnd: int, committed: int) -> MetricRow:
    h = metrics.degree_histogram(world.tree)
    return MetricRow(world.time, rnd, metrics.tree_lambda2(world.tree),
                     metrics.lambda2_of_proximity_graph(world, cfg),
                     coverage_area(world, cfg), h.deg1, h.deg2, h.deg_ge2, committed)


def run_trial(tc: TrialConfig) -> TrialResult:
    cfg = tc.range
    world = initial_world(tc.n, tc.seed, cfg)
    initial = world.tree
    rec = Recorder(tc.record_every)
    rec.sample(world, force=True)
    series = MetricSeries()
    series.append(_row(world, cfg, 0, 0))
    cov0 = series.rows[0].coverage
    rnd = [0]

    def executor(tree, op_list):
        assert tree == world.tree
        execute_ops_spatially(world, op_list, cfg, rec)
        # a round's message exchange occupies at least one control tick
        hold(world, cfg, 1, rec)
        rnd[0] += 1
        series.append(_row(world, cfg, rnd[0], len(op_list)))

    res = run_to_fixed_point(initial, tc.protocol, tc.max_rounds, executor,
                             keep_messages=tc.keep_messages)
    transform_time = world.time
    arrange(world, tc.protocol.value, cfg, rec)
    arrange_time = world.time - transform_time
    if world.time > series.rows[-1].time:
        series.append(_row(world, cfg, rnd[0], 0))
    rec.sample(world, force=True)

    trees = res.trace.trees()
    return TrialResult(
        config=tc,
        initial_tree=initial,
        final_tree=res.final,
        rounds=res.rounds,
        transform_time=transform_time,
        arrange_time=arrange_time,
        coverage_initial=cov0,
        coverage_final=coverage_area(world, cfg),
        lambda2_final=metrics.tree_lambda2(res.final),
        series=series,
        trace=res.trace,
        recorder=rec,
        max_edge=world.max_edge,
        audit_ok=audit_trace(res.trace).ok,
        lambda2_rounds=[metrics.tree_lambda2(t) for t in trees],
        excess_rounds=[metrics.excess_degree(t) for t in trees],
        branching_rounds=[metrics.branching_count(t) for t in trees],
    )


@dataclass(frozen=True)
class SweepRow:
    n: int
    protocol: str
    trials: int
    rounds_mean: float
    rounds_std: float
    arrange_time_mean: float
    arrange_time_std: float
    lambda2_final_mean: float
    coverage_final_mean: float
    coverage_final_std: float


SWEEP_HEADER = list(SweepRow.__dataclass_fields__)


def _mean_std(xs):
    xs = list(xs)
    if not xs:
        return math.nan, math.nan
    return statistics.fmean(xs), (statistics.pstdev(xs) if len(xs) > 1 else 0.0)


def summarize(results: list[TrialResult]) -> list[SweepRow]:
    cells: dict[tuple[int, str], list[TrialResult]] = {}
    for r in results:
        cells.setdefault((r.config.n, r.config.protocol.value), []).append(r)
    rows = []
    for (n, proto), rs in sorted(cells.items()):
        rm, rsd = _mean_std(r.rounds for r in rs)
        am, asd = _mean_std(r.arrange_time for r in rs)
        lm, _ = _mean_std(r.lambda2_final for r in rs)
        cm, csd = _mean_std(r.coverage_final for r in rs)
        rows.append(SweepRow(n, proto, len(rs), rm, rsd, am, asd, lm, cm, csd))
    return rows


def sweep_csv(rows: list[SweepRow]) -> str:
    out = [",".join(SWEEP_HEADER)]
    for r in rows:
        out.append(",".join(f"{v:.10g}" if isinstance(v, float) else str(v)
                            for v in r.__dict__.values()))
    return "\n".join(out) + "\n"


def sweep(ns, protocols, seeds, cfg: Optional[RangeConfig] = None,
          max_rounds: Optional[int] = None, jobs: int = 1,
          keep_messages: bool = True) -> list[TrialResult]:
    """Run every (n, protocol, seed) trial; ``jobs > 1`` uses worker processes."""
    cfg = cfg or RangeConfig()
    tcs = [TrialConfig(n, Protocol(p), s, max_rounds, cfg, keep_messages=keep_messages)
           for n in ns for p in protocols for s in seeds]
    if jobs <= 1:
        return [run_trial(tc) for tc in tcs]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_trial, tcs))
