"""Centralized planner turning any labeled tree into any other of the same size.

The target is processed along its lowest-leaf elimination trace
``(l_1, p_1), ..., (l_{n-2}, p_{n-2})``. At step ``m`` the node ``l_m`` is
bundled with the already placed subtrees hanging from it, the bundle is cut
loose from everything but the next node toward ``p_m`` (a leafization or
super-leafization), and is then walked one edge at a time until it hangs off
``p_m``. After step ``m`` every placed node has exactly its target
neighborhood, and paths between unplaced nodes never cross placed ones, so
the loop ends on the target.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import ops
from .errors import OpError, OpLogFormatError, ReplayStepError, SizeMismatch, TreeError
from .ops import (
    Leafization,
    LeafTransfer,
    OpLogEntry,
    SuperLeafization,
    SuperLeafTransfer,
    TopologyOp,
)
from .prufer import encode, random_tree
from .tree import LabeledTree, SuperLeaf, validate_tree


@dataclass(frozen=True)
class TransformPlan:
    initial: LabeledTree
    target: LabeledTree
    steps: tuple[TopologyOp, ...]
    # checkpoints[m] = number of steps emitted once trace step m+1 is done
    checkpoints: tuple[int, ...] = field(default=(), compare=False)

    @property
    def intermediate_count(self) -> int:
        """Trees strictly between initial and final along the replay."""
        return max(len(self.steps) - 1, 0)

    def __len__(self):
        return len(self.steps)


def _bundle(tree: LabeledTree, l: int, placed: set[int]) -> SuperLeaf:
    members = {l}
    for q in tree.neighbors(l):
        if q in placed:
            members |= tree.branch(q, l)
    return SuperLeaf(l, frozenset(members))


def plan(initial: LabeledTree, target: LabeledTree) -> TransformPlan:
    if initial.n != target.n:
        raise SizeMismatch(f"initial has {initial.n} nodes, target has {target.n}")
    trace = encode(target)
    cur = initial
    steps: list[TopologyOp] = []
    checkpoints = []
    placed: set[int] = set()

    def emit(op):
        nonlocal cur
        cur, _ = ops.apply(cur, op)
        steps.append(op)

    for l, p in zip(trace.removed_leaves, trace.attachments.symbols):
        s = _bundle(cur, l, placed)
        outside = cur.neighbors(l) - s.members
        toward = cur.path_between(l, p)[1]
        if len(outside) > 1:
            emit(Leafization(l, toward) if s.is_singleton else SuperLeafization(s, toward))
        (att,) = cur.neighbors(l) - s.members
        walk = cur.path_between(att, p)
        for j, k in zip(walk, walk[1:]):
            emit(LeafTransfer(l, j, k) if s.is_singleton else SuperLeafTransfer(s, j, k))
        placed.add(l)
        checkpoints.append(len(steps))
    if cur != target:
        raise AssertionError("planner ended away from the target")
    return TransformPlan(initial, target, tuple(steps), tuple(checkpoints))


def replay_log(p: TransformPlan) -> tuple[LabeledTree, list[OpLogEntry]]:
    """Apply every step, returning the final tree and the per-step log."""
    cur = p.initial
    log = []
    for i, op in enumerate(p.steps):
        try:
            cur, entry = ops.apply(cur, op)
        except (OpError, TreeError) as exc:
            raise ReplayStepError(i, exc) from exc
        log.append(entry)
    return cur, log


def replay(p: TransformPlan) -> LabeledTree:
    return replay_log(p)[0]


def placement_violations(current: LabeledTree, target: LabeledTree, m: int) -> list[int]:
    """Among the first ``m`` eliminated target leaves, those whose neighborhood
    in ``current`` differs from their target neighborhood."""
    trace = encode(target)
    return [l for l in trace.removed_leaves[:m]
            if current.neighbors(l) != target.neighbors(l)]


@dataclass(frozen=True)
class PlanStats:
    n: int
    sample: int
    min: int
    max: int
    mean: float


def plan_length_stats(n: int, sample: int, seed: int = 0) -> PlanStats:
    """Step counts of plans between ``sample`` uniformly random tree pairs."""
    rng = np.random.default_rng(seed)
    lengths = []
    for _ in range(sample):
        if n == 2:
            lengths.append(0)
            continue
        a = random_tree(n, rng)
        b = random_tree(n, rng)
        lengths.append(len(plan(a, b)))
    arr = np.asarray(lengths or [0])
    return PlanStats(n, sample, int(arr.min()), int(arr.max()), float(arr.mean()))


# text format ------------------------------------------------------------

def _edges_text(tree: LabeledTree) -> str:
    return " ".join(f"{u}-{v}" for u, v in sorted(tree.edges))


def _parse_edge_list(n: int, text: str) -> LabeledTree:
    edges = []
    for tok in text.split():
        u, sep, v = tok.partition("-")
        if not sep:
            raise OpLogFormatError(f"bad edge token {tok!r}")
        try:
            edges.append((int(u), int(v)))
        except ValueError:
            raise OpLogFormatError(f"bad edge token {tok!r}") from None
    return validate_tree(n, edges)


def plan_to_text(p: TransformPlan) -> str:
    """Header (``n=``, ``initial``, ``target``) followed by one log line per step."""
    _, log = replay_log(p)
    lines = [f"n={p.initial.n}", f"initial {_edges_text(p.initial)}",
             f"target {_edges_text(p.target)}"]
    lines += [ops.entry_to_line(e) for e in log]
    return "\n".join(lines) + "\n"


def parse_plan_text(text: str):
    """Return ``(plan, recorded)`` where ``recorded`` lists each line's
    ``(removed, added)`` edge sets for comparison against a fresh replay."""
    body = [ln.strip() for ln in text.splitlines()
            if ln.strip() and not ln.lstrip().startswith("#")]
    if len(body) < 3 or not body[0].startswith("n="):
        raise OpLogFormatError("plan must start with n=, initial and target lines")
    try:
        n = int(body[0][2:])
    except ValueError:
        raise OpLogFormatError(f"bad node count {body[0]!r}") from None
    head = {}
    for line in body[1:3]:
        key, _, rest = line.partition(" ")
        if key not in ("initial", "target"):
            raise OpLogFormatError(f"expected initial/target line, got {line!r}")
        head[key] = _parse_edge_list(n, rest)
    if len(head) != 2:
        raise OpLogFormatError("plan needs both initial and target lines")
    steps, recorded = [], []
    for line in body[3:]:
        op, removed, added = ops.parse_entry_line(line)
        steps.append(op)
        recorded.append((removed, added))
    return TransformPlan(head["initial"], head["target"], tuple(steps)), recorded


__all__ = [
    "TransformPlan", "PlanStats", "plan", "replay", "replay_log",
    "placement_violations", "plan_length_stats", "plan_to_text", "parse_plan_text",
]
