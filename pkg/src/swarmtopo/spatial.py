"""Planar kinematics for a robot swarm whose communication tree is rewired.

Robot ``i`` carries tree label ``i``; positions are stored 0-based in an
``(n, 2)`` array. Every tree edge obeys a pairwise potential: a quadratic well
at the edge's current target distance plus a barrier that blows up at the
communication range. A rewire that joins two robots two hops apart is
preceded by an approach phase that contracts the two hops in between.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import kernels, ops
from .errors import ApproachTimeout, ArrangeTimeout, LinkStretch, RangeConfigError, RobotBusy
from .ops import (
    Leafization,
    LeafTransfer,
    SuperLeafization,
    TopologyOp,
)
from .tree import Edge, LabeledTree, canonical_edge, validate_tree


@dataclass(frozen=True)
class RangeConfig:
    r_range: float = 1.0
    r_mission: float = 0.8
    r_transfer: float = 0.45
    delta: float = 0.05
    v_max: float = 0.1
    dt: float = 0.05
    k_att: float = 1.0
    k_bar: float = 0.01
    gain: float = 1.0
    k_shape: float = 1.0
    approach_timeout: float = 600.0
    arrange_timeout: float = 20000.0
    angle_tol_deg: float = 2.0
    gap_tol: float = 0.05
    spacing_tol: float = 0.02

    def __post_init__(self):
        r = self.r_range
        if not self.delta > 0:
            raise RangeConfigError("delta must be positive")
        if not 0 < self.r_transfer <= r / 2 - self.delta + 1e-12:
            raise RangeConfigError("need 0 < r_transfer <= r_range/2 - delta")
        if not r / 2 - self.delta < self.r_mission < r:
            # r_mission == r_range would put the well on the barrier's pole
            raise RangeConfigError("need r_range/2 - delta < r_mission < r_range")
        if self.v_max <= 0 or self.dt <= 0:
            raise RangeConfigError("v_max and dt must be positive")
        if self.v_max * self.dt > 0.005 * r + 1e-12:
            raise RangeConfigError("v_max*dt must not exceed 0.005*r_range")
        for name in ("k_att", "gain", "k_shape", "approach_timeout", "arrange_timeout"):
            if getattr(self, name) <= 0:
                raise RangeConfigError(f"{name} must be positive")
        if self.k_bar < 0:
            raise RangeConfigError("k_bar must be non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "RangeConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise RangeConfigError(f"unknown range settings: {sorted(extra)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


class Phase(str, enum.Enum):
    HOLD = "hold"
    APPROACH = "approach"
    ARRANGE = "arrange"


@dataclass
class WorldState:
    positions: np.ndarray
    tree: LabeledTree
    phases: list[Phase]
    time: float = 0.0
    steps: int = 0
    tokens: dict[int, int] = field(default_factory=dict)
    max_edge: float = 0.0  # longest tree edge seen after any control step

    @property
    def n(self) -> int:
        return self.tree.n

    def copy(self) -> "WorldState":
        return WorldState(self.positions.copy(), self.tree, list(self.phases),
                          self.time, self.steps, dict(self.tokens), self.max_edge)

    def pos(self, v: int) -> np.ndarray:
        return self.positions[v - 1]

    def dist(self, u: int, v: int) -> float:
        d = self.positions[u - 1] - self.positions[v - 1]
        return float(math.hypot(d[0], d[1]))

    def edge_lengths(self) -> np.ndarray:
        e = edge_array(self.tree)
        if len(e) == 0:
            return np.zeros(0)
        d = self.positions[e[:, 0]] - self.positions[e[:, 1]]
        return np.hypot(d[:, 0], d[:, 1])


def edge_array(tree: LabeledTree) -> np.ndarray:
    """Sorted tree edges as a 0-based ``(m, 2)`` int64 array."""
    return np.array(sorted(tree.edges), dtype=np.int64).reshape(-1, 2) - 1


class Recorder:
    """Collects trajectory samples every ``every`` control steps."""

    def __init__(self, every: int = 20):
        self.every = every
        self.rows: list[tuple[float, np.ndarray, tuple[Phase, ...]]] = []
        self.hooks: list[Callable[[WorldState], None]] = []

    def sample(self, world: WorldState, force: bool = False) -> None:
        if force or world.steps % self.every == 0:
            if self.rows and self.rows[-1][0] == world.time:
                return
            self.rows.append((world.time, world.positions.copy(), tuple(world.phases)))
        for h in self.hooks:
            h(world)

    def to_csv(self) -> str:
        out = ["t,robot_id,x,y,phase"]
        for t, pos, ph in self.rows:
            for i, (x, y) in enumerate(pos):
                out.append(f"{t:.4f},{i + 1},{x:.6f},{y:.6f},{ph[i].value}")
        return "\n".join(out) + "\n"


# control ----------------------------------------------------------------

def edge_field(tree: LabeledTree, cfg: RangeConfig,
               targets: Optional[dict[Edge, float]] = None) -> tuple[np.ndarray, np.ndarray]:
    """Edge array and per-edge target distances (``r_mission`` unless overridden)."""
    e = edge_array(tree)
    t = np.full(len(e), cfg.r_mission)
    if targets:
        for idx, (u, v) in enumerate(e):
            t[idx] = targets.get((int(u) + 1, int(v) + 1), cfg.r_mission)
    return e, t


def _clamp(vel: np.ndarray, v_max: float) -> np.ndarray:
    speed = np.hypot(vel[:, 0], vel[:, 1])
    over = speed > v_max
    if over.any():
        vel[over] *= (v_max / speed[over])[:, None]
    return vel


def _advance(world: WorldState, cfg: RangeConfig, fld=None, extra=None,
             dt: Optional[float] = None) -> None:
    dt = cfg.dt if dt is None else dt
    e, t = edge_field(world.tree, cfg) if fld is None else fld
    vel = kernels.edge_velocities(world.positions, e, t, cfg.r_range, cfg.k_att,
                                  cfg.k_bar, cfg.gain, cfg.v_max)
    if extra is not None:
        vel = _clamp(vel + extra, cfg.v_max)
    world.positions += vel * dt
    world.time = round(world.time + dt, 9)
    world.steps += 1
    if len(e):
        d = world.positions[e[:, 0]] - world.positions[e[:, 1]]
        lengths = np.hypot(d[:, 0], d[:, 1])
        world.max_edge = max(world.max_edge, float(lengths.max()))
        if lengths.max() >= cfg.r_range:
            i = int(lengths.argmax())
            raise LinkStretch(
                f"edge {e[i, 0] + 1}-{e[i, 1] + 1} reached {lengths[i]:.4f} >= {cfg.r_range} "
                f"at t={world.time:.2f}")


def control_step(world: WorldState, cfg: RangeConfig, dt: Optional[float] = None,
                 targets: Optional[dict[Edge, float]] = None) -> WorldState:
    """One explicit Euler step of the tree potential; returns a new world."""
    if dt is not None and dt <= 0:
        raise ValueError("dt must be positive")
    out = world.copy()
    _advance(out, cfg, edge_field(world.tree, cfg, targets), dt=dt)
    return out


def potential(world: WorldState, cfg: RangeConfig,
              targets: Optional[dict[Edge, float]] = None) -> float:
    e, t = edge_field(world.tree, cfg, targets)
    return kernels.potential_energy(world.positions, e, t, cfg.r_range, cfg.k_att, cfg.k_bar)


def hold(world: WorldState, cfg: RangeConfig, steps: int,
         recorder: Optional[Recorder] = None) -> None:
    fld = edge_field(world.tree, cfg)
    for _ in range(steps):
        _advance(world, cfg, fld)
        if recorder:
            recorder.sample(world)


# approach and rewire ----------------------------------------------------

def rewire_pairs(tree: LabeledTree, op: TopologyOp) -> tuple[list[Edge], list[Edge]]:
    """``(contract, join)``: tree edges to shorten, and pairs that become edges."""
    if isinstance(op, Leafization):
        j, k = op.j, op.k
        others = sorted(tree.neighbors(j) - {k})
        return ([canonical_edge(j, k)] + [canonical_edge(j, p) for p in others],
                [canonical_edge(k, p) for p in others])
    if isinstance(op, SuperLeafization):
        r, k = op.s.root, op.k
        others = sorted(tree.neighbors(r) - op.s.members - {k})
        return ([canonical_edge(r, k)] + [canonical_edge(r, p) for p in others],
                [canonical_edge(k, p) for p in others])
    if isinstance(op, LeafTransfer):
        l, j, k = op.l, op.j, op.k
    else:
        l, j, k = op.s.root, op.j, op.k
    return [canonical_edge(l, j), canonical_edge(j, k)], [canonical_edge(l, k)]


def execute_ops_spatially(world: WorldState, op_list: Sequence[TopologyOp], cfg: RangeConfig,
                          recorder: Optional[Recorder] = None) -> int:
    """Approach, then rewire, a batch of operations on disjoint robots.

    Participants contract their two-hop chains toward ``r_transfer`` until
    every pair about to be joined is within ``r_range - delta``; the batch is
    then applied atomically. Mutates ``world``; returns control steps used.
    """
    contract: dict[Edge, float] = {}
    join: list[Edge] = []
    busy: set[int] = set()
    tree = world.tree
    for token, op in enumerate(op_list):
        nodes = ops.touched_nodes(tree, op)
        clash = [v for v in nodes if world.phases[v - 1] is not Phase.HOLD or v in busy]
        if clash:
            raise RobotBusy(f"robots {sorted(clash)} are busy")
        busy |= nodes
        c, jn = rewire_pairs(tree, op)
        for e in c:
            contract[e] = cfg.r_transfer
        join += jn
        for v in nodes:
            world.tokens[v] = token
        tree, _ = ops.apply(tree, op)
    for v in busy:
        world.phases[v - 1] = Phase.APPROACH

    ready = cfg.r_range - cfg.delta
    start = world.steps
    limit = world.time + cfg.approach_timeout
    fld = edge_field(world.tree, cfg, contract)
    while any(world.dist(u, v) > ready for u, v in join):
        if world.time >= limit:
            raise ApproachTimeout(f"approach did not finish within {cfg.approach_timeout}s")
        _advance(world, cfg, fld)
        if recorder:
            recorder.sample(world)
    for op in op_list:
        world.tree, _ = ops.apply(world.tree, op)
    for v in busy:
        world.phases[v - 1] = Phase.HOLD
        world.tokens.pop(v, None)
    if recorder:
        recorder.sample(world, force=True)
    return world.steps - start


def execute_op_spatially(world: WorldState, op: TopologyOp, cfg: RangeConfig,
                         recorder: Optional[Recorder] = None) -> int:
    return execute_ops_spatially(world, [op], cfg, recorder)


# arrangement ------------------------------------------------------------

def line_order(tree: LabeledTree) -> list[int]:
    ends = tree.leaves()
    return tree.path_between(ends[0], ends[-1])


def is_path(tree: LabeledTree) -> bool:
    return sorted(tree.degrees()[1:]) == [1, 1] + [2] * (tree.n - 2)


def is_star(tree: LabeledTree) -> bool:
    return tree.n <= 2 or max(tree.degrees()) == tree.n - 1


def line_bend_deg(world: WorldState) -> float:
    """Largest deviation from straight, in degrees, over interior robots."""
    order = np.array(line_order(world.tree)) - 1
    p = world.positions[order]
    if len(p) < 3:
        return 0.0
    a = p[1:-1] - p[:-2]
    b = p[2:] - p[1:-1]
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    dot = (a * b).sum(axis=1)
    return float(np.degrees(np.abs(np.arctan2(cross, dot))).max())


def star_center(tree: LabeledTree) -> int:
    deg = tree.degrees()
    return max(tree.nodes(), key=lambda v: (deg[v], -v))


def star_gaps(world: WorldState) -> np.ndarray:
    """Angular gaps (radians) between consecutive leaves around the center."""
    c = star_center(world.tree)
    leaves = np.array(sorted(world.tree.neighbors(c))) - 1
    rel = world.positions[leaves] - world.positions[c - 1]
    th = np.sort(np.arctan2(rel[:, 1], rel[:, 0]))
    return np.diff(np.concatenate([th, th[:1] + 2 * np.pi]))


def _line_extra(world: WorldState, cfg: RangeConfig, order: np.ndarray) -> np.ndarray:
    p = world.positions
    want = p.copy()
    q = p[order]
    want[order[1:-1]] = 0.5 * (q[:-2] + q[2:])
    want[order[0]] = 2 * q[1] - q[2]
    want[order[-1]] = 2 * q[-2] - q[-3]
    return cfg.k_shape * (want - p)


def _star_extra(world: WorldState, cfg: RangeConfig, c: int, leaves: np.ndarray) -> np.ndarray:
    p = world.positions
    extra = np.zeros_like(p)
    rel = p[leaves] - p[c - 1]
    th = np.arctan2(rel[:, 1], rel[:, 0])
    order = np.argsort(th)
    ths = th[order]
    prev = np.roll(ths, 1)
    nxt = np.roll(ths, -1)
    gap_prev = np.mod(ths - prev, 2 * np.pi)
    gap_next = np.mod(nxt - ths, 2 * np.pi)
    want_th = ths + 0.5 * (gap_next - gap_prev)
    want = p[c - 1] + cfg.r_mission * np.column_stack([np.cos(want_th), np.sin(want_th)])
    idx = leaves[order]
    extra[idx] = cfg.k_shape * (want - p[idx])
    return extra


def arranged(world: WorldState, shape: str, cfg: RangeConfig) -> bool:
    if world.n <= 2:
        return True
    lengths = world.edge_lengths()
    if np.abs(lengths - cfg.r_mission).max() > cfg.spacing_tol:
        return False
    if shape == "line":
        return line_bend_deg(world) < cfg.angle_tol_deg
    gaps = star_gaps(world)
    ideal = 2 * np.pi / (world.n - 1)
    return bool(np.abs(gaps - ideal).max() <= cfg.gap_tol * ideal)


def arrange(world: WorldState, shape: str, cfg: RangeConfig,
            recorder: Optional[Recorder] = None, check_every: int = 20) -> int:
    """Straighten a path or even out a star; returns control steps used.

    Line: interior robots steer toward the midpoint of their two neighbors
    and the ends toward the extension of the last segment. Star: each leaf
    steers to the bisector of its two angular neighbors at ``r_mission``.
    Tree spacing stays under the edge potential throughout.
    """
    shape = str(getattr(shape, "value", shape))
    if shape == "line" and not is_path(world.tree):
        raise ValueError("line arrangement needs a path")
    if shape == "star" and not is_star(world.tree):
        raise ValueError("star arrangement needs a star")
    start = world.steps
    if world.n <= 2 or arranged(world, shape, cfg):
        return 0
    if shape == "line":
        order = np.array(line_order(world.tree)) - 1
        extra_fn = lambda: _line_extra(world, cfg, order)  # noqa: E731
    else:
        c = star_center(world.tree)
        leaves = np.array(sorted(world.tree.neighbors(c))) - 1
        extra_fn = lambda: _star_extra(world, cfg, c, leaves)  # noqa: E731
    world.phases = [Phase.ARRANGE] * world.n
    limit = world.time + cfg.arrange_timeout
    fld = edge_field(world.tree, cfg)
    try:
        while True:
            _advance(world, cfg, fld, extra=extra_fn())
            if recorder:
                recorder.sample(world)
            if (world.steps - start) % check_every == 0 and arranged(world, shape, cfg):
                break
            if world.time >= limit:
                raise ArrangeTimeout(f"{shape} arrangement unfinished after {cfg.arrange_timeout}s")
    finally:
        world.phases = [Phase.HOLD] * world.n
    if recorder:
        recorder.sample(world, force=True)
    return world.steps - start


# coverage ---------------------------------------------------------------

def coverage_area(world_or_positions, cfg: RangeConfig) -> float:
    """Area of the union of range disks, on a grid of cell ``r_range/50``."""
    pos = getattr(world_or_positions, "positions", world_or_positions)
    pos = np.ascontiguousarray(pos, dtype=float)
    r = cfg.r_range
    h = r / 50.0
    x0 = pos[:, 0].min() - r - h
    y0 = pos[:, 1].min() - r - h
    nx = int(math.ceil((pos[:, 0].max() + r + h - x0) / h))
    ny = int(math.ceil((pos[:, 1].max() + r + h - y0) / h))
    cells = kernels.disk_union_cells(pos, r, x0, y0, h, nx, ny)
    return cells * h * h


# initial worlds ---------------------------------------------------------

def arena_side(n: int, cfg: RangeConfig) -> float:
    link = cfg.r_range - cfg.delta
    return math.sqrt(n * math.pi * link * link / (math.log(n) + 3.0))


def _proximity_edges(pos: np.ndarray, link: float) -> list[Edge]:
    d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    iu, ju = np.nonzero(np.triu(d < link, k=1))
    return [(int(a) + 1, int(b) + 1) for a, b in zip(iu, ju)]


def random_spanning_tree(n: int, candidate_edges: list[Edge],
                         rng: np.random.Generator) -> Optional[LabeledTree]:
    """Kruskal over a random edge order; ``None`` if the graph is disconnected."""
    parent = list(range(n + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    chosen = []
    for idx in rng.permutation(len(candidate_edges)):
        u, v = candidate_edges[idx]
        a, b = find(u), find(v)
        if a != b:
            parent[a] = b
            chosen.append((u, v))
    if len(chosen) != n - 1:
        return None
    return validate_tree(n, chosen)


def random_world(n: int, cfg: RangeConfig, rng: np.random.Generator,
                 max_tries: int = 10000) -> WorldState:
    """Uniform positions in a square, resampled until the range graph at
    ``r_range - delta`` is connected, with a random spanning tree of it."""
    side = arena_side(n, cfg)
    link = cfg.r_range - cfg.delta
    for _ in range(max_tries):
        pos = rng.uniform(0.0, side, size=(n, 2))
        tree = random_spanning_tree(n, _proximity_edges(pos, link), rng)
        if tree is not None:
            return WorldState(pos, tree, [Phase.HOLD] * n)
    raise RuntimeError(f"no connected placement found for n={n}")


def world_from(positions: Iterable[Sequence[float]], tree: LabeledTree) -> WorldState:
    pos = np.array(positions, dtype=float).reshape(-1, 2)
    if len(pos) != tree.n:
        raise ValueError(f"{len(pos)} positions for {tree.n} robots")
    return WorldState(pos, tree, [Phase.HOLD] * tree.n)


# svg --------------------------------------------------------------------

def render_svg(recorder: Recorder, final_tree: LabeledTree, size: int = 600) -> str:
    """Trails in grey, start positions red, end positions green, final tree links."""
    if not recorder.rows:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}"/>\n'
    allpos = np.concatenate([p for _, p, _ in recorder.rows])
    lo = allpos.min(axis=0) - 0.5
    hi = allpos.max(axis=0) + 0.5
    scale = size / float(max(hi - lo))

    def xy(p):
        return (p[0] - lo[0]) * scale, size - (p[1] - lo[1]) * scale

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">',
           f'<rect width="{size}" height="{size}" fill="white"/>']
    n = allpos.shape[1] if allpos.ndim == 3 else recorder.rows[0][1].shape[0]
    for i in range(n):
        pts = " ".join("%.2f,%.2f" % xy(p[i]) for _, p, _ in recorder.rows)
        out.append(f'<polyline points="{pts}" fill="none" stroke="#bbbbbb" stroke-width="1"/>')
    end = recorder.rows[-1][1]
    for u, v in sorted(final_tree.edges):
        (x1, y1), (x2, y2) = xy(end[u - 1]), xy(end[v - 1])
        out.append(f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
                   f'stroke="#2a7a2a" stroke-width="1.5"/>')
    for color, pos in (("red", recorder.rows[0][1]), ("green", end)):
        for p in pos:
            x, y = xy(p)
            out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="4" fill="{color}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


__all__ = [
    "RangeConfig", "Phase", "WorldState", "Recorder", "control_step", "potential",
    "hold", "edge_field", "rewire_pairs", "execute_ops_spatially", "execute_op_spatially",
    "arrange", "arranged", "line_bend_deg", "star_gaps", "coverage_area",
    "random_world", "random_spanning_tree", "world_from", "render_svg",
    "arena_side", "is_path", "is_star", "edge_array",
]
