"""Laplacian spectra, degree counts and per-run metric series."""

from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass, fields

import numpy as np

from .tree import LabeledTree

TOL = 1e-9


def laplacian(adj: np.ndarray) -> np.ndarray:
    """``D - A`` for a symmetric 0/1 adjacency matrix."""
    a = np.asarray(adj, dtype=float)
    return np.diag(a.sum(axis=1)) - a


def tree_laplacian(tree: LabeledTree) -> np.ndarray:
    return laplacian(tree.adjacency_matrix())


def lambda2(lap: np.ndarray) -> float:
    """Second-smallest Laplacian eigenvalue (algebraic connectivity)."""
    if lap.shape[0] < 2:
        return 0.0
    w = np.linalg.eigvalsh(lap)
    return float(max(w[1], 0.0))


def tree_lambda2(tree: LabeledTree) -> float:
    return lambda2(tree_laplacian(tree))


def path_lambda2(n: int) -> float:
    return 2.0 * (1.0 - np.cos(np.pi / n))


def proximity_adjacency(positions: np.ndarray, r_range: float) -> np.ndarray:
    p = np.asarray(positions, dtype=float)
    d = np.linalg.norm(p[:, None, :] - p[None, :, :], axis=-1)
    a = (d <= r_range).astype(float)
    np.fill_diagonal(a, 0.0)
    return a


def lambda2_of_proximity_graph(world, cfg) -> float:
    """λ2 of the graph joining every pair of robots within range."""
    return lambda2(laplacian(proximity_adjacency(world.positions, cfg.r_range)))


@dataclass(frozen=True)
class DegreeHistogram:
    deg1: int
    deg2: int
    deg_ge2: int
    deg_ge3: int


def degree_histogram(tree: LabeledTree) -> DegreeHistogram:
    d = np.asarray(tree.degrees()[1:])
    return DegreeHistogram(int((d == 1).sum()), int((d == 2).sum()),
                           int((d >= 2).sum()), int((d >= 3).sum()))


def excess_degree(tree: LabeledTree) -> int:
    """``sum(max(deg - 2, 0))``; zero exactly on paths."""
    return int(sum(max(x - 2, 0) for x in tree.degrees()[1:]))


def branching_count(tree: LabeledTree) -> int:
    """Nodes of degree above one; equals one exactly on stars (n >= 3)."""
    return int(sum(1 for x in tree.degrees()[1:] if x > 1))


@dataclass(frozen=True)
class MetricRow:
    time: float
    round: int
    lambda2_tree: float
    lambda2_graph: float
    coverage: float
    deg1_count: int
    deg2_count: int
    deg_ge2_count: int
    ops_committed: int


HEADER = [f.name for f in fields(MetricRow)]


class MetricSeries:
    """Rows keyed by strictly increasing time."""

    def __init__(self):
        self.rows: list[MetricRow] = []

    def append(self, row: MetricRow) -> None:
        if self.rows and row.time <= self.rows[-1].time:
            raise ValueError(f"time {row.time} not after {self.rows[-1].time}")
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(HEADER)
        for r in self.rows:
            w.writerow([f"{x:.10g}" if isinstance(x, float) else x for x in astuple(r)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "MetricSeries":
        rd = csv.reader(io.StringIO(text))
        head = next(rd)
        if head != HEADER:
            raise ValueError(f"unexpected header {head}")
        out = cls()
        types = [f.type for f in fields(MetricRow)]
        for rec in rd:
            vals = [float(v) if t in ("float", float) else int(v) for v, t in zip(rec, types)]
            out.append(MetricRow(*vals))
        return out
