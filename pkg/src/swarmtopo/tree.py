"""Labeled trees on nodes ``1..n`` and the structural queries used everywhere else."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    Disconnected,
    DuplicateEdge,
    NodeOutOfRange,
    NotAnEdge,
    SelfLoop,
    TreeError,
    TreeFormatError,
    WrongEdgeCount,
)

Edge = tuple[int, int]


def canonical_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class SuperLeaf:
    """A subtree given by its root and its full member set (root included)."""

    root: int
    members: frozenset[int]

    def __post_init__(self):
        if not isinstance(self.members, frozenset):
            object.__setattr__(self, "members", frozenset(self.members))
        if self.root not in self.members:
            raise TreeError(f"super-leaf root {self.root} missing from its members")

    @classmethod
    def singleton(cls, v: int) -> "SuperLeaf":
        return cls(v, frozenset((v,)))

    @property
    def is_singleton(self) -> bool:
        return len(self.members) == 1


@dataclass(frozen=True, eq=False)
class LabeledTree:
    """Immutable labeled tree.

    Build through :func:`validate_tree` (or :meth:`from_edges`); the bare
    constructor trusts its input and is reserved for code that checks the
    result itself.
    """

    n: int
    edges: frozenset[Edge]
    _adj: tuple[frozenset[int], ...] = field(default=(), repr=False, compare=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "LabeledTree":
        return validate_tree(n, edges)

    @classmethod
    def _trusted(cls, n: int, edges: frozenset[Edge],
                 adj: tuple[frozenset[int], ...] = ()) -> "LabeledTree":
        return cls(n, edges, adj)

    def __eq__(self, other):
        if not isinstance(other, LabeledTree):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return hash((self.n, self.edges))

    def __repr__(self):
        return f"LabeledTree(n={self.n}, edges={sorted(self.edges)})"

    @cached_property
    def adjacency(self) -> tuple[frozenset[int], ...]:
        """``adjacency[v]`` is the neighbor set of ``v``; index 0 is unused."""
        if self._adj:
            return self._adj
        nbrs: list[set[int]] = [set() for _ in range(self.n + 1)]
        for u, v in self.edges:
            nbrs[u].add(v)
            nbrs[v].add(u)
        return tuple(frozenset(s) for s in nbrs)

    def nodes(self) -> range:
        return range(1, self.n + 1)

    def _check(self, v: int) -> None:
        if not (isinstance(v, (int, np.integer)) and 1 <= v <= self.n):
            raise NodeOutOfRange(f"node {v!r} not in 1..{self.n}")

    def neighbors(self, v: int) -> frozenset[int]:
        self._check(v)
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        self._check(v)
        return len(self.adjacency[v])

    def degrees(self) -> list[int]:
        """Degrees indexed by label (index 0 is 0)."""
        return [len(s) for s in self.adjacency]

    def leaves(self) -> list[int]:
        return [v for v in self.nodes() if len(self.adjacency[v]) == 1]

    def has_edge(self, u: int, v: int) -> bool:
        return canonical_edge(u, v) in self.edges

    def path_between(self, s: int, d: int) -> list[int]:
        """The unique simple path from ``s`` to ``d`` (inclusive)."""
        self._check(s)
        self._check(d)
        if s == d:
            return [s]
        adj = self.adjacency
        parent = {d: 0}
        queue = deque([d])
        while queue:
            x = queue.popleft()
            if x == s:
                break
            for y in adj[x]:
                if y not in parent:
                    parent[y] = x
                    queue.append(y)
        path = [s]
        while path[-1] != d:
            path.append(parent[path[-1]])
        return path

    def distance(self, s: int, d: int) -> int:
        return len(self.path_between(s, d)) - 1

    def branch(self, j: int, away_from: int) -> frozenset[int]:
        """Nodes whose path to ``away_from`` passes through ``j`` (``j`` included)."""
        adj = self.adjacency
        seen = {j, away_from}
        out = [j]
        stack = [j]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    out.append(y)
                    stack.append(y)
        return frozenset(out)

    def subtree_rooted_at(self, j: int, away_from: int) -> SuperLeaf:
        self._check(j)
        self._check(away_from)
        if not self.has_edge(j, away_from):
            raise NotAnEdge(f"({j},{away_from}) is not an edge")
        return SuperLeaf(j, self.branch(j, away_from))

    def outside_neighbors(self, s: SuperLeaf) -> dict[int, frozenset[int]]:
        """For each member with edges leaving ``s``, the outside endpoints."""
        adj = self.adjacency
        out = {}
        for v in s.members:
            ext = adj[v] - s.members
            if ext:
                out[v] = ext
        return out

    def members_connected(self, s: SuperLeaf) -> bool:
        adj = self.adjacency
        seen = {s.root}
        stack = [s.root]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y in s.members and y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == len(s.members)

    def is_super_leaf(self, s: SuperLeaf) -> bool:
        if not all(1 <= v <= self.n for v in s.members):
            return False
        if not self.members_connected(s):
            return False
        ext = self.outside_neighbors(s)
        if any(v != s.root for v in ext):
            return False
        return len(ext.get(s.root, ())) == 1

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for u, v in self.edges:
            a[u - 1, v - 1] = a[v - 1, u - 1] = 1.0
        return a

    def relabel(self, mapping: dict[int, int]) -> "LabeledTree":
        return validate_tree(self.n, ((mapping[u], mapping[v]) for u, v in self.edges))

    def to_text(self) -> str:
        lines = [f"n={self.n}"]
        lines += [f"{u} {v}" for u, v in sorted(self.edges)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "LabeledTree":
        return parse_tree_text(text)


def _tree_problem(n: int, edges: frozenset[Edge]) -> TreeError | None:
    if len(edges) != n - 1:
        return WrongEdgeCount(f"{len(edges)} edges for n={n}; need {n - 1}")
    adj: list[list[int]] = [[] for _ in range(n + 1)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = bytearray(n + 1)
    seen[1] = 1
    stack = [1]
    count = 1
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if not seen[y]:
                seen[y] = 1
                count += 1
                stack.append(y)
    if count != n:
        return Disconnected(f"only {count} of {n} nodes reachable from node 1")
    return None


def validate_tree(n: int, edges: Iterable[Sequence[int]]) -> LabeledTree:
    """Check a node count and edge list and return the tree.

    Raises the most specific of :class:`SelfLoop`, :class:`NodeOutOfRange`,
    :class:`DuplicateEdge`, :class:`Disconnected` or :class:`WrongEdgeCount`.
    Connectivity is reported before the edge count, so a forest with too few
    edges surfaces as ``Disconnected``.
    """
    if n < 2:
        raise TreeError(f"need n >= 2, got {n}")
    seen: set[Edge] = set()
    for e in edges:
        u, v = int(e[0]), int(e[1])
        if u == v:
            raise SelfLoop(f"self-loop at {u}")
        for x in (u, v):
            if not 1 <= x <= n:
                raise NodeOutOfRange(f"node {x} not in 1..{n}")
        ce = canonical_edge(u, v)
        if ce in seen:
            raise DuplicateEdge(f"duplicate edge {ce}")
        seen.add(ce)
    fs = frozenset(seen)
    problem = _tree_problem(n, fs)
    if isinstance(problem, WrongEdgeCount) and len(fs) < n - 1:
        problem = Disconnected(str(problem))
    if problem is not None:
        raise problem
    return LabeledTree._trusted(n, fs)


def is_tree(n: int, edges: frozenset[Edge]) -> bool:
    return _tree_problem(n, edges) is None


def path_tree(n: int) -> LabeledTree:
    return validate_tree(n, [(i, i + 1) for i in range(1, n)])


def star_tree(n: int, center: int = 1) -> LabeledTree:
    return validate_tree(n, [(center, v) for v in range(1, n + 1) if v != center])


def parse_tree_text(text: str) -> LabeledTree:
    """Parse the ``n=<N>`` header plus ``u v`` edge-list format."""
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if n is None:
            if not line.startswith("n="):
                raise TreeFormatError(f"line {lineno}: expected 'n=<N>' header")
            try:
                n = int(line[2:])
            except ValueError:
                raise TreeFormatError(f"line {lineno}: bad node count {line[2:]!r}") from None
            continue
        parts = line.split()
        if len(parts) != 2:
            raise TreeFormatError(f"line {lineno}: expected 'u v', got {line!r}")
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise TreeFormatError(f"line {lineno}: non-integer label in {line!r}") from None
    if n is None:
        raise TreeFormatError("missing 'n=<N>' header")
    return validate_tree(n, edges)


class LabelMap:
    """Stable translation between external robot ids and labels ``1..N``.

    Labels follow first-appearance order of the ids handed to the constructor.
    """

    def __init__(self, ids: Iterable[Hashable]):
        self._to_label: dict[Hashable, int] = {}
        self._to_id: list[Hashable] = [None]
        for rid in ids:
            if rid in self._to_label:
                raise ValueError(f"duplicate robot id {rid!r}")
            self._to_label[rid] = len(self._to_id)
            self._to_id.append(rid)

    def __len__(self):
        return len(self._to_id) - 1

    def __iter__(self) -> Iterator[Hashable]:
        return iter(self._to_id[1:])

    def label(self, rid: Hashable) -> int:
        return self._to_label[rid]

    def robot_id(self, label: int) -> Hashable:
        if not 1 <= label < len(self._to_id):
            raise NodeOutOfRange(f"label {label} not in 1..{len(self)}")
        return self._to_id[label]

    def tree_from_links(self, links: Iterable[tuple[Hashable, Hashable]]) -> LabeledTree:
        return validate_tree(len(self), ((self.label(a), self.label(b)) for a, b in links))
