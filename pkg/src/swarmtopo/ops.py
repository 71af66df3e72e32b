"""The four local topology operations.

Each operation is pure: it checks its preconditions, returns the rewired tree
and an :class:`OpLogEntry` that records the edge delta plus, for every added
edge, the path that linked its endpoints beforehand (never longer than two
hops).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Union

from .errors import (
    AlreadyLeaf,
    JKNotNeighbors,
    KInsideSubtree,
    NodeOutOfRange,
    NotALeaf,
    NotASuperLeaf,
    NotAttached,
    NotNeighbors,
    OpError,
    OpLogFormatError,
    RootAlreadySuperLeaf,
    SubtreeLeaks,
    TreeInvariantBroken,
    WrongAttachment,
)
from .tree import Edge, LabeledTree, SuperLeaf, canonical_edge, is_tree


@dataclass(frozen=True)
class Leafization:
    j: int
    k: int
    kind = "L"


@dataclass(frozen=True)
class LeafTransfer:
    l: int
    j: int
    k: int
    kind = "LT"


@dataclass(frozen=True)
class SuperLeafization:
    s: SuperLeaf
    k: int
    kind = "SL"


@dataclass(frozen=True)
class SuperLeafTransfer:
    s: SuperLeaf
    j: int
    k: int
    kind = "SLT"


TopologyOp = Union[Leafization, LeafTransfer, SuperLeafization, SuperLeafTransfer]


@dataclass(frozen=True)
class OpLogEntry:
    op: TopologyOp
    edges_removed: frozenset[Edge]
    edges_added: frozenset[Edge]
    # (added edge, pre-operation path between its endpoints)
    hop_certificate: tuple[tuple[Edge, tuple[int, ...]], ...]

    def max_hops(self) -> int:
        return max((len(p) - 1 for _, p in self.hop_certificate), default=0)


def _check_nodes(tree: LabeledTree, *nodes: int) -> None:
    for v in nodes:
        if not 1 <= v <= tree.n:
            raise NodeOutOfRange(f"node {v} not in 1..{tree.n}")


def _finish(tree: LabeledTree, op, removed: set[Edge], added: dict[Edge, tuple[int, ...]]):
    edges = (tree.edges - removed) | frozenset(added)
    if not is_tree(tree.n, edges):
        raise TreeInvariantBroken(f"{op} produced a non-tree")
    cert = tuple(sorted(added.items()))
    entry = OpLogEntry(op, frozenset(removed), frozenset(added), cert)
    return LabeledTree._trusted(tree.n, edges), entry


def leafization(tree: LabeledTree, j: int, k: int):
    """Rewire every neighbor of ``j`` except ``k`` onto ``k``."""
    _check_nodes(tree, j, k)
    if not tree.has_edge(j, k):
        raise NotNeighbors(f"{j} and {k} are not neighbors")
    nj = tree.neighbors(j)
    if len(nj) <= 1:
        raise AlreadyLeaf(f"{j} is already a leaf")
    removed, added = set(), {}
    for p in sorted(nj - {k}):
        removed.add(canonical_edge(j, p))
        added[canonical_edge(k, p)] = (k, j, p)
    return _finish(tree, Leafization(j, k), removed, added)


def leaf_transfer(tree: LabeledTree, l: int, j: int, k: int):
    """Move leaf ``l`` from ``j`` to ``j``'s neighbor ``k``."""
    _check_nodes(tree, l, j, k)
    if tree.degree(l) != 1:
        raise NotALeaf(f"{l} has degree {tree.degree(l)}")
    if not tree.has_edge(l, j):
        raise NotAttached(f"{l} is not attached to {j}")
    if k == l:
        raise KInsideSubtree(f"cannot transfer {l} onto itself")
    if not tree.has_edge(j, k):
        raise JKNotNeighbors(f"{j} and {k} are not neighbors")
    return _finish(tree, LeafTransfer(l, j, k),
                   {canonical_edge(l, j)}, {canonical_edge(l, k): (l, j, k)})


def _check_members(tree: LabeledTree, s: SuperLeaf) -> None:
    for v in s.members:
        if not 1 <= v <= tree.n:
            raise NodeOutOfRange(f"member {v} not in 1..{tree.n}")


def super_leafization(tree: LabeledTree, s: SuperLeaf, k: int):
    """Rewire the root's outside neighbors except ``k`` onto ``k``."""
    _check_members(tree, s)
    _check_nodes(tree, k)
    r = s.root
    if k in s.members:
        raise KInsideSubtree(f"{k} is a member of the subtree")
    adj = tree.adjacency
    for v in s.members:
        if v != r and adj[v] - s.members:
            raise SubtreeLeaks(f"member {v} has edges leaving the subtree")
    outside = adj[r] - s.members
    if k not in outside:
        raise NotNeighbors(f"{k} is not a neighbor of root {r}")
    if len(outside) <= 1:
        raise RootAlreadySuperLeaf(f"subtree at {r} already hangs off a single node")
    removed, added = set(), {}
    for p in sorted(outside - {k}):
        removed.add(canonical_edge(r, p))
        added[canonical_edge(k, p)] = (k, r, p)
    return _finish(tree, SuperLeafization(s, k), removed, added)


def super_leaf_transfer(tree: LabeledTree, s: SuperLeaf, j: int, k: int):
    """Move the super-leaf ``s`` from ``j`` to ``j``'s neighbor ``k``."""
    _check_members(tree, s)
    _check_nodes(tree, j, k)
    if not tree.is_super_leaf(s):
        raise NotASuperLeaf(f"members {sorted(s.members)} do not form a super-leaf at {s.root}")
    (att,) = tree.outside_neighbors(s)[s.root]
    if att != j:
        raise WrongAttachment(f"subtree at {s.root} hangs off {att}, not {j}")
    if k in s.members:
        raise KInsideSubtree(f"{k} is a member of the subtree")
    if not tree.has_edge(j, k):
        raise JKNotNeighbors(f"{j} and {k} are not neighbors")
    r = s.root
    return _finish(tree, SuperLeafTransfer(s, j, k),
                   {canonical_edge(r, j)}, {canonical_edge(r, k): (r, j, k)})


def apply(tree: LabeledTree, op: TopologyOp):
    if isinstance(op, Leafization):
        return leafization(tree, op.j, op.k)
    if isinstance(op, LeafTransfer):
        return leaf_transfer(tree, op.l, op.j, op.k)
    if isinstance(op, SuperLeafization):
        return super_leafization(tree, op.s, op.k)
    if isinstance(op, SuperLeafTransfer):
        return super_leaf_transfer(tree, op.s, op.j, op.k)
    raise OpError(f"unknown operation {op!r}")


def touched_nodes(tree: LabeledTree, op: TopologyOp) -> frozenset[int]:
    """Nodes whose incident edges change when ``op`` is applied to ``tree``."""
    if isinstance(op, Leafization):
        return frozenset(tree.neighbors(op.j) | {op.j})
    if isinstance(op, LeafTransfer):
        return frozenset((op.l, op.j, op.k))
    if isinstance(op, SuperLeafization):
        return frozenset((tree.neighbors(op.s.root) - op.s.members) | {op.s.root})
    return frozenset((op.s.root, op.j, op.k))


def certificate_ok(before: LabeledTree, entry: OpLogEntry, max_hops: int = 2) -> bool:
    """Check every certificate path is a real path of ``before`` within ``max_hops``."""
    if {e for e, _ in entry.hop_certificate} != set(entry.edges_added):
        return False
    for (u, w), path in entry.hop_certificate:
        if {path[0], path[-1]} != {u, w} or len(path) - 1 > max_hops:
            return False
        if any(not before.has_edge(a, b) for a, b in zip(path, path[1:])):
            return False
    return True


def valid_ops(tree: LabeledTree) -> Iterator[TopologyOp]:
    """Every operation whose preconditions hold on ``tree``.

    Super-leafizations range over every root and every union of whole
    branches at that root that leaves at least two outside neighbors.
    """
    adj = tree.adjacency
    for j in tree.nodes():
        if len(adj[j]) > 1:
            for k in sorted(adj[j]):
                yield Leafization(j, k)
    for l in tree.leaves():
        (j,) = adj[l]
        for k in sorted(adj[j] - {l}):
            yield LeafTransfer(l, j, k)
    for r in tree.nodes():
        nbrs = sorted(adj[r])
        branches = {p: tree.branch(p, r) for p in nbrs}
        for size in range(0, len(nbrs) - 1):
            for inside in itertools.combinations(nbrs, size):
                members = frozenset((r,)).union(*(branches[p] for p in inside))
                s = SuperLeaf(r, members)
                for k in nbrs:
                    if k not in inside:
                        yield SuperLeafization(s, k)
    for r in tree.nodes():
        for j in sorted(adj[r]):
            s = SuperLeaf(r, tree.branch(r, j))
            for k in sorted(adj[j] - {r}):
                yield SuperLeafTransfer(s, j, k)


def random_op(tree: LabeledTree, rng) -> TopologyOp:
    """A uniformly chosen operation kind with random arguments meeting its preconditions.

    Kinds with no valid instance on ``tree`` are skipped; raises
    :class:`OpError` if the tree (n <= 2) admits no rewire of any kind.
    """
    adj = tree.adjacency
    inner = [v for v in tree.nodes() if len(adj[v]) > 1]

    def pick(xs):
        return xs[int(rng.integers(len(xs)))]

    kinds = ["L", "LT", "SL", "SLT"]
    rng.shuffle(kinds)
    for kind in kinds:
        if kind == "L" and inner:
            j = pick(inner)
            return Leafization(j, pick(sorted(adj[j])))
        if kind == "LT":
            cands = [l for l in tree.leaves() if len(adj[next(iter(adj[l]))]) > 1]
            if cands:
                l = pick(cands)
                (j,) = adj[l]
                return LeafTransfer(l, j, pick(sorted(adj[j] - {l})))
        if kind == "SL" and inner:
            r = pick(inner)
            nbrs = sorted(adj[r])
            order = rng.permutation(len(nbrs))
            inside = [nbrs[i] for i in order[: int(rng.integers(len(nbrs) - 1))]]
            outside = [nbrs[i] for i in order[len(inside):]]
            members = frozenset((r,)).union(*(tree.branch(p, r) for p in inside))
            return SuperLeafization(SuperLeaf(r, members), pick(outside))
        if kind == "SLT" and inner:
            j = pick(inner)
            nbrs = sorted(adj[j])
            r = pick(nbrs)
            k = pick([x for x in nbrs if x != r])
            return SuperLeafTransfer(SuperLeaf(r, tree.branch(r, j)), j, k)
    raise OpError(f"no operation applies to a tree with {tree.n} nodes")


# text log ---------------------------------------------------------------

def _fmt_super(s: SuperLeaf) -> str:
    return f"{s.root}:" + ",".join(str(v) for v in sorted(s.members))


def _parse_super(tok: str) -> SuperLeaf:
    root, _, rest = tok.partition(":")
    return SuperLeaf(int(root), frozenset(int(v) for v in rest.split(",") if v))


def op_to_text(op: TopologyOp) -> str:
    if isinstance(op, Leafization):
        return f"L {op.j} {op.k}"
    if isinstance(op, LeafTransfer):
        return f"LT {op.l} {op.j} {op.k}"
    if isinstance(op, SuperLeafization):
        return f"SL {_fmt_super(op.s)} {op.k}"
    return f"SLT {_fmt_super(op.s)} {op.j} {op.k}"


def parse_op(text: str) -> TopologyOp:
    parts = text.split()
    try:
        kind, args = parts[0], parts[1:]
        if kind == "L" and len(args) == 2:
            return Leafization(int(args[0]), int(args[1]))
        if kind == "LT" and len(args) == 3:
            return LeafTransfer(*(int(a) for a in args))
        if kind == "SL" and len(args) == 2:
            return SuperLeafization(_parse_super(args[0]), int(args[1]))
        if kind == "SLT" and len(args) == 3:
            return SuperLeafTransfer(_parse_super(args[0]), int(args[1]), int(args[2]))
    except (ValueError, IndexError) as exc:
        raise OpLogFormatError(f"bad operation {text!r}: {exc}") from None
    raise OpLogFormatError(f"bad operation {text!r}")


def _fmt_edges(sign: str, edges) -> str:
    return " ".join(f"{sign}{u}-{v}" for u, v in sorted(edges))


def _parse_edges(sign: str, text: str) -> frozenset[Edge]:
    out = set()
    for tok in text.split():
        if not tok.startswith(sign):
            raise OpLogFormatError(f"edge token {tok!r} should start with {sign!r}")
        u, sep, v = tok[1:].partition("-")
        if not sep:
            raise OpLogFormatError(f"bad edge token {tok!r}")
        try:
            out.add(canonical_edge(int(u), int(v)))
        except ValueError:
            raise OpLogFormatError(f"bad edge token {tok!r}") from None
    return frozenset(out)


def entry_to_line(entry: OpLogEntry) -> str:
    """``KIND args | -u-v ... | +u-v ...``"""
    return " | ".join((op_to_text(entry.op), _fmt_edges("-", entry.edges_removed),
                       _fmt_edges("+", entry.edges_added)))


def parse_entry_line(line: str) -> tuple[TopologyOp, frozenset[Edge], frozenset[Edge]]:
    """Parse a log line into (op, removed edges, added edges)."""
    parts = line.split("|")
    if len(parts) != 3:
        raise OpLogFormatError(f"expected three '|'-separated fields: {line!r}")
    return (parse_op(parts[0]), _parse_edges("-", parts[1]), _parse_edges("+", parts[2]))
