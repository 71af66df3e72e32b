"""Synchronous-round line and star formation using only local information.

Every round runs the same phases:

1. ``ViewShare`` (two exchanges): each node tells its neighbors its degree,
   role and neighbor set, then the degrees of its neighbors. A node's
   :class:`LocalView` is assembled solely from what it received.
2. ``OpPropose``: nodes whose rule fires send the proposal to every other
   participant.
3. ``OpAccept`` / ``OpReject``: each participant accepts the proposal with
   the lowest proposer label (its own proposal included) and rejects the rest.
4. ``OpCommit``: a proposer accepted by all participants commits. Committed
   operations touch pairwise disjoint node sets and are applied in proposer
   order.
5. ``RoleUpdate``: state handed to a neighbor after a commit.

The harness owns the ground-truth tree; nodes never read it. The only place
the harness fills in structure for a node is the member set of a transferred
super-leaf, which is the whole branch behind its root.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import ops
from .metrics import branching_count, excess_degree
from .errors import EventLogFormatError, MonovariantBroken, NoConvergence
from .ops import (
    Leafization,
    LeafTransfer,
    OpLogEntry,
    SuperLeafTransfer,
    TopologyOp,
)
from .tree import LabeledTree, SuperLeaf, validate_tree


class Protocol(str, enum.Enum):
    LINE = "line"
    STAR = "star"


class RoleKind(str, enum.Enum):
    FREE = "free"
    BUSY = "busy"
    LINE_ENDPOINT = "endpoint"
    STAR_CENTER_CANDIDATE = "center"
    CARRIER = "carrier"


@dataclass(frozen=True)
class Role:
    kind: RoleKind = RoleKind.FREE
    token: Optional[int] = None                 # proposer label while busy
    score: Optional[tuple[int, int]] = None     # star candidacy score
    carry: Optional[tuple[int, int]] = None     # (branch root, node it came from)

    @classmethod
    def free(cls) -> "Role":
        return cls()


class MsgKind(str, enum.Enum):
    VIEW_SHARE = "ViewShare"
    OP_PROPOSE = "OpPropose"
    OP_ACCEPT = "OpAccept"
    OP_REJECT = "OpReject"
    OP_COMMIT = "OpCommit"
    ROLE_UPDATE = "RoleUpdate"


@dataclass(frozen=True)
class ProtocolMessage:
    frm: int
    to: int
    kind: MsgKind
    round: int
    payload: object = None


@dataclass(frozen=True)
class LocalView:
    self_id: int
    neighbor_ids: frozenset[int]
    neighbor_degrees: dict[int, int]
    two_hop: dict[int, frozenset[int]]
    two_hop_degrees: dict[int, int]
    roles: dict[int, Role]

    @property
    def degree(self) -> int:
        return len(self.neighbor_ids)

    @property
    def role(self) -> Role:
        return self.roles[self.self_id]

    def visible_size(self, x: int) -> int:
        """Nodes of the branch behind neighbor ``x`` counted within three hops."""
        s = self.neighbor_degrees[x]
        for y in self.two_hop[x]:
            if y != self.self_id:
                s += self.two_hop_degrees[y] - 1
        return s


@dataclass(frozen=True)
class Proposal:
    """``kind`` "L": leafize ``j`` toward ``k``. "T": move the branch rooted at
    ``r`` from ``j`` to ``k``. ``tag`` says which rule branch produced it."""

    kind: str
    j: int
    k: int
    r: Optional[int] = None
    tag: str = ""

    @property
    def proposer(self) -> int:
        return self.j


def _score(view: LocalView, x: int) -> tuple[int, int]:
    deg = view.degree if x == view.self_id else view.neighbor_degrees[x]
    return (deg, x)


def star_rule(view: LocalView) -> Optional[Proposal]:
    """Leafize toward the best-scoring neighbor when it outranks this node.

    Score is ``(degree, label)``. A node that outranks all its neighbors is a
    center candidate and stays put.
    """
    if view.degree <= 1:
        return None
    best = max(view.neighbor_ids, key=lambda x: _score(view, x))
    if _score(view, best) > _score(view, view.self_id):
        return Proposal("L", view.self_id, best, tag="defer")
    return None


def line_rule(view: LocalView) -> Optional[Proposal]:
    """Shed one branch of a node with three or more neighbors.

    * With a leaf neighbor: hang the highest-labeled other leaf (or, with a
      single leaf, the lowest-labeled branch) onto the lowest leaf, which
      removes a degree excess.
    * Carrying a branch handed over last round: pass it on to the smallest
      visible neighbor other than where it came from, preferring degree-2
      neighbors.
    * Otherwise push the smallest visible branch onto the smallest visible
      degree-2 neighbor.
    """
    if view.degree < 3:
        return None
    j = view.self_id
    nb = sorted(view.neighbor_ids)
    deg = view.neighbor_degrees
    key = lambda x: (view.visible_size(x), x)  # noqa: E731
    leaves = [x for x in nb if deg[x] == 1]
    if leaves:
        k = leaves[0]
        if len(leaves) > 1:
            r = leaves[-1]
        else:
            r = next(x for x in nb if deg[x] > 1)
        return Proposal("T", j, k, r, tag="drop")
    carry = view.role.carry
    if carry and carry[0] in view.neighbor_ids and carry[1] in view.neighbor_ids:
        r, frm = carry
        rest = [x for x in nb if x not in (r, frm)]
        cand = [x for x in rest if deg[x] == 2] or rest
        return Proposal("T", j, min(cand, key=key), r, tag="carry")
    d2 = [x for x in nb if deg[x] == 2]
    if not d2:
        return None
    k = min(d2, key=key)
    r = min((x for x in nb if x != k), key=key)
    return Proposal("T", j, k, r, tag="push")


RULES = {Protocol.LINE: line_rule, Protocol.STAR: star_rule}


def participants(p: Proposal, view: LocalView) -> frozenset[int]:
    if p.kind == "L":
        return frozenset(view.neighbor_ids | {p.j})
    return frozenset((p.j, p.k, p.r))


def _well_formed(p: Proposal, view: LocalView) -> bool:
    if p.kind == "L":
        return p.k in view.neighbor_ids and view.degree > 1
    return (p.kind == "T" and p.r != p.k and p.r in view.neighbor_ids
            and p.k in view.neighbor_ids)


def resolve_op(tree: LabeledTree, p: Proposal) -> TopologyOp:
    """Turn a committed proposal into a concrete operation on ``tree``."""
    if p.kind == "L":
        return Leafization(p.j, p.k)
    if tree.degree(p.r) == 1:
        return LeafTransfer(p.r, p.j, p.k)
    return SuperLeafTransfer(SuperLeaf(p.r, tree.branch(p.r, p.j)), p.j, p.k)


@dataclass
class RoundRecord:
    round: int
    messages: list[ProtocolMessage]
    proposals: list[Proposal]
    entries: list[OpLogEntry]
    tree_after: LabeledTree


@dataclass
class RoundState:
    round: int
    tree: LabeledTree
    roles: dict[int, Role]
    inboxes: dict[int, list[ProtocolMessage]] = field(default_factory=dict)
    committed_ops: list[TopologyOp] = field(default_factory=list)
    last: Optional[RoundRecord] = None

    @classmethod
    def initial(cls, tree: LabeledTree) -> "RoundState":
        return cls(0, tree, {v: Role.free() for v in tree.nodes()})


# called with the round-start tree and the round's operations in commit order
Executor = Callable[[LabeledTree, list[TopologyOp]], None]


class _Net:
    def __init__(self, tree: LabeledTree, rnd: int):
        self.tree = tree
        self.round = rnd
        self.log: list[ProtocolMessage] = []
        self.inbox: dict[int, list[ProtocolMessage]] = {v: [] for v in tree.nodes()}

    def send(self, frm, to, kind, payload=None):
        m = ProtocolMessage(frm, to, kind, self.round, payload)
        self.log.append(m)
        self.inbox[to].append(m)

    def drain(self, v, kind):
        box = self.inbox[v]
        got = [m for m in box if m.kind == kind]
        self.inbox[v] = [m for m in box if m.kind != kind]
        return got


def _share_views(net: _Net, roles: dict[int, Role]) -> dict[int, LocalView]:
    tree = net.tree
    for v in tree.nodes():
        nb = tree.neighbors(v)
        for x in nb:
            net.send(v, x, MsgKind.VIEW_SHARE, ("self", len(nb), roles[v], nb))
    first = {}
    for v in tree.nodes():
        first[v] = {m.frm: m.payload for m in net.drain(v, MsgKind.VIEW_SHARE)}
    for v in tree.nodes():
        digest = {x: p[1] for x, p in first[v].items()}
        for x in first[v]:
            net.send(v, x, MsgKind.VIEW_SHARE, ("nbr-degrees", digest))
    views = {}
    for v in tree.nodes():
        second = {m.frm: m.payload[1] for m in net.drain(v, MsgKind.VIEW_SHARE)}
        got = first[v]
        two_deg = {}
        for x, d in second.items():
            two_deg.update(d)
        two_deg.pop(v, None)
        vroles = {x: p[2] for x, p in got.items()}
        vroles[v] = roles[v]
        views[v] = LocalView(
            self_id=v,
            neighbor_ids=frozenset(got),
            neighbor_degrees={x: p[1] for x, p in got.items()},
            two_hop={x: p[3] for x, p in got.items()},
            two_hop_degrees=two_deg,
            roles=vroles,
        )
    return views


def local_views(tree: LabeledTree, roles: Optional[dict[int, Role]] = None) -> dict[int, LocalView]:
    """The views every node would assemble from one ``ViewShare`` phase."""
    if roles is None:
        roles = {v: Role.free() for v in tree.nodes()}
    return _share_views(_Net(tree, 0), roles)


def check_progress(protocol: Protocol, before: LabeledTree, after: LabeledTree) -> None:
    """Raise :class:`MonovariantBroken` unless a committing round made progress.

    Star rounds must strictly lower the number of nodes with degree above one.
    Line rounds must not raise ``sum(max(deg - 2, 0))``; a strict drop every
    round is not guaranteed because a branch may first be carried toward a
    node with room for it.
    """
    if protocol is Protocol.STAR:
        a, b = branching_count(before), branching_count(after)
        if not b < a:
            raise MonovariantBroken(f"branching count {a} -> {b}")
    else:
        a, b = excess_degree(before), excess_degree(after)
        if b > a:
            raise MonovariantBroken(f"excess degree {a} -> {b}")


def step_round(state: RoundState, protocol: Protocol | str,
               executor: Optional[Executor] = None) -> RoundState:
    protocol = Protocol(protocol)
    rule = RULES[protocol]
    rnd = state.round + 1
    tree = state.tree
    net = _Net(tree, rnd)
    views = _share_views(net, state.roles)

    proposals: dict[int, Proposal] = {}
    parts: dict[int, frozenset[int]] = {}
    for v in tree.nodes():
        p = rule(views[v])
        if p is None or not _well_formed(p, views[v]):
            continue
        proposals[v] = p
        parts[v] = participants(p, views[v])
        for x in sorted(parts[v] - {v}):
            net.send(v, x, MsgKind.OP_PROPOSE, p)

    # each participant accepts the lowest proposer, counting its own proposal
    winner: dict[int, int] = {}
    for v in tree.nodes():
        cands = [m.frm for m in net.drain(v, MsgKind.OP_PROPOSE)]
        if v in proposals:
            cands.append(v)
        if not cands:
            continue
        win = min(cands)
        winner[v] = win
        for c in sorted(set(cands)):
            if c != v:
                net.send(v, c, MsgKind.OP_ACCEPT if c == win else MsgKind.OP_REJECT, c)

    roles = dict(state.roles)
    committed: list[Proposal] = []
    for v in sorted(proposals):
        accepts = {m.frm for m in net.drain(v, MsgKind.OP_ACCEPT)}
        net.drain(v, MsgKind.OP_REJECT)
        if winner.get(v) == v and parts[v] - {v} <= accepts:
            committed.append(proposals[v])
            for x in parts[v]:
                roles[x] = Role(RoleKind.BUSY, token=v, carry=state.roles[x].carry)
            for x in sorted(parts[v] - {v}):
                net.send(v, x, MsgKind.OP_COMMIT, proposals[v])

    entries = []
    ops_done = []
    touched: set[int] = set()
    for p in committed:
        op = resolve_op(tree, p)
        tree, entry = ops.apply(tree, op)
        entries.append(entry)
        ops_done.append(op)
        touched |= parts[p.j]
    if executor is not None and ops_done:
        executor(state.tree, ops_done)

    # hand-offs and role refresh
    carries = {v: r.carry for v, r in state.roles.items()
               if r.carry is not None and v not in touched}
    for p in committed:
        if p.kind == "T" and p.tag in ("push", "carry"):
            net.send(p.j, p.k, MsgKind.ROLE_UPDATE, ("carry", p.r, p.j))
            carries[p.k] = (p.r, p.j)
    for v in tree.nodes():
        deg = tree.degree(v)
        if v in carries:
            roles[v] = Role(RoleKind.CARRIER, carry=carries[v])
        elif protocol is Protocol.LINE and deg == 1:
            roles[v] = Role(RoleKind.LINE_ENDPOINT)
        elif protocol is Protocol.STAR and deg > 1 and all(
                (tree.degree(x), x) < (deg, v) for x in tree.neighbors(v)):
            roles[v] = Role(RoleKind.STAR_CENTER_CANDIDATE, score=(deg, v))
        else:
            roles[v] = Role.free()

    record = RoundRecord(rnd, net.log, sorted(proposals.values(), key=lambda p: p.j),
                         entries, tree)
    return RoundState(rnd, tree, roles, net.inbox, ops_done, record)


@dataclass
class ProtocolTrace:
    initial: LabeledTree
    protocol: Protocol
    rounds: list[RoundRecord] = field(default_factory=list)

    def committing_rounds(self) -> list[RoundRecord]:
        return [r for r in self.rounds if r.entries]

    def trees(self) -> list[LabeledTree]:
        """Initial tree followed by the tree after every committing round."""
        return [self.initial] + [r.tree_after for r in self.committing_rounds()]


@dataclass
class RunResult:
    final: LabeledTree
    rounds: int
    trace: ProtocolTrace


def run_to_fixed_point(initial: LabeledTree, protocol: Protocol | str,
                       max_rounds: Optional[int] = None,
                       executor: Optional[Executor] = None,
                       keep_messages: bool = True,
                       check_monovariant: bool = True) -> RunResult:
    """Step until a round commits nothing.

    ``rounds`` counts committing rounds. ``executor(tree, ops)`` receives
    every committing round's operations, e.g. to move robots before rewiring.
    With ``check_monovariant`` every committing round goes through
    :func:`check_progress`.
    """
    protocol = Protocol(protocol)
    if max_rounds is None:
        max_rounds = 50 * initial.n
    state = RoundState.initial(initial)
    trace = ProtocolTrace(initial, protocol)
    committing = 0
    while True:
        before = state.tree
        state = step_round(state, protocol, executor)
        rec = state.last
        if not keep_messages:
            rec.messages = []
        trace.rounds.append(rec)
        if not rec.entries:
            return RunResult(state.tree, committing, trace)
        committing += 1
        if check_monovariant:
            check_progress(protocol, before, state.tree)
        if committing > max_rounds:
            raise NoConvergence(max_rounds)


# audit ------------------------------------------------------------------

@dataclass
class AuditReport:
    far_messages: list[ProtocolMessage]
    far_rewires: list[tuple[int, OpLogEntry]]
    overlapping: list[int]
    broken: list[int]

    @property
    def ok(self) -> bool:
        return not (self.far_messages or self.far_rewires or self.overlapping or self.broken)


def audit_trace(trace: ProtocolTrace) -> AuditReport:
    """Re-walk a run from its initial tree using only the recorded deltas.

    Flags messages between non-neighbors, added edges whose endpoints were
    more than two hops apart (or whose certificate is not a real path),
    rounds whose operations share nodes, and deltas that break the tree.
    """
    rep = AuditReport([], [], [], [])
    tree = trace.initial
    for rec in trace.rounds:
        for m in rec.messages:
            if not (1 <= m.frm <= tree.n and 1 <= m.to <= tree.n) or not tree.has_edge(m.frm, m.to):
                rep.far_messages.append(m)
        seen: set[int] = set()
        for entry in rec.entries:
            far = not ops.certificate_ok(tree, entry) or any(
                tree.distance(u, w) > 2 for u, w in entry.edges_added)
            if far:
                rep.far_rewires.append((rec.round, entry))
            nodes = {x for e in entry.edges_removed | entry.edges_added for x in e}
            if nodes & seen:
                rep.overlapping.append(rec.round)
            seen |= nodes
            edges = (tree.edges - entry.edges_removed) | entry.edges_added
            try:
                tree = validate_tree(tree.n, edges)
            except Exception:
                rep.broken.append(rec.round)
                return rep
    return rep


def locality_audit(trace: ProtocolTrace) -> bool:
    return audit_trace(trace).ok


# event log --------------------------------------------------------------

def _payload_text(p) -> str:
    if isinstance(p, Proposal):
        return f"{p.kind} j={p.j} k={p.k} r={p.r} {p.tag}".rstrip()
    if isinstance(p, tuple) and p and p[0] == "self":
        return f"deg={p[1]} role={p[2].kind.value} nbrs=" + ",".join(map(str, sorted(p[3])))
    if isinstance(p, tuple) and p and p[0] == "nbr-degrees":
        return "nbr-deg=" + ",".join(f"{x}:{d}" for x, d in sorted(p[1].items()))
    if isinstance(p, tuple) and p and p[0] == "carry":
        return f"carry r={p[1]} from={p[2]}"
    return "" if p is None else str(p)


def write_event_log(trace: ProtocolTrace) -> str:
    """One line per message and per applied operation, grouped by round."""
    t = trace.initial
    lines = [f"n={t.n}", "initial " + " ".join(f"{u}-{v}" for u, v in sorted(t.edges)),
             f"protocol {trace.protocol.value}"]
    for rec in trace.rounds:
        for m in rec.messages:
            lines.append(f"R {rec.round} MSG {m.kind.value} {m.frm} {m.to} {_payload_text(m.payload)}".rstrip())
        for e in rec.entries:
            lines.append(f"R {rec.round} OP {ops.entry_to_line(e)}")
        lines.append(f"R {rec.round} END {len(rec.entries)}")
    return "\n".join(lines) + "\n"


def parse_event_log(text: str) -> ProtocolTrace:
    """Rebuild a trace (messages keep their text payload) for auditing."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 3 or not lines[0].startswith("n=") or not lines[1].startswith("initial"):
        raise EventLogFormatError("missing n=/initial/protocol header")
    try:
        n = int(lines[0][2:])
        edges = [tuple(int(x) for x in tok.split("-")) for tok in lines[1].split()[1:]]
        initial = validate_tree(n, edges)
        protocol = Protocol(lines[2].split()[1])
    except (ValueError, IndexError) as exc:
        raise EventLogFormatError(f"bad header: {exc}") from None
    trace = ProtocolTrace(initial, protocol)
    cur: dict[int, RoundRecord] = {}
    tree = initial
    for ln in lines[3:]:
        parts = ln.split(maxsplit=3)
        if len(parts) < 3 or parts[0] != "R":
            raise EventLogFormatError(f"bad event line {ln!r}")
        try:
            rnd = int(parts[1])
        except ValueError:
            raise EventLogFormatError(f"bad round in {ln!r}") from None
        rec = cur.get(rnd)
        if rec is None:
            rec = cur[rnd] = RoundRecord(rnd, [], [], [], tree)
            trace.rounds.append(rec)
        what = parts[2]
        rest = parts[3] if len(parts) > 3 else ""
        if what == "MSG":
            f = rest.split(maxsplit=3)
            try:
                kind = MsgKind(f[0])
                msg = ProtocolMessage(int(f[1]), int(f[2]), kind, rnd, f[3] if len(f) > 3 else None)
            except (ValueError, IndexError):
                raise EventLogFormatError(f"bad message line {ln!r}") from None
            rec.messages.append(msg)
        elif what == "OP":
            op, removed, added = ops.parse_entry_line(rest)
            cert = tuple(sorted((e, _guess_path(tree, e)) for e in added))
            rec.entries.append(OpLogEntry(op, removed, added, cert))
            try:
                tree = validate_tree(n, (tree.edges - removed) | added)
            except Exception:
                # leave the broken delta for the audit to report
                pass
            rec.tree_after = tree
        elif what == "END":
            rec.tree_after = tree
        else:
            raise EventLogFormatError(f"unknown event {what!r}")
    return trace


def _guess_path(tree: LabeledTree, e) -> tuple[int, ...]:
    u, w = e
    if not (1 <= u <= tree.n and 1 <= w <= tree.n) or u == w:
        return (u, w)
    return tuple(tree.path_between(u, w))


__all__ = [
    "Protocol", "Role", "RoleKind", "MsgKind", "ProtocolMessage", "LocalView",
    "Proposal", "RoundState", "RoundRecord", "ProtocolTrace", "RunResult",
    "AuditReport", "line_rule", "star_rule", "step_round", "run_to_fixed_point",
    "resolve_op", "audit_trace", "locality_audit", "write_event_log",
    "parse_event_log", "local_views", "check_progress",
]
