"""Exception hierarchy.

Every error raised by the package derives from :class:`SwarmTopoError` and,
where the failure is a bad argument rather than a runtime condition, also from
:class:`ValueError`.
"""


class SwarmTopoError(Exception):
    pass


# tree-core
class TreeError(SwarmTopoError, ValueError):
    pass


class WrongEdgeCount(TreeError):
    pass


class Disconnected(TreeError):
    pass


class SelfLoop(TreeError):
    pass


class DuplicateEdge(TreeError):
    pass


class NodeOutOfRange(TreeError):
    pass


class NotAnEdge(TreeError):
    pass


class TreeFormatError(TreeError):
    pass


# prufer
class SymbolOutOfRange(TreeError):
    pass


class CapExceeded(SwarmTopoError, ValueError):
    pass


# ops
class OpError(SwarmTopoError, ValueError):
    """A topology operation's precondition does not hold."""


class NotNeighbors(OpError):
    pass


class AlreadyLeaf(OpError):
    pass


class NotALeaf(OpError):
    pass


class NotAttached(OpError):
    pass


class JKNotNeighbors(OpError):
    pass


class SubtreeLeaks(OpError):
    pass


class KInsideSubtree(OpError):
    pass


class RootAlreadySuperLeaf(OpError):
    pass


class NotASuperLeaf(OpError):
    pass


class WrongAttachment(OpError):
    pass


class TreeInvariantBroken(SwarmTopoError, AssertionError):
    """An operation produced a non-tree. Always an implementation bug."""


class OpLogFormatError(SwarmTopoError, ValueError):
    pass


# planner
class SizeMismatch(SwarmTopoError, ValueError):
    pass


class ReplayStepError(SwarmTopoError):
    def __init__(self, index: int, cause: Exception):
        super().__init__(f"step {index}: {type(cause).__name__}: {cause}")
        self.index = index
        self.cause = cause


# protocol
class NoConvergence(SwarmTopoError):
    def __init__(self, rounds: int, message: str = ""):
        super().__init__(message or f"no fixed point after {rounds} rounds")
        self.rounds = rounds


class MonovariantBroken(SwarmTopoError, AssertionError):
    """A committing round failed to make the guaranteed progress."""


class EventLogFormatError(SwarmTopoError, ValueError):
    pass


# spatial
class SpatialError(SwarmTopoError):
    pass


class LinkStretch(SpatialError):
    pass


class ApproachTimeout(SpatialError):
    pass


class ArrangeTimeout(SpatialError):
    pass


class RobotBusy(SpatialError):
    pass


class RangeConfigError(SwarmTopoError, ValueError):
    pass
