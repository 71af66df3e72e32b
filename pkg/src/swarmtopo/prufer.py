"""Prüfer sequences, lowest-leaf elimination traces and tree enumeration."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import kernels
from .errors import CapExceeded, SymbolOutOfRange, TreeError
from .tree import LabeledTree, canonical_edge

ENUMERATION_CAP = 7


@dataclass(frozen=True)
class PruferSequence:
    n: int
    symbols: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))
        if self.n < 2:
            raise TreeError(f"need n >= 2, got {self.n}")
        if len(self.symbols) != self.n - 2:
            raise SymbolOutOfRange(
                f"sequence of length {len(self.symbols)} for n={self.n}; need {self.n - 2}")
        for s in self.symbols:
            if not 1 <= s <= self.n:
                raise SymbolOutOfRange(f"symbol {s} not in 1..{self.n}")

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)


@dataclass(frozen=True)
class EliminationTrace:
    """Leaves in removal order and the neighbor each one was attached to."""

    removed_leaves: tuple[int, ...]
    attachments: PruferSequence

    @property
    def n(self) -> int:
        return self.attachments.n


def encode(tree: LabeledTree) -> EliminationTrace:
    removed, attach = kernels.prufer_encode(tree.n, sorted(tree.edges))
    seq = PruferSequence(tree.n, tuple(attach))
    return EliminationTrace(tuple(removed), seq)


def decode(seq: PruferSequence | Sequence[int], n: int | None = None) -> LabeledTree:
    """Inverse of :func:`encode`.

    Accepts a :class:`PruferSequence` or a bare symbol list; for a bare list
    ``n`` defaults to ``len(seq) + 2``.
    """
    if not isinstance(seq, PruferSequence):
        seq = PruferSequence(len(seq) + 2 if n is None else n, tuple(seq))
    edges = kernels.prufer_decode(seq.n, list(seq.symbols))
    return LabeledTree._trusted(seq.n, frozenset(canonical_edge(u, v) for u, v in edges))


def tree_count(n: int) -> int:
    return n ** (n - 2)


def enumerate_trees(n: int, cap: int = ENUMERATION_CAP) -> Iterator[LabeledTree]:
    """Every labeled tree on ``n`` nodes, in lexicographic Prüfer order."""
    if n < 2:
        raise TreeError(f"need n >= 2, got {n}")
    if n > cap:
        raise CapExceeded(f"n={n} exceeds enumeration cap {cap}")
    for syms in itertools.product(range(1, n + 1), repeat=n - 2):
        yield decode(PruferSequence(n, syms))


def random_sequence(n: int, rng: np.random.Generator) -> PruferSequence:
    return PruferSequence(n, tuple(int(x) for x in rng.integers(1, n + 1, size=n - 2)))


def random_tree(n: int, rng: np.random.Generator) -> LabeledTree:
    """Uniformly random labeled tree."""
    return decode(random_sequence(n, rng))
