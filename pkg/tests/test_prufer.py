import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swarmtopo.errors import CapExceeded, SymbolOutOfRange
from swarmtopo.prufer import (
    PruferSequence,
    decode,
    encode,
    enumerate_trees,
    random_sequence,
    random_tree,
    tree_count,
)
from swarmtopo.tree import path_tree, star_tree

from .oracles import nx_prufer, nx_tree_from_prufer, union_find_is_tree
from .strategies import trees


def test_encode_examples():
    assert encode(path_tree(4)).attachments.symbols == (2, 3)
    assert encode(path_tree(4)).removed_leaves == (1, 2)
    assert encode(star_tree(5)).attachments.symbols == (1, 1, 1)
    assert encode(path_tree(2)).attachments.symbols == ()


def test_decode_examples():
    assert decode([2, 3], n=4) == path_tree(4)
    assert decode([1, 1, 1], n=5) == star_tree(5)
    assert decode(PruferSequence(2, ())) == path_tree(2)


@pytest.mark.parametrize("n,count", [(2, 1), (3, 3), (4, 16), (5, 125), (6, 1296), (7, 16807)])
def test_enumeration_matches_cayley(n, count):
    ts = list(enumerate_trees(n))
    assert len(ts) == count == tree_count(n) == n ** (n - 2)
    assert len(set(ts)) == count


def test_enumeration_cap():
    with pytest.raises(CapExceeded):
        next(enumerate_trees(8))


def test_sequence_validation():
    with pytest.raises(SymbolOutOfRange):
        PruferSequence(4, (2, 5))
    with pytest.raises(SymbolOutOfRange):
        PruferSequence(4, (0, 1))
    with pytest.raises(ValueError):
        PruferSequence(4, (1,))


@given(trees(max_n=30))
def test_encode_matches_networkx(t):
    assert list(encode(t).attachments) == nx_prufer(t)


@given(st.integers(3, 30).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.integers(1, n), min_size=n - 2, max_size=n - 2))))
def test_decode_matches_networkx(case):
    n, seq = case
    t = decode(seq, n=n)
    assert union_find_is_tree(n, t.edges)
    assert t.edges == nx_tree_from_prufer(seq, n)
    assert list(encode(t).attachments) == seq


@given(trees(max_n=30))
def test_degree_equals_occurrences_plus_one(t):
    seq = encode(t).attachments.symbols
    for v in t.nodes():
        assert t.degree(v) == seq.count(v) + 1


@given(trees(max_n=30))
def test_elimination_trace_is_consistent(t):
    tr = encode(t)
    assert len(tr.removed_leaves) == len(tr.attachments) == t.n - 2
    assert len(set(tr.removed_leaves)) == t.n - 2
    # the two survivors are joined by the last edge
    rest = set(t.nodes()) - set(tr.removed_leaves)
    assert len(rest) == 2 and t.n in rest and t.has_edge(*rest)


def test_random_helpers_are_seeded():
    a = random_sequence(10, np.random.default_rng(3))
    b = random_sequence(10, np.random.default_rng(3))
    assert a == b and len(a) == 8
    t = random_tree(10, np.random.default_rng(3))
    assert union_find_is_tree(10, t.edges)


def test_large_roundtrip(rng):
    n = 5000
    seq = list(rng.integers(1, n + 1, n - 2))
    t = decode(seq, n=n)
    assert list(encode(t).attachments) == seq
    assert math.isclose(sum(t.degrees()), 2 * (n - 1))
