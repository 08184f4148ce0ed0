"""Block-system encoding, stabilizers, and closure.

Closure is cross-checked against a brute-force oracle that repeatedly merges
any two blocks whose representative forms are congruent modulo the stabilizer
relation lattice, with no residue-grouping shortcut.
"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torusblocks.blocks import (
    blocks_of,
    block_system_of,
    closure,
    coarsens,
    coarsenings,
    discrete_system,
    is_rgs,
    merge_blocks,
    num_blocks,
    one_block_system,
    rgs_normalize,
    stabilizer,
    stabilizer_relations,
    system_of_blocks,
)
from torusblocks.intlattice import hnf, hnf_reduce
from torusblocks.weightconfig import load_builtin

G2 = load_builtin("g2_a2")
F4 = load_builtin("f4_a1x4")


def random_systems(d):
    """Strategy: arbitrary block label strings of length d."""
    return st.lists(
        st.integers(0, d - 1), min_size=d, max_size=d
    ).map(rgs_normalize)


def brute_closure(c, b):
    """Merge any two blocks with congruent forms until stable."""
    labels = list(b)
    while True:
        h = hnf(stabilizer_relations(c, rgs_normalize(labels)), cols=c.r)
        merged = False
        for i in range(len(labels)):
            for j in range(i + 1, len(labels)):
                if labels[i] == labels[j]:
                    continue
                d = tuple(x - y for x, y in zip(c.forms[i], c.forms[j]))
                if hnf_reduce(h, d) == (0,) * c.r:
                    old = labels[j]
                    labels = [labels[i] if l == old else l for l in labels]
                    merged = True
        if not merged:
            return rgs_normalize(labels)


# ---------------------------------------------------------------------------
# Encoding utilities


def test_rgs_normalize_examples():
    assert rgs_normalize([5, 5, 2, 5, 2]) == (0, 0, 1, 0, 1)
    assert rgs_normalize([]) == ()


def test_is_rgs():
    assert is_rgs((0, 1, 0, 2))
    assert not is_rgs((1, 0))
    assert not is_rgs((0, 2))


def test_blocks_roundtrip():
    b = (0, 1, 0, 2, 1)
    assert blocks_of(b) == [[0, 2], [1, 4], [3]]
    assert system_of_blocks(blocks_of(b), 5) == b


def test_system_of_blocks_must_cover():
    with pytest.raises(ValueError):
        system_of_blocks([[0, 1]], 3)


def test_discrete_and_one_block():
    assert discrete_system(3) == (0, 1, 2)
    assert one_block_system(3) == (0, 0, 0)
    assert num_blocks(discrete_system(4)) == 4
    assert num_blocks(one_block_system(4)) == 1


@given(random_systems(7))
@settings(max_examples=100, deadline=None)
def test_rgs_normalize_idempotent(b):
    assert is_rgs(b)
    assert rgs_normalize(b) == b


def test_coarsens_examples():
    a = (0, 1, 2, 3)
    assert coarsens((0, 0, 1, 1), a)
    assert coarsens(a, a)
    assert not coarsens((0, 1, 2, 3), (0, 0, 1, 1))


@given(random_systems(6), st.integers(0, 5), st.integers(0, 5))
@settings(max_examples=100, deadline=None)
def test_merge_blocks_coarsens(b, i, j):
    k = num_blocks(b)
    i, j = i % k, j % k
    m = merge_blocks(b, min(i, j), max(i, j))
    assert coarsens(m, b)
    assert num_blocks(m) == k - (1 if i != j else 0)


# ---------------------------------------------------------------------------
# Stabilizers: hand-checked vectors on the rank-2 config

# g2_a2 forms in config order: a, b, -a-b, -a, -b, a+b, 0


def test_stabilizer_of_discrete():
    info = stabilizer(G2, discrete_system(7))
    assert info.dimension == 2
    assert info.exponent_raw == 1
    assert not info.finite


def test_stabilizer_dimension_one_hand_case():
    # a = 0: zeros at indices 0,3,6; b at 1,5; -b at 2,4
    b = (0, 1, 2, 0, 2, 1, 0)
    info = stabilizer(G2, b)
    assert info.dimension == 1
    assert info.torsion.invariant_factors == ()
    assert closure(G2, b) == b  # already closed


def test_stabilizer_order_four_hand_case():
    # 2a = 0 and b = a + 2b i.e. a = -b, with a of order 4: exponents
    # a,a,2a,-a,-a,2a,0 -> blocks {0,1},{2,5},{3,4},{6}; stabilizer Z/4
    b = (0, 0, 1, 2, 2, 1, 3)
    info = stabilizer(G2, b)
    assert info.dimension == 0
    assert info.torsion.invariant_factors == (4,)
    assert info.exponent_raw == 4
    assert info.finite


def test_stabilizer_one_block_kills_torus():
    info = stabilizer(G2, one_block_system(7))
    # all forms equal forces a = b = 0 exactly (0 is one of the forms)
    assert info.dimension == 0
    assert info.exponent_raw == 1


def test_stabilizer_relations_wrong_length():
    with pytest.raises(ValueError):
        stabilizer_relations(G2, (0, 1))


# ---------------------------------------------------------------------------
# Closure properties and the brute-force oracle


@given(random_systems(7))
@settings(max_examples=150, deadline=None)
def test_closure_properties_g2(b):
    cb = closure(G2, b)
    assert coarsens(cb, b)  # extensive
    assert closure(G2, cb) == cb  # idempotent
    # same stabilizer relation lattice
    ha = hnf(stabilizer_relations(G2, b), cols=G2.r)
    hb = hnf(stabilizer_relations(G2, cb), cols=G2.r)
    assert ha == hb
    assert cb == brute_closure(G2, b)


@given(random_systems(26))
@settings(max_examples=25, deadline=None)
def test_closure_properties_f4(b):
    cb = closure(F4, b)
    assert coarsens(cb, b)
    assert closure(F4, cb) == cb
    ha = hnf(stabilizer_relations(F4, b), cols=F4.r)
    hb = hnf(stabilizer_relations(F4, cb), cols=F4.r)
    assert ha == hb
    assert cb == brute_closure(F4, b)


def test_closure_merges_duplicate_forms():
    # f4_a1x4 carries the zero form twice; closure identifies the copies
    cb = closure(F4, discrete_system(26))
    zeros = [i for i, f in enumerate(F4.forms) if all(x == 0 for x in f)]
    assert len(zeros) == 2
    assert cb[zeros[0]] == cb[zeros[1]]


def test_coarsenings_are_closed_and_coarser():
    b = closure(G2, discrete_system(7))
    for cb in coarsenings(G2, b):
        assert closure(G2, cb) == cb
        assert coarsens(cb, b)
        assert cb != b


# ---------------------------------------------------------------------------
# block_system_of


def test_block_system_of_generic_point():
    # a=1, b=5 mod 35: all seven eigenvalue exponents distinct
    assert block_system_of(G2, 35, (1, 5, 29)) == discrete_system(7)


def test_block_system_of_order_four_point():
    # a=1, b=3 mod 4: exponents 1,3,0,3,1,0,0
    b = block_system_of(G2, 4, (1, 3, 0))
    assert b == (0, 1, 2, 1, 0, 2, 2)


def test_block_system_of_validates():
    with pytest.raises(ValueError):
        block_system_of(G2, 0, (1, 1, 2))
    with pytest.raises(ValueError):
        block_system_of(G2, 4, (1, 1))
    with pytest.raises(ValueError):
        block_system_of(G2, 4, (1, 1, 1))  # violates a1+a2+a3 = 0 mod 4
    e6 = load_builtin("e6_a5a1")
    # base relation sum(a_1..a_6) = 0 mod n is enforced
    with pytest.raises(ValueError):
        block_system_of(e6, 5, (1, 0, 0, 0, 0, 0, 1))


@given(st.integers(2, 40), st.integers(0, 39), st.integers(0, 39))
@settings(max_examples=150, deadline=None)
def test_block_system_of_agrees_with_direct_eigenvalues(n, a, b):
    got = block_system_of(G2, n, (a % n, b % n, (-a - b) % n))
    vals = [
        (a) % n, (b) % n, (-a - b) % n, (-a) % n, (-b) % n, (a + b) % n, 0,
    ]
    expect = rgs_normalize([vals.index(v) for v in vals])
    assert got == expect
