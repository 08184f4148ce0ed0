"""Element classes and powering witnesses.

Class counts from ``enumerate_elements`` (bucketed orbit enumeration) are
cross-checked against a Burnside/Moebius oracle: the number of orbits on
exact-order-n points is computed from fixed-point counts of the ambient
symmetry matrices, which only needs Smith normal forms of g - I.
"""

import random
from fractions import Fraction
from math import gcd

import numpy as np
import pytest
from sympy import divisors, mobius
from sympy.matrices import Matrix
from sympy.matrices.normalforms import smith_normal_form

from torusblocks.search import ResourceBudgetExceeded, UnsupportedConfig
from torusblocks.weightconfig import load_builtin, parse_config
from torusblocks.witness import (
    ambient_symmetry,
    character_lattice,
    element_class_of,
    enumerate_elements,
    witness_report,
    witness_search,
)

G2 = load_builtin("g2_a2")
F4 = load_builtin("f4_a1x4")


# ---------------------------------------------------------------------------
# Burnside/Moebius oracle


def snf_divisors(mats):
    out = []
    for m in mats:
        a = Matrix((m - np.eye(m.shape[0], dtype=np.int64)).tolist())
        s = smith_normal_form(a)
        out.append([int(s[i, i]) for i in range(m.shape[0])])
    return out


def orbits_dividing(snfs, n):
    total = 0
    for divs in snfs:
        fix = 1
        for d in divs:
            fix *= n if d == 0 else gcd(d, n)
        total += fix
    return Fraction(total, len(snfs))


def orbits_exact(snfs, n):
    count = sum(mobius(n // m) * orbits_dividing(snfs, m) for m in divisors(n))
    assert count.denominator == 1
    return int(count)


# ---------------------------------------------------------------------------
# Character lattice


def test_character_lattice_g2():
    lat = character_lattice(G2)
    assert lat.d == 2
    assert lat.weights.shape == (7, 2)
    # the zero form maps to the zero weight; the rest are nonzero
    zero_rows = [i for i in range(7) if not lat.weights[i].any()]
    assert zero_rows == [6]
    # forms come in opposite pairs: a,b,-a-b then their negatives
    for i in range(3):
        assert (lat.weights[i] + lat.weights[i + 3] == 0).all()


def test_character_lattice_projects_relation():
    sl2 = parse_config(
        "name: sl2\ngenerators: 2\nrelation: 1 1\nform: 1 0\nform: 0 1\n"
        "symmetry: (1 2) +\n"
    )
    lat = character_lattice(sl2)
    assert lat.d == 1
    assert (lat.weights[0] + lat.weights[1] == 0).all()
    assert abs(int(lat.weights[0, 0])) == 1


def test_character_lattice_rejects_imprimitive_relation():
    c = parse_config("name: x\ngenerators: 2\nrelation: 2 2\nform: 1 0\nform: 0 1\n")
    with pytest.raises(UnsupportedConfig):
        character_lattice(c)


def test_character_lattice_rejects_nonspanning_forms():
    c = parse_config("name: x\ngenerators: 2\nform: 0 0\nform: 0 0\n")
    with pytest.raises(UnsupportedConfig):
        character_lattice(c)


# ---------------------------------------------------------------------------
# Ambient symmetry


def test_ambient_symmetry_g2_is_dihedral_of_order_twelve():
    mats = ambient_symmetry(G2)
    assert len(mats) == 12
    keys = {m.tobytes() for m in mats}
    assert len(keys) == 12
    assert (-np.eye(2, dtype=np.int64)).tobytes() in keys
    # closed under multiplication
    for a in mats[:4]:
        for b in mats[:4]:
            assert (a @ b).astype(np.int64).tobytes() in keys


def test_ambient_symmetry_permutes_weights():
    lat = character_lattice(G2)
    rows = sorted(tuple(int(x) for x in r) for r in lat.weights)
    for m in ambient_symmetry(G2):
        image = sorted(tuple(int(x) for x in r) for r in lat.weights @ m)
        assert image == rows


def test_ambient_symmetry_f4_groups_have_order_1152():
    # both F4 torus embeddings see the full ambient reflection group
    assert len(ambient_symmetry(F4)) == 1152
    assert len(ambient_symmetry(load_builtin("f4_a2a2"))) == 1152


def test_ambient_symmetry_cap():
    with pytest.raises(ResourceBudgetExceeded):
        ambient_symmetry(F4, cap=100)


# ---------------------------------------------------------------------------
# Element classes


def test_element_class_of_validates():
    with pytest.raises(ValueError):
        element_class_of(G2, 5, (1,))  # wrong length
    with pytest.raises(ValueError):
        element_class_of(G2, 6, (2, 4))  # order 3, not 6


def test_element_class_values_and_blocks_consistent():
    lat = character_lattice(G2)
    x = element_class_of(G2, 7, (1, 2))
    assert x.values == tuple(
        int(v) for v in (np.array([1, 2]) @ lat.weights.T) % 7
    )
    for i in range(7):
        for j in range(7):
            same = x.block_system[i] == x.block_system[j]
            assert same == (x.values[i] == x.values[j])


@pytest.mark.parametrize("n", range(1, 13))
def test_enumerate_elements_matches_burnside_g2(n):
    snfs = snf_divisors(ambient_symmetry(G2))
    assert len(enumerate_elements(G2, n)) == orbits_exact(snfs, n)


@pytest.mark.parametrize("n", (4, 6, 8, 12))
def test_enumerate_elements_matches_burnside_f4(n):
    snfs = snf_divisors(ambient_symmetry(F4))
    assert len(enumerate_elements(F4, n)) == orbits_exact(snfs, n)


def test_enumerate_elements_identity():
    classes = enumerate_elements(G2, 1)
    assert len(classes) == 1
    assert classes[0].coords == (0, 0)


def test_enumerate_elements_budget():
    with pytest.raises(ResourceBudgetExceeded):
        enumerate_elements(F4, 100, budget=10**6)


def test_enumerate_elements_reps_are_canonical_and_distinct():
    mats = ambient_symmetry(G2)
    classes = enumerate_elements(G2, 8)
    seen = set()
    for x in classes:
        orbit = {
            tuple(int(v) for v in (m @ np.array(x.coords)) % 8) for m in mats
        }
        assert x.coords == min(orbit)
        assert not (orbit & seen)
        seen |= orbit


# ---------------------------------------------------------------------------
# Witness search


def test_witness_search_rejects_trivial_multiplier():
    x = element_class_of(G2, 7, (1, 2))
    with pytest.raises(ValueError):
        witness_search(G2, x, 1)


def test_witness_properties_g2():
    lat = character_lattice(G2)
    x = element_class_of(G2, 7, (1, 2))
    out = witness_search(G2, x, 2)
    assert out.found
    y = np.array(out.witness_coords, dtype=np.int64)
    an = 14
    # y powers to x: its coordinates reduce to x mod n
    assert tuple(int(v) for v in y % 7) == x.coords
    # y has exact order a*n
    assert gcd(gcd(int(y[0]), int(y[1])), an) == 1
    # y stabilizes exactly the same subspaces
    vals = tuple(int(v) for v in (y @ lat.weights.T) % an)
    labels = {}
    rgs = tuple(labels.setdefault(v, len(labels)) for v in vals)
    assert rgs == x.block_system


def test_witness_report_g2_all_witnessed():
    rep = witness_report(G2, 7, 2)
    snfs = snf_divisors(ambient_symmetry(G2))
    assert rep.class_count == orbits_exact(snfs, 7)
    assert rep.all_witnessed
    assert rep.failing == []
    assert not rep.caveat_bad_primes
    assert rep.soundness["witness_order"] == 14
    assert "classes:" in rep.table()
    assert '"all_witnessed": true' in rep.to_json()


def test_witness_report_flags_bad_primes():
    f4a2 = load_builtin("f4_a2a2")
    rep = witness_report(f4a2, 3, 2)
    assert rep.caveat_bad_primes


# ---------------------------------------------------------------------------
# Coprime multipliers always admit witnesses

# For orders beyond every finite-stabilizer exponent (above 4 for the
# rank-2 config, above 36 for the rank-4 one) each class sits in an
# infinite stabilizer, and a multiplier coprime to both the order and the
# stabilizer torsion always has a witness.


def random_exact_order_coords(rng, d, n):
    while True:
        coords = tuple(rng.randrange(n) for _ in range(d))
        g = 0
        for x in coords:
            g = gcd(g, x)
        if gcd(g, n) == 1:
            return coords


def test_coprime_multiplier_always_witnessed():
    rng = random.Random(20260823)
    primes = (2, 3, 5, 7, 11, 13)
    checked = 0
    while checked < 100:
        if rng.randrange(2):
            c, d, n = G2, 2, rng.randrange(5, 40)
        else:
            c, d, n = F4, 4, rng.randrange(37, 60)
        x = element_class_of(c, n, random_exact_order_coords(rng, d, n))
        assert not x.stabilizer.finite
        torsion = 1
        for f in x.stabilizer.torsion.invariant_factors:
            torsion *= f
        pool = [p for p in primes if n % p and torsion % p]
        if not pool:
            continue
        a = rng.choice(pool)
        out = witness_search(c, x, a)
        assert out.found, (c.name, n, x.coords, a)
        checked += 1
