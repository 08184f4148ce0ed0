"""Powering witnesses: order-n torus elements and y with y^a = x.

Block-system enumeration works in coordinate space, but element classes
live in the representation torus: the quotient of the coordinate torus by
everything acting trivially on the module.  Its character lattice is the
lattice spanned by the eigenvalue forms (after projecting out the base
relations), so an order-n element is a homomorphism from that lattice to
(1/n)Z/Z, i.e. a coordinate vector mod n in a lattice basis.  Classes are
taken up to the ambient symmetry group: every lattice automorphism that
permutes the form multiset.  For the builtin configurations this group is
the full normalizer-induced action, which is strictly larger than the
configured coordinate symmetry.

A witness for a class x of order n and multiplier a is an element y of
the representation torus with a*y = x, of order exactly a*n, whose block
system equals that of x: such a y powers to x while stabilizing exactly
the same subspaces of the module.
"""

from __future__ import annotations

import itertools
import json
import time
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

import numpy as np

from .blocks import BlockSystem, StabilizerInfo, stabilizer
from .intlattice import hnf, snf
from .search import SCHEMA_VERSION, ResourceBudgetExceeded, UnsupportedConfig
from .weightconfig import WeightConfig

DEFAULT_ELEMENT_BUDGET = 5 * 10**7
DEFAULT_AMBIENT_CAP = 200_000
_CHUNK = 1 << 20


@dataclass(frozen=True)
class CharacterLattice:
    """The form lattice of a configuration, with forms in a lattice basis.

    ``weights`` has one row per form, giving its integer coordinates in a
    basis of the lattice the forms span; the representation torus of rank
    ``d`` is Hom of this lattice into Q/Z, so its n-torsion is (Z/n)^d.
    """

    d: int
    weights: np.ndarray  # (num_forms, d) int64, read-only


def character_lattice(c: WeightConfig) -> CharacterLattice:
    """Project the forms through the base relations and rebase them.

    The base relations must cut out a connected subtorus (their row lattice
    must be primitive); the forms then generate a finite-index sublattice of
    the quotient character lattice, and each form is expressed in a Hermite
    basis of that sublattice.
    """
    r = c.r
    rows = [tuple(row) for row in c.base_relations]
    if rows:
        res = snf(rows, cols=r)
        if any(div not in (0, 1) for div in res.divisors):
            raise UnsupportedConfig(
                "base relations are not primitive; the coordinate torus "
                "quotient has torsion"
            )
        k = res.rank
        right = np.asarray(res.right_transform, dtype=np.int64)
        projected = (np.asarray(c.forms, dtype=np.int64) @ right)[:, k:]
    else:
        projected = np.asarray(c.forms, dtype=np.int64)
    d = projected.shape[1]
    basis = hnf([tuple(int(x) for x in row) for row in projected], cols=d)
    if len(basis) != d:
        raise UnsupportedConfig("forms do not span the character lattice")
    pivots = [next(j for j, x in enumerate(row) if x) for row in basis]
    weights = np.zeros_like(projected)
    for i, row in enumerate(projected):
        residual = [int(x) for x in row]
        for bi in range(d):
            p = pivots[bi]
            q, rem = divmod(residual[p], basis[bi][p])
            if rem:
                raise AssertionError("form outside its own Hermite basis")
            weights[i, bi] = q
            for j in range(d):
                residual[j] -= q * basis[bi][j]
        if any(residual):
            raise AssertionError("form outside its own Hermite basis")
    weights.setflags(write=False)
    return CharacterLattice(d=d, weights=weights)


def _span_coefficients(pivot_rows, vec):
    """Rational coordinates of vec in the span of pivot_rows, or None."""
    m = [
        [Fraction(pivot_rows[i][j]) for i in range(len(pivot_rows))] + [Fraction(vec[j])]
        for j in range(len(vec))
    ]
    cols = len(pivot_rows)
    rank = 0
    for col in range(cols):
        piv = next((i for i in range(rank, len(m)) if m[i][col]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for i in range(len(m)):
            if i != rank and m[i][col]:
                f = m[i][col] / m[rank][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        rank += 1
    coeffs = [Fraction(0)] * cols
    for i in range(len(m)):
        lead = next((col for col in range(cols) if m[i][col]), None)
        if lead is None:
            if m[i][cols]:
                return None  # inconsistent: vec outside the span
            continue
        coeffs[lead] = m[i][cols] / m[i][lead]
    return coeffs


def ambient_symmetry(
    c: WeightConfig, cap: int = DEFAULT_AMBIENT_CAP
) -> np.ndarray:
    """All automorphisms of the character lattice permuting the forms.

    Returned as an array of integer matrices acting on torus coordinates
    (points transform by left multiplication).  Found by backtracking over
    the images of a spanning set of forms, pruning with the linear relations
    the remaining forms must satisfy.  Conjugacy of torus elements in the
    ambient group refines to orbits under this action, which is why element
    classes are deduplicated with it rather than with the coordinate
    symmetry group.
    """
    lat = character_lattice(c)
    d = lat.d
    mult = Counter(tuple(int(x) for x in row) for row in lat.weights)
    vecs = sorted(v for v in mult if any(v))
    index_of = {v: i for i, v in enumerate(vecs)}

    pivots: list[int] = []
    pivot_rows: list[tuple[int, ...]] = []
    span_news: list[list[tuple[int, list[Fraction]]]] = []
    in_span = [False] * len(vecs)
    for i, v in enumerate(vecs):
        if _span_coefficients(pivot_rows, v) is not None:
            continue
        pivots.append(i)
        pivot_rows.append(v)
        news = []
        for j, w in enumerate(vecs):
            if in_span[j]:
                continue
            coeffs = _span_coefficients(pivot_rows, w)
            if coeffs is not None:
                in_span[j] = True
                news.append((j, coeffs))
        span_news.append(news)
        if len(pivot_rows) == d:
            break
    if len(pivot_rows) < d:
        raise AssertionError("forms unexpectedly fail to span")

    results: list[np.ndarray] = []
    images = [None] * len(vecs)  # vec index -> image vec index
    used = [0] * len(vecs)  # multiplicity consumed per target vec

    def assign(j: int, target: int) -> bool:
        if used[target] >= mult[vecs[target]] or mult[vecs[target]] != mult[vecs[j]]:
            return False
        images[j] = target
        used[target] += mult[vecs[j]]
        return True

    def unassign(j: int) -> None:
        used[images[j]] -= mult[vecs[j]]
        images[j] = None

    def descend(depth: int) -> None:
        if depth == d:
            mat = np.array(
                [vecs[images[pivots[i]]] for i in range(d)], dtype=np.int64
            )
            piv = np.array(pivot_rows, dtype=np.int64)
            sol = np.linalg.solve(piv.astype(float), mat.astype(float))
            m = np.rint(sol).astype(np.int64)
            if not np.array_equal(piv @ m, mat):
                return
            if len(results) >= cap:
                raise ResourceBudgetExceeded(
                    f"ambient symmetry group exceeds the cap {cap}"
                )
            results.append(m)
            return
        for target in range(len(vecs)):
            if not assign(pivots[depth], target):
                continue
            ok = True
            assigned = [pivots[depth]]
            for j, coeffs in span_news[depth]:
                if j == pivots[depth]:
                    continue
                img = [Fraction(0)] * d
                for i, a in enumerate(coeffs):
                    if a:
                        u = vecs[images[pivots[i]]]
                        for col in range(d):
                            img[col] += a * u[col]
                if any(x.denominator != 1 for x in img):
                    ok = False
                    break
                key = tuple(int(x) for x in img)
                ti = index_of.get(key)
                if ti is None or not assign(j, ti):
                    ok = False
                    break
                assigned.append(j)
            if ok:
                descend(depth + 1)
            for j in reversed(assigned):
                unassign(j)
    descend(0)

    mats = np.stack(results)
    # Points transform dually to characters but by the same matrix: the
    # image point's i-th coordinate is row i of the matrix applied to the
    # old coordinates.
    return mats


@dataclass(frozen=True)
class ElementClass:
    """A canonical torus element of exact order n with its block data.

    ``coords`` are residues mod n in the character-lattice basis; ``values``
    are the form values mod n in form order.
    """

    n: int
    coords: tuple[int, ...]
    values: tuple[int, ...]
    block_system: BlockSystem
    stabilizer: StabilizerInfo


def _rgs_of_values(values) -> BlockSystem:
    seen: dict[int, int] = {}
    labels = []
    for v in values:
        v = int(v)
        if v not in seen:
            seen[v] = len(seen)
        labels.append(seen[v])
    return tuple(labels)


def _make_class(c: WeightConfig, lat: CharacterLattice, n: int, coords) -> ElementClass:
    coords = tuple(int(x) % n for x in coords)
    values = tuple(
        int(x) for x in (np.asarray(coords, dtype=np.int64) @ lat.weights.T) % n
    )
    b = _rgs_of_values(values)
    return ElementClass(
        n=n,
        coords=coords,
        values=values,
        block_system=b,
        stabilizer=stabilizer(c, b),
    )


def element_class_of(c: WeightConfig, n: int, coords) -> ElementClass:
    """Wrap explicit torus coordinates (mod n, lattice basis) as a class."""
    lat = character_lattice(c)
    if len(coords) != lat.d:
        raise ValueError(f"expected {lat.d} coordinates, got {len(coords)}")
    g = 0
    for x in coords:
        g = gcd(g, int(x) % n)
    if gcd(g, n) != 1:
        raise ValueError(f"coordinates do not have exact order {n}")
    return _make_class(c, lat, n, coords)


def _grid_chunks(n: int, d: int, total: int):
    for start in range(0, total, _CHUNK):
        stop = min(start + _CHUNK, total)
        idx = np.arange(start, stop, dtype=np.int64)
        out = np.empty((stop - start, d), dtype=np.int64)
        for j in range(d - 1, -1, -1):
            out[:, j] = idx % n
            idx //= n
        yield out


def _exact_order_mask(coords: np.ndarray, n: int) -> np.ndarray:
    g = np.full(len(coords), n, dtype=np.int64)
    for j in range(coords.shape[1]):
        g = np.gcd(g, coords[:, j])
    return g == 1


def enumerate_elements(
    c: WeightConfig,
    n: int,
    budget: int = DEFAULT_ELEMENT_BUDGET,
) -> list[ElementClass]:
    """All order-n torus elements, one canonical representative per class.

    Elements are first bucketed by their multiset of form values (an orbit
    invariant, and almost always a complete one); buckets whose population
    exceeds a single orbit are split explicitly, so the class count is exact
    even when distinct classes share an eigenvalue multiset.
    """
    if n < 1:
        raise ValueError("order must be >= 1")
    lat = character_lattice(c)
    mats = ambient_symmetry(c)
    d = lat.d
    total = n**d
    if total > budget:
        raise ResourceBudgetExceeded(
            f"{total} torus points mod {n} exceed the budget {budget}"
        )
    wt = lat.weights.T

    buckets: dict[bytes, list] = {}  # value-multiset -> [count, rep coords]
    for chunk in _grid_chunks(n, d, total):
        chunk = chunk[_exact_order_mask(chunk, n)]
        if not len(chunk):
            continue
        keys = np.sort((chunk @ wt) % n, axis=1)
        uniq, first, counts = np.unique(
            keys, axis=0, return_index=True, return_counts=True
        )
        for row, fi, ct in zip(uniq, first, counts):
            entry = buckets.setdefault(row.tobytes(), [0, chunk[fi]])
            entry[0] += int(ct)

    reps: list[np.ndarray] = []
    ambiguous: dict[bytes, list[np.ndarray]] = {}
    for key, (count, rep) in buckets.items():
        orbit = np.unique(np.einsum("gij,j->gi", mats, rep) % n, axis=0)
        if len(orbit) == count:
            reps.append(orbit[0])
        else:
            ambiguous[key] = []
    if ambiguous:
        for chunk in _grid_chunks(n, d, total):
            chunk = chunk[_exact_order_mask(chunk, n)]
            if not len(chunk):
                continue
            keys = np.sort((chunk @ wt) % n, axis=1)
            for i in range(len(chunk)):
                key = keys[i].tobytes()
                if key in ambiguous:
                    ambiguous[key].append(chunk[i])
        for key, points in ambiguous.items():
            remaining = {tuple(int(x) for x in p) for p in points}
            while remaining:
                point = min(remaining)
                orbit = np.unique(
                    np.einsum("gij,j->gi", mats, np.asarray(point)) % n, axis=0
                )
                reps.append(orbit[0])
                remaining -= {tuple(int(x) for x in row) for row in orbit}

    classes = [
        _make_class(c, lat, n, rep)
        for rep in sorted(reps, key=lambda r: tuple(int(x) for x in r))
    ]
    return classes


@dataclass(frozen=True)
class WitnessOutcome:
    element: ElementClass
    a: int
    found: bool
    witness_coords: tuple[int, ...] | None  # lattice-basis residues mod a*n


def witness_search(c: WeightConfig, x: ElementClass, a: int) -> WitnessOutcome:
    """Search the torus for y with a*y = x of order a*n and equal blocks.

    The solution set of a*y = x in the representation torus is the coset
    x/a + (a-torsion): a^d candidates, checked exhaustively in coordinate
    order.  No shortcut is taken for classes with infinite stabilizers: the
    published failing classes at non-coprime multipliers lie in infinite
    stabilizers, and only the honest search reveals them.
    """
    if a < 2:
        raise ValueError("multiplier must be >= 2")
    lat = character_lattice(c)
    n = x.n
    target = a * n
    base = np.asarray(x.coords, dtype=np.int64)
    shifts = np.array(
        list(itertools.product(range(a), repeat=lat.d)), dtype=np.int64
    )
    ys = (base + n * shifts) % target
    ys = ys[np.lexsort(ys.T[::-1])]
    ys = ys[_exact_order_mask(ys, target)]
    vals = (ys @ lat.weights.T) % target
    for y, v in zip(ys, vals):
        if _rgs_of_values(v) == x.block_system:
            return WitnessOutcome(
                element=x,
                a=a,
                found=True,
                witness_coords=tuple(int(t) for t in y),
            )
    return WitnessOutcome(element=x, a=a, found=False, witness_coords=None)


@dataclass
class WitnessReport:
    config: str
    n: int
    a: int
    class_count: int
    witnessed_count: int
    failing: list[tuple[int, ...]]  # canonical coords of unwitnessed classes
    caveat_bad_primes: bool
    soundness: dict
    timing: dict = field(default_factory=dict)

    @property
    def all_witnessed(self) -> bool:
        return self.witnessed_count == self.class_count

    def to_json(self) -> str:
        payload = {
            "schema": SCHEMA_VERSION,
            "config": self.config,
            "n": self.n,
            "a": self.a,
            "class_count": self.class_count,
            "witnessed_count": self.witnessed_count,
            "all_witnessed": self.all_witnessed,
            "failing": [list(v) for v in self.failing],
            "caveat_bad_primes": self.caveat_bad_primes,
            "soundness": self.soundness,
            "timing": self.timing,
        }
        return json.dumps(payload, indent=1, sort_keys=True)

    def table(self) -> str:
        lines = [
            f"config: {self.config}  n={self.n}  a={self.a}",
            f"classes: {self.class_count}  witnessed: {self.witnessed_count}"
            f"  all: {'yes' if self.all_witnessed else 'NO'}",
        ]
        if self.failing:
            lines.append(f"failing classes ({len(self.failing)}):")
            lines.extend(f"  {v}" for v in self.failing)
        s = self.soundness
        lines.append(
            f"soundness: witness order {s['witness_order']} vs "
            f"scaled exponent bound {s['scaled_exponent_bound']} -> "
            f"{'conclusive' if s['conclusive'] else 'inconclusive'}"
        )
        if self.caveat_bad_primes:
            lines.append("caveat: n shares a factor with the config bad primes")
        return "\n".join(lines)


def witness_report(
    c: WeightConfig,
    n: int,
    a: int,
    budget: int = DEFAULT_ELEMENT_BUDGET,
) -> WitnessReport:
    """Run witness_search over every order-n class and summarize.

    The soundness block compares the witness order a*n against the largest
    finite-stabilizer exponent seen among the classes (scaled by the config
    cofactor): a witness only proves its class good when its order exceeds
    every finite-stabilizer exponent.
    """
    t0 = time.monotonic()
    classes = enumerate_elements(c, n, budget=budget)
    failing = []
    witnessed = 0
    max_exp = 0
    for x in classes:
        if x.stabilizer.finite:
            max_exp = max(max_exp, x.stabilizer.exponent_raw)
        out = witness_search(c, x, a)
        if out.found:
            witnessed += 1
        else:
            failing.append(x.coords)
    bound = c.cofactor_m * max_exp
    return WitnessReport(
        config=c.name,
        n=n,
        a=a,
        class_count=len(classes),
        witnessed_count=witnessed,
        failing=failing,
        caveat_bad_primes=any(n % p == 0 for p in c.bad_primes),
        soundness={
            "witness_order": a * n,
            "max_exponent_raw": max_exp,
            "scaled_exponent_bound": bound,
            "conclusive": c.cofactor_m * a * n > bound,
        },
        timing={"elapsed": round(time.monotonic() - t0, 3)},
    )
