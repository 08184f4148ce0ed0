"""Exact integer-lattice normal forms and finite abelian group arithmetic.

Everything here works over Python's arbitrary-precision integers; there is
deliberately no floating point anywhere in this module, since intermediate
entries in Hermite/Smith eliminations can grow well past 2**63 even when the
inputs and outputs are tiny.

Matrices are plain sequences of rows (tuples or lists of ints).  The empty
matrix (zero rows and/or zero columns) is legal throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import gcd, lcm, prod


def identity_matrix(n: int) -> list[list[int]]:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def mat_mul(a, b):
    if not a or not b:
        return [[0] * (len(b[0]) if b else 0) for _ in a]
    cols = len(b[0])
    return [
        [sum(ra[k] * b[k][j] for k in range(len(ra))) for j in range(cols)]
        for ra in a
    ]


def mat_vec(a, v):
    return [sum(r[k] * v[k] for k in range(len(v))) for r in a]


def unimodular_inverse(m):
    """Inverse of a unimodular integer matrix, as an integer matrix."""
    n = len(m)
    aug = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(m)]
    for col in range(n):
        piv = next(i for i in range(col, n) if aug[i][col])
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for i in range(n):
            if i != col and aug[i][col]:
                f = aug[i][col]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[col])]
    inv = [[x for x in row[n:]] for row in aug]
    out = []
    for row in inv:
        r = []
        for x in row:
            if x.denominator != 1:
                raise ValueError("matrix is not unimodular")
            r.append(int(x))
        out.append(r)
    return out


# ---------------------------------------------------------------------------
# Hermite normal form


def hnf(rows, cols: int | None = None) -> list[tuple[int, ...]]:
    """Row-style Hermite normal form of the row lattice of ``rows``.

    Row echelon, pivots positive, entries above each pivot reduced into
    [0, pivot); zero rows removed.  The row lattice is preserved.
    """
    m = [list(r) for r in rows]
    if cols is None:
        cols = len(m[0]) if m else 0
    nrows = len(m)
    pivot_row = 0
    pivots = []
    for col in range(cols):
        nz = [i for i in range(pivot_row, nrows) if m[i][col]]
        if not nz:
            continue
        while len(nz) > 1:
            nz.sort(key=lambda i: abs(m[i][col]))
            i0 = nz[0]
            base = m[i0]
            for i in nz[1:]:
                q = m[i][col] // base[col]
                if q:
                    row = m[i]
                    for j in range(col, cols):
                        row[j] -= q * base[j]
            nz = [i for i in nz if m[i][col]]
        i0 = nz[0]
        m[pivot_row], m[i0] = m[i0], m[pivot_row]
        if m[pivot_row][col] < 0:
            m[pivot_row] = [-x for x in m[pivot_row]]
        pivots.append((pivot_row, col))
        pivot_row += 1
    for r, c in pivots:
        base = m[r]
        p = base[c]
        for i in range(r):
            q = m[i][c] // p
            if q:
                row = m[i]
                for j in range(c, cols):
                    row[j] -= q * base[j]
    return [tuple(r) for r in m[: len(pivots)]]


def hnf_reduce(hnf_rows, v):
    """Canonical representative of v modulo the row lattice of an HNF.

    Two vectors are congruent modulo the lattice iff their reductions are
    equal, so this doubles as the coset fingerprint used by closures.
    """
    v = list(v)
    for row in hnf_rows:
        c = next(j for j, x in enumerate(row) if x)
        q = v[c] // row[c]
        if q:
            for j in range(c, len(v)):
                v[j] -= q * row[j]
    return tuple(v)


def lattice_contains(lattice_rows, v) -> bool:
    """True iff v is an integer combination of the given rows."""
    for r in lattice_rows:
        if len(r) != len(v):
            raise ValueError("vector length does not match lattice columns")
    h = hnf(lattice_rows, cols=len(v))
    return not any(hnf_reduce(h, v))


# ---------------------------------------------------------------------------
# Smith normal form


@dataclass(frozen=True)
class SnfResult:
    """Diagonalization L * A * R = diag(divisors) with unimodular L, R."""

    divisors: tuple[int, ...]
    rank: int
    left_transform: tuple[tuple[int, ...], ...]
    right_transform: tuple[tuple[int, ...], ...]


def snf(rows, cols: int | None = None) -> SnfResult:
    """Smith normal form with transforms.

    Divisors are nonnegative, form a divisibility chain, and include the
    trailing zeros up to min(rows, cols).  Pivoting is on the minimum
    magnitude nonzero entry; plain alternating row/column gcd elimination.
    """
    a = [list(r) for r in rows]
    n = len(a)
    if cols is None:
        cols = len(a[0]) if a else 0
    m = cols
    L = identity_matrix(n)
    R = identity_matrix(m)
    k = min(n, m)

    def row_sub(mat, i, t, q, start=0):
        ri, rt = mat[i], mat[t]
        for j in range(start, len(ri)):
            ri[j] -= q * rt[j]

    def col_sub(mat, j, t, q):
        for row in mat:
            row[j] -= q * row[t]

    for t in range(k):
        while True:
            piv = None
            best = None
            for i in range(t, n):
                row = a[i]
                for j in range(t, m):
                    x = row[j]
                    if x and (best is None or abs(x) < best):
                        best = abs(x)
                        piv = (i, j)
            if piv is None:
                break
            i, j = piv
            if i != t:
                a[t], a[i] = a[i], a[t]
                L[t], L[i] = L[i], L[t]
            if j != t:
                for row in a:
                    row[t], row[j] = row[j], row[t]
                for row in R:
                    row[t], row[j] = row[j], row[t]
            p = a[t][t]
            for i in range(t + 1, n):
                if a[i][t]:
                    q = a[i][t] // p
                    row_sub(a, i, t, q)
                    row_sub(L, i, t, q)
            for j in range(t + 1, m):
                if a[t][j]:
                    q = a[t][j] // p
                    col_sub(a, j, t, q)
                    col_sub(R, j, t, q)
            if any(a[i][t] for i in range(t + 1, n)):
                continue
            if any(a[t][j] for j in range(t + 1, m)):
                continue
            bad = None
            for i in range(t + 1, n):
                row = a[i]
                for j in range(t + 1, m):
                    if row[j] % p:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            row_sub(a, t, bad, -1)
            row_sub(L, t, bad, -1)
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            L[t] = [-x for x in L[t]]

    divisors = tuple(a[i][i] for i in range(k))
    rank = sum(1 for d in divisors if d)
    return SnfResult(
        divisors=divisors,
        rank=rank,
        left_transform=tuple(tuple(r) for r in L),
        right_transform=tuple(tuple(r) for r in R),
    )


# ---------------------------------------------------------------------------
# Finitely generated abelian quotients


@dataclass(frozen=True)
class FinAbGroup:
    """Torsion part of Z^r modulo a relation lattice, in invariant factors.

    ``divisors`` has one entry per ambient coordinate after the unimodular
    change of basis: 0 marks a free coordinate, 1 a dead one, d >= 2 a Z/d
    factor.  ``basis_map`` holds the rows of the inverse right transform for
    the nontrivial factors, so an ambient rational point theta maps to the
    coordinates d_i * (basis_map_i . theta) mod d_i.
    """

    invariant_factors: tuple[int, ...]
    divisors: tuple[int, ...]
    transform: tuple[tuple[int, ...], ...]       # right transform R
    transform_inv: tuple[tuple[int, ...], ...]   # R^{-1}

    @property
    def rank_ambient(self) -> int:
        return len(self.divisors)

    @property
    def order(self) -> int:
        return prod(self.invariant_factors) if self.invariant_factors else 1

    @property
    def exponent(self) -> int:
        return self.invariant_factors[-1] if self.invariant_factors else 1

    @property
    def basis_map(self) -> tuple[tuple[int, ...], ...]:
        return tuple(
            self.transform_inv[i]
            for i, d in enumerate(self.divisors)
            if d >= 2
        )

    def identity(self) -> tuple[int, ...]:
        return (0,) * len(self.invariant_factors)

    def reduce(self, coords) -> tuple[int, ...]:
        return tuple(c % d for c, d in zip(coords, self.invariant_factors))

    def elements(self):
        """All group elements; only sensible for small groups."""
        return product(*(range(d) for d in self.invariant_factors))

    def from_rational(self, theta) -> tuple[int, ...]:
        """Map an ambient point (Fractions, values mod 1) into the group.

        Raises ValueError if the point does not lie in the torsion subgroup
        cut out by the relation lattice.
        """
        phi = [sum(Fraction(r[j]) * theta[j] for j in range(len(theta)))
               for r in self.transform_inv]
        coords = []
        for d, p in zip(self.divisors, phi):
            if d == 0:
                if p.denominator != 1:
                    raise ValueError("point has an infinite-order component")
                continue
            c = d * p
            if c.denominator != 1:
                raise ValueError("point does not satisfy the relations")
            if d >= 2:
                coords.append(int(c) % d)
        return tuple(coords)

    def from_residues(self, coords, n: int) -> tuple[int, ...]:
        """Map integer residues mod n (an order-n torus point) into the group."""
        return self.from_rational([Fraction(c, n) for c in coords])

    def to_rational(self, element) -> tuple[Fraction, ...]:
        """Ambient coordinates (Fractions mod 1) of a group element."""
        cols = [i for i, d in enumerate(self.divisors) if d >= 2]
        r = len(self.transform)
        theta = [Fraction(0)] * r
        for c, i in zip(element, cols):
            d = self.divisors[i]
            for k in range(r):
                theta[k] += Fraction(c * self.transform[k][i], d)
        return tuple(t % 1 for t in theta)

    def to_residues(self, element, n: int) -> tuple[int, ...]:
        """Ambient coordinates mod n; n must be a multiple of the element order."""
        out = []
        for t in self.to_rational(element):
            c = t * n
            if c.denominator != 1:
                raise ValueError("element order does not divide n")
            out.append(int(c) % n)
        return tuple(out)


def quotient_group(r: int, relations) -> tuple[int, FinAbGroup]:
    """Torsion-free rank and torsion part of Z^r modulo the relation rows."""
    for rel in relations:
        if len(rel) != r:
            raise ValueError("relation length does not match generator count")
    res = snf(relations, cols=r)
    divisors = list(res.divisors) + [0] * (r - len(res.divisors))
    rank = sum(1 for d in divisors if d == 0)
    right = res.right_transform if relations else tuple(
        tuple(row) for row in identity_matrix(r)
    )
    if not relations:
        divisors = [0] * r
    right_inv = tuple(tuple(row) for row in unimodular_inverse([list(x) for x in right]))
    group = FinAbGroup(
        invariant_factors=tuple(d for d in divisors if d >= 2),
        divisors=tuple(divisors),
        transform=right,
        transform_inv=right_inv,
    )
    return rank, group


# ---------------------------------------------------------------------------
# Element arithmetic


def element_order(g: FinAbGroup, x) -> int:
    """Least k >= 1 with k*x = 0."""
    k = 1
    for d, c in zip(g.invariant_factors, x):
        k = lcm(k, d // gcd(d, c))
    return k


def divide_element(g: FinAbGroup, a: int, x) -> set[tuple[int, ...]]:
    """The complete set of y with a*y = x, coordinate by coordinate."""
    if a < 1:
        raise ValueError("multiplier must be >= 1")
    per_coord = []
    for d, c in zip(g.invariant_factors, x):
        gg = gcd(a, d)
        if c % gg:
            return set()
        step = d // gg
        base = (c // gg) * pow(a // gg, -1, step) % step
        per_coord.append([(base + t * step) % d for t in range(gg)])
    return {tuple(y) for y in product(*per_coord)}


def cyclic_contains(g: FinAbGroup, x, z) -> bool:
    """True iff z lies in the cyclic subgroup generated by x."""
    n = element_order(g, x)
    acc = g.identity()
    for _ in range(n):
        if acc == tuple(z):
            return True
        acc = g.reduce(c + xc for c, xc in zip(acc, x))
    return False
