"""Canonical forms under the expanded symmetry group.

The canonical key of a block system is the lexicographically minimal
restricted-growth encoding over all symmetry images.  The minimization is a
linear scan over the whole expanded group, vectorized column by column with
early elimination: after a handful of columns only a few group elements can
still realize the minimum, so the cost is dominated by the first columns.
"""

from __future__ import annotations

import numpy as np

from .blocks import BlockSystem, rgs_normalize
from .weightconfig import FormAction, WeightConfig

CanonicalKey = tuple[int, ...]


def apply_to_partition(action: FormAction, gi: int, b: BlockSystem) -> BlockSystem:
    """Image of a block system under group element gi (reference path)."""
    inv = action.inv_table[gi]
    return rgs_normalize(b[inv[j]] for j in range(action.d))


def canonical_partition(action: FormAction, b: BlockSystem) -> CanonicalKey:
    """Lexicographically minimal restricted-growth encoding over the orbit."""
    lab = np.asarray(b, dtype=np.int16)
    return _min_rgs(lab, action.inv_table)


def _min_rgs(lab: np.ndarray, inv_table: np.ndarray) -> CanonicalKey:
    """Minimum RGS encoding of lab[inv_table[g]] over all rows g.

    Keeps, per surviving group element, a partial relabelling (old block
    label -> RGS digit) and a next-fresh-digit counter; elements whose digit
    exceeds the column minimum are dropped.
    """
    n_elems, d = inv_table.shape
    alive = np.arange(n_elems)
    k = int(lab.max()) + 1 if d else 0
    mapping = np.full((n_elems, k), -1, dtype=np.int16)
    counter = np.zeros(n_elems, dtype=np.int16)
    out = np.empty(d, dtype=np.int16)
    for col in range(d):
        raw = lab[inv_table[alive, col]]
        mapped = mapping[alive, raw]
        fresh = mapped < 0
        digit = np.where(fresh, counter[alive], mapped)
        mn = digit.min()
        out[col] = mn
        keep = digit == mn
        alive = alive[keep]
        raw = raw[keep]
        fresh = fresh[keep]
        if fresh.any():
            idx = alive[fresh]
            mapping[idx, raw[fresh]] = mn
            counter[idx] = mn + 1
        if len(alive) == 1:
            # single survivor: finish its encoding without array machinery
            g = int(alive[0])
            m = mapping[g]
            cnt = int(counter[g])
            for j, rl in enumerate(lab[inv_table[g, col + 1:]], start=col + 1):
                dg = m[rl]
                if dg < 0:
                    m[rl] = cnt
                    dg = cnt
                    cnt += 1
                out[j] = dg
            return tuple(int(x) for x in out)
    return tuple(int(x) for x in out)


def canonical_vector(
    action: FormAction, c: WeightConfig, n: int, coords
) -> tuple[int, ...]:
    """Minimal representative of an order-n coordinate vector mod n."""
    for rel in c.base_relations:
        if sum(x * y for x, y in zip(rel, coords)) % n:
            raise ValueError("coordinates violate a base relation mod n")
    v = np.asarray(coords, dtype=np.int64) % n
    cands = np.empty((len(action.elements), c.r), dtype=np.int64)
    perms = action.coord_perms
    signs = action.signs
    for gi in range(len(action.elements)):
        w = np.empty(c.r, dtype=np.int64)
        w[perms[gi]] = signs[gi] * v
        cands[gi] = w % n
    order = np.lexsort(cands.T[::-1])
    return tuple(int(x) for x in cands[order[0]])


def canonical_vectors_bulk(
    action: FormAction, coords: np.ndarray, n: int
) -> np.ndarray:
    """Row-wise canonical forms of many coordinate vectors mod n."""
    best = coords % n
    r = coords.shape[1]
    for gi in range(len(action.elements)):
        w = np.empty_like(best)
        w[:, action.coord_perms[gi]] = int(action.signs[gi]) * coords
        w %= n
        decided = np.zeros(len(best), dtype=bool)
        take = np.zeros(len(best), dtype=bool)
        for j in range(r):
            lt = ~decided & (w[:, j] < best[:, j])
            gt = ~decided & (w[:, j] > best[:, j])
            take |= lt
            decided |= lt | gt
        best[take] = w[take]
    return best


def orbit_of_partition(action: FormAction, b: BlockSystem) -> set[BlockSystem]:
    """Full orbit of a block system (brute force; for tests and small configs)."""
    return {
        apply_to_partition(action, gi, b) for gi in range(len(action.elements))
    }
