"""Block systems of eigenvalue-form indices and their stabilizer algebra.

A block system is a set partition of the form indices {0..d-1}, encoded as a
restricted-growth string: entry i is the block label of index i, labels
numbered by first appearance so label(0) = 0.  Block systems are value types
and compare by their encoding.
"""

from __future__ import annotations

from dataclasses import dataclass

from .intlattice import FinAbGroup, hnf, hnf_reduce, quotient_group
from .weightconfig import WeightConfig

BlockSystem = tuple[int, ...]


def rgs_normalize(labels) -> BlockSystem:
    """Re-encode arbitrary block labels as a restricted-growth string."""
    mapping: dict[int, int] = {}
    out = []
    for lab in labels:
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out.append(mapping[lab])
    return tuple(out)


def is_rgs(b) -> bool:
    nxt = 0
    for lab in b:
        if lab > nxt or lab < 0:
            return False
        if lab == nxt:
            nxt += 1
    return True


def blocks_of(b: BlockSystem) -> list[list[int]]:
    """Blocks as index lists, ordered by block label."""
    k = max(b) + 1 if b else 0
    out: list[list[int]] = [[] for _ in range(k)]
    for i, lab in enumerate(b):
        out[lab].append(i)
    return out


def system_of_blocks(blocks, d: int) -> BlockSystem:
    labels = [-1] * d
    for bi, blk in enumerate(blocks):
        for i in blk:
            labels[i] = bi
    if -1 in labels:
        raise ValueError("blocks do not cover all indices")
    return rgs_normalize(labels)


def discrete_system(d: int) -> BlockSystem:
    return tuple(range(d))


def one_block_system(d: int) -> BlockSystem:
    return (0,) * d


def num_blocks(b: BlockSystem) -> int:
    return max(b) + 1 if b else 0


def coarsens(b: BlockSystem, a: BlockSystem) -> bool:
    """True iff b is a coarsening of a (each block of a lies in a block of b)."""
    rep: dict[int, int] = {}
    for la, lb in zip(a, b):
        if rep.setdefault(la, lb) != lb:
            return False
    return True


# ---------------------------------------------------------------------------
# Stabilizers


@dataclass(frozen=True)
class StabilizerInfo:
    """The subgroup of the coordinate torus acting as a scalar on each block."""

    relations: tuple[tuple[int, ...], ...]
    dimension: int
    torsion: FinAbGroup
    exponent_raw: int

    @property
    def finite(self) -> bool:
        return self.dimension == 0


def stabilizer_relations(c: WeightConfig, b: BlockSystem) -> list[tuple[int, ...]]:
    """Base relations plus one form difference per adjacent same-block pair.

    Consecutive-pair differences within each block generate the same lattice
    as all pairwise differences while keeping the matrix small.
    """
    if len(b) != c.d:
        raise ValueError("block system does not match the form count")
    rows = [tuple(row) for row in c.base_relations]
    prev: dict[int, int] = {}
    for i, lab in enumerate(b):
        j = prev.get(lab)
        if j is not None:
            fi, fj = c.forms[j], c.forms[i]
            rows.append(tuple(x - y for x, y in zip(fi, fj)))
        prev[lab] = i
    return rows


def stabilizer(c: WeightConfig, b: BlockSystem) -> StabilizerInfo:
    rows = stabilizer_relations(c, b)
    rank, group = quotient_group(c.r, rows)
    return StabilizerInfo(
        relations=tuple(rows),
        dimension=rank,
        torsion=group,
        exponent_raw=group.exponent,
    )


def closure(c: WeightConfig, b: BlockSystem) -> BlockSystem:
    """Coarsest block system with the same stabilizer relation lattice.

    Indices merge exactly when their forms are congruent modulo the relation
    lattice, so grouping forms by their canonical residue does the whole
    merge-and-transitive-close in one pass.
    """
    h = hnf(stabilizer_relations(c, b), cols=c.r)
    residues = [hnf_reduce(h, f) for f in c.forms]
    seen: dict[tuple[int, ...], int] = {}
    labels = []
    for res in residues:
        if res not in seen:
            seen[res] = len(seen)
        labels.append(seen[res])
    return tuple(labels)


def merge_blocks(b: BlockSystem, la: int, lb: int) -> BlockSystem:
    """Merge the blocks labelled la and lb."""
    return rgs_normalize(la if lab == lb else lab for lab in b)


def coarsenings(c: WeightConfig, b: BlockSystem) -> set[BlockSystem]:
    """Closures of all single-pair block merges of b, deduplicated."""
    k = num_blocks(b)
    out: set[BlockSystem] = set()
    for la in range(k):
        for lb in range(la + 1, k):
            out.add(closure(c, merge_blocks(b, la, lb)))
    return out


def block_system_of(c: WeightConfig, n: int, coords) -> BlockSystem:
    """The block system of the order-n torus point with the given residues."""
    if n < 1:
        raise ValueError("modulus must be >= 1")
    if len(coords) != c.r:
        raise ValueError("coordinate vector has wrong length")
    for rel in c.base_relations:
        if sum(x * y for x, y in zip(rel, coords)) % n:
            raise ValueError(f"coordinates violate base relation {rel} mod {n}")
    values = [sum(x * y for x, y in zip(f, coords)) % n for f in c.forms]
    seen: dict[int, int] = {}
    labels = []
    for v in values:
        if v not in seen:
            seen[v] = len(seen)
        labels.append(seen[v])
    return tuple(labels)
