"""Search engine: BFS over closed coarsenings, profiles, and order sets.

Starting from the discrete block system, every stored system of positive
dimension is expanded: merge each pair of its blocks, close, canonicalize,
and keep whatever is new.  Merging two blocks adds exactly one new relation
row, so dimension drops by at most one per step and the hybrid mode below a
dimension threshold cannot miss anything: every finite stabilizer is reached
through some stored seed of exactly the threshold dimension.

In hybrid mode the systems below the threshold are never stored globally;
each threshold-dimension seed is searched depth-first with a subtree-local
dedup set and only the finite-stabilizer exponents are kept.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm
import multiprocessing as mp

import numpy as np

from .blocks import (
    BlockSystem,
    discrete_system,
    one_block_system,
    stabilizer_relations,
)
from .canon import canonical_partition
from .intlattice import FinAbGroup, element_order, hnf, quotient_group, snf
from .weightconfig import (
    DEFAULT_GROUP_CAP,
    FormAction,
    WeightConfig,
    expand_symmetry,
)

SCHEMA_VERSION = 1


class ResourceBudgetExceeded(RuntimeError):
    pass


class UnsupportedConfig(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Expansion engine


class Engine:
    """Per-config expansion machinery shared by BFS waves and DFS descents."""

    def __init__(self, config: WeightConfig, action: FormAction):
        self.config = config
        self.action = action
        self.forms = np.asarray(config.forms, dtype=np.int64)
        self.r = config.r
        self.base = [tuple(row) for row in config.base_relations]

    def root(self) -> BlockSystem:
        return discrete_system(self.config.d)

    def hnf_of(self, b: BlockSystem) -> list[tuple[int, ...]]:
        return hnf(stabilizer_relations(self.config, b), cols=self.r)

    def dim_of_hnf(self, h) -> int:
        return self.r - len(h)

    def invariant_factors_of_hnf(self, h) -> tuple[int, ...]:
        res = snf(h, cols=self.r)
        return tuple(d for d in res.divisors if d >= 2)

    def _reduce_forms(self, h) -> np.ndarray:
        w = self.forms.copy()
        for row in h:
            c = next(j for j, x in enumerate(row) if x)
            q = w[:, c] // row[c]
            nz = q.nonzero()[0]
            if len(nz):
                w[nz] -= q[nz, None] * np.asarray(row, dtype=np.int64)
        return w

    def partition_of_hnf(self, h) -> BlockSystem:
        """Closure partition: group forms by residue modulo the lattice."""
        w = self._reduce_forms(h)
        seen: dict[bytes, int] = {}
        labels = []
        for rowbytes in (r.tobytes() for r in w):
            lab = seen.setdefault(rowbytes, len(seen))
            labels.append(lab)
        return tuple(labels)

    def children(self, b: BlockSystem, h) -> list[tuple[BlockSystem, list, int]]:
        """Closed single-merge coarsenings of b, with their HNF and dimension.

        For a closed b the relation lattice of a merge is the parent lattice
        plus the single difference of the two block representatives.
        """
        k = max(b) + 1
        rep = [-1] * k
        for i, lab in enumerate(b):
            if rep[lab] < 0:
                rep[lab] = i
        out: dict[BlockSystem, tuple[list, int]] = {}
        forms = self.config.forms
        for la in range(k):
            fa = forms[rep[la]]
            for lb in range(la + 1, k):
                fb = forms[rep[lb]]
                v = tuple(x - y for x, y in zip(fa, fb))
                ch = hnf(list(h) + [v], cols=self.r)
                child = self.partition_of_hnf(ch)
                if child not in out:
                    out[child] = (ch, self.r - len(ch))
        return [(child, ch, dim) for child, (ch, dim) in out.items()]


# ---------------------------------------------------------------------------
# Worker plumbing (fork-based; the engine is built once per process)

_WORKER_ENGINE: Engine | None = None


def _init_worker(config: WeightConfig, action: FormAction) -> None:
    global _WORKER_ENGINE
    _WORKER_ENGINE = Engine(config, action)


def _expand_chunk(keys: list[BlockSystem]):
    """BFS task: expand stored systems, return candidate key -> (dim, invf)."""
    eng = _WORKER_ENGINE
    out: dict[BlockSystem, tuple[int, tuple[int, ...]]] = {}
    for b in keys:
        h = eng.hnf_of(b)
        for child, ch, dim in eng.children(b, h):
            key = canonical_partition(eng.action, child)
            if key in out:
                continue
            invf = eng.invariant_factors_of_hnf(ch) if dim == 0 else ()
            out[key] = (dim, invf)
    return out


def _dfs_exponents(eng: Engine, seed: BlockSystem) -> set[int]:
    """Exponent set of all finite stabilizers below one seed (subtree dedup)."""
    seen: set[BlockSystem] = set()
    exps: set[int] = set()
    stack: list[tuple[BlockSystem, list]] = [(seed, eng.hnf_of(seed))]
    while stack:
        b, h = stack.pop()
        for child, ch, dim in eng.children(b, h):
            key = canonical_partition(eng.action, child)
            if key in seen:
                continue
            seen.add(key)
            if dim == 0:
                invf = eng.invariant_factors_of_hnf(ch)
                exps.add(invf[-1] if invf else 1)
            else:
                stack.append((child, ch))
    return exps


def _dfs_chunk(seeds: list[BlockSystem]) -> set[int]:
    eng = _WORKER_ENGINE
    out: set[int] = set()
    for seed in seeds:
        out |= _dfs_exponents(eng, seed)
    return out


def _chunks(items: list, n: int):
    size = max(1, (len(items) + n - 1) // n)
    for i in range(0, len(items), size):
        yield items[i : i + size]


# ---------------------------------------------------------------------------
# Reports


@dataclass
class SearchReport:
    config: str
    mode: str                       # "full" | "hybrid"
    threshold: int
    profile: dict[int, int]
    exponents_raw: list[int]        # sorted; with multiplicity in full mode
    cofactor_m: int
    center_order: int
    avoiding_orders: list[int] | None
    timing: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    @property
    def systems_total(self) -> int:
        return sum(self.profile.values())

    @property
    def exponent_set(self) -> list[int]:
        return sorted(set(self.exponents_raw))

    @property
    def exponents_scaled(self) -> list[int]:
        return [self.cofactor_m * e for e in self.exponents_raw]

    @property
    def order_set(self) -> list[int]:
        out: set[int] = set()
        for e in set(self.exponents_scaled):
            out.update(q for q in range(1, e + 1) if e % q == 0)
        return sorted(out)

    def to_json(self) -> str:
        payload = {
            "schema": SCHEMA_VERSION,
            "config": self.config,
            "mode": self.mode,
            "threshold": self.threshold,
            "profile": {str(k): v for k, v in sorted(self.profile.items(), reverse=True)},
            "systems_total": self.systems_total,
            "exponents_raw": self.exponents_raw,
            "exponents_scaled": self.exponents_scaled,
            "exponent_set": self.exponent_set,
            "order_set": self.order_set,
            "cofactor_m": self.cofactor_m,
            "center_order": self.center_order,
            "avoiding_orders": self.avoiding_orders,
            "timing": self.timing,
            "stats": self.stats,
        }
        return json.dumps(payload, indent=1, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "SearchReport":
        data = json.loads(text)
        if data.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {data.get('schema')!r}")
        return SearchReport(
            config=data["config"],
            mode=data["mode"],
            threshold=data["threshold"],
            profile={int(k): v for k, v in data["profile"].items()},
            exponents_raw=list(data["exponents_raw"]),
            cofactor_m=data["cofactor_m"],
            center_order=data["center_order"],
            avoiding_orders=(
                list(data["avoiding_orders"])
                if data["avoiding_orders"] is not None
                else None
            ),
            timing=data.get("timing", {}),
            stats=data.get("stats", {}),
        )

    def table(self) -> str:
        """Human-readable dimension-profile table."""
        lines = [f"config: {self.config}  mode: {self.mode}"]
        prof = "  ".join(
            f"{d}^{n}" if n != 1 else f"{d}"
            for d, n in sorted(self.profile.items(), reverse=True)
        )
        lines.append(f"dimension profile: {prof}")
        lines.append(f"systems: {self.systems_total}")
        lines.append(f"exponent set (raw): {self.exponent_set}")
        lines.append(f"exponent set (x{self.cofactor_m}): "
                     f"{sorted(set(self.exponents_scaled))}")
        lines.append(f"center order: {self.center_order}")
        if self.avoiding_orders is not None:
            lines.append(f"center-avoiding orders: {self.avoiding_orders}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Center machinery


def center_subgroup(
    c: WeightConfig,
) -> tuple[FinAbGroup, list[tuple[Fraction, ...]]]:
    """Torsion stabilizer of the one-block system, with ambient generators.

    This is the subgroup of the coordinate torus acting by the same scalar
    on the whole module.  It contains the representation kernel (the
    all-forms-zero subgroup); the faithful central image is the quotient by
    that kernel, see scalar_center_order.
    """
    rows = stabilizer_relations(c, one_block_system(c.d))
    _, group = quotient_group(c.r, rows)
    gens = []
    t = 0
    for i, d in enumerate(group.divisors):
        if d >= 2:
            coords = group.identity()
            coords = tuple(1 if j == t else 0 for j in range(len(coords)))
            gens.append(group.to_rational(coords))
            t += 1
    return group, gens


def representation_kernel(c: WeightConfig) -> FinAbGroup:
    """Torsion subgroup of the coordinate torus on which every form vanishes."""
    rows = [tuple(r) for r in c.base_relations] + [tuple(f) for f in c.forms]
    _, group = quotient_group(c.r, rows)
    return group


def _is_kernel_point(c: WeightConfig, theta) -> bool:
    return all(
        sum(Fraction(fi) * ti for fi, ti in zip(f, theta)) % 1 == 0
        for f in c.forms
    )


def central_elements(c: WeightConfig) -> list[tuple[Fraction, ...]]:
    """Nontrivially scalar-acting torus points, in ambient rational coords.

    These are the elements of the one-block stabilizer outside the
    representation kernel: the nonidentity central elements of the acting
    group, each listed once per coordinate-torus preimage.
    """
    stab, _ = center_subgroup(c)
    out = []
    for el in stab.elements():
        theta = stab.to_rational(el)
        if not _is_kernel_point(c, theta):
            out.append(theta)
    return out


def scalar_center_order(c: WeightConfig) -> int:
    """Order of the scalar-acting subgroup modulo the representation kernel."""
    stab, _ = center_subgroup(c)
    kernel = representation_kernel(c)
    return stab.order // kernel.order


_AVOID_CACHE: dict[tuple, frozenset[int]] = {}

MAX_STABILIZER_ORDER = 10**7


def _orders_avoiding(factors: tuple[int, ...], cands: tuple[tuple[tuple[int, ...], int], ...]):
    """Orders of elements x whose cyclic span misses every candidate element.

    ``cands`` pairs each nonidentity central element (in the group's
    invariant-factor coordinates) with its order.  z of order oz lies in <x>
    iff oz divides o(x) and z is a multiple of the order-oz element
    (o(x)/oz)*x; both checks vectorize over the whole element grid.
    """
    key = (factors, cands)
    cached = _AVOID_CACHE.get(key)
    if cached is not None:
        return cached
    fac = np.asarray(factors, dtype=np.int64)
    grids = np.indices(tuple(factors)).reshape(len(factors), -1).T
    per = fac // np.gcd(grids, fac)
    ords = per[:, 0]
    for j in range(1, per.shape[1]):
        ords = np.lcm(ords, per[:, j])
    contains = np.zeros(len(grids), dtype=bool)
    for z, oz in cands:
        mask = ~contains & (ords % oz == 0)
        if not mask.any():
            continue
        t = (ords[mask] // oz)[:, None] * grids[mask] % fac
        zz = np.asarray(z, dtype=np.int64)
        ok = np.zeros(int(mask.sum()), dtype=bool)
        for k in range(1, oz):
            ok |= np.all(k * t % fac == zz, axis=1)
        contains[mask] |= ok
    result = frozenset(int(o) for o in np.unique(ords[~contains]))
    _AVOID_CACHE[key] = result
    return result


def avoiding_orders(
    c: WeightConfig,
    dim0_systems: list[BlockSystem],
    exponents: list[int],
) -> list[int]:
    """Orders of finite-stabilizer elements that do not power into the center.

    An element qualifies when its cyclic span contains no torus point acting
    by a nontrivial scalar; scanning is exhaustive per stabilizer, with a
    cache keyed by the group shape and the located central elements.
    """
    centrals = central_elements(c)
    if not centrals:
        out: set[int] = set()
        for e in set(exponents):
            out.update(q for q in range(1, e + 1) if e % q == 0)
        return sorted(out)
    out = set()
    for b in dim0_systems:
        rows = stabilizer_relations(c, b)
        _, group = quotient_group(c.r, rows)
        if group.order > MAX_STABILIZER_ORDER:
            raise ResourceBudgetExceeded(
                f"stabilizer order {group.order} exceeds the element-scan guard"
            )
        zs = sorted({group.from_rational(theta) for theta in centrals})
        cands = tuple((z, element_order(group, z)) for z in zs)
        out |= _orders_avoiding(group.invariant_factors, cands)
    return sorted(out)


# ---------------------------------------------------------------------------
# Main enumeration


def enumerate_systems(
    config: WeightConfig,
    mode: str = "full",
    threshold: int = 0,
    jobs: int = 1,
    limit_seeds: int | None = None,
    checkpoint: str | None = None,
    group_cap: int = DEFAULT_GROUP_CAP,
    with_avoiding: bool = True,
    log=None,
) -> SearchReport:
    """Run the block-system search and assemble the report.

    ``mode`` is "full" or "hybrid"; hybrid stores nothing below ``threshold``
    and only collects finite-stabilizer exponents there.  Output is a
    deterministic function of (config, mode, threshold, limit_seeds)
    regardless of ``jobs``.
    """
    if mode not in ("full", "hybrid"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "full":
        threshold = 0
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    t0 = time.monotonic()
    action = expand_symmetry(config, cap=group_cap)
    eng = Engine(config, action)

    store: dict[BlockSystem, tuple[int, tuple[int, ...]]] = {}
    loaded = False
    if checkpoint is not None:
        loaded_store = _load_checkpoint(checkpoint)
        if loaded_store is not None:
            store = loaded_store
            loaded = True

    pool = None
    ctx = mp.get_context("fork")
    if jobs > 1:
        pool = ProcessPoolExecutor(
            max_workers=jobs,
            mp_context=ctx,
            initializer=_init_worker,
            initargs=(config, action),
        )
    _init_worker(config, action)

    def run_tasks(func, items):
        if pool is None or len(items) <= 1:
            return [func(chunk) for chunk in items]
        return list(pool.map(func, items))

    waves = 0
    try:
        if not loaded:
            root = eng.root()
            root_key = canonical_partition(action, root)
            root_h = eng.hnf_of(root)
            root_dim = eng.dim_of_hnf(root_h)
            root_invf = (
                eng.invariant_factors_of_hnf(root_h) if root_dim == 0 else ()
            )
            store[root_key] = (root_dim, root_invf)
            frontier = [root_key] if root_dim > threshold else []
            while frontier:
                waves += 1
                if log:
                    log(f"wave {waves}: expanding {len(frontier)} systems "
                        f"(stored {len(store)})")
                chunks = list(_chunks(sorted(frontier), jobs * 4))
                frontier = []
                for result in run_tasks(_expand_chunk, chunks):
                    for key, val in result.items():
                        if key not in store:
                            store[key] = val
                            if val[0] > threshold:
                                frontier.append(key)
            if checkpoint is not None:
                _write_checkpoint(checkpoint, store)

        profile: dict[int, int] = {}
        for dim, _ in store.values():
            profile[dim] = profile.get(dim, 0) + 1

        if mode == "full":
            exponents = sorted(
                (invf[-1] if invf else 1)
                for dim, invf in store.values()
                if dim == 0
            )
        else:
            seeds = sorted(k for k, (dim, _) in store.items() if dim == threshold)
            if limit_seeds is not None:
                seeds = seeds[:limit_seeds]
            exp_set: set[int] = set(
                (invf[-1] if invf else 1)
                for dim, invf in store.values()
                if dim == 0
            )
            if log:
                log(f"hybrid descent: {len(seeds)} seeds")
            chunks = list(_chunks(seeds, max(jobs * 16, 1)))
            for result in run_tasks(_dfs_chunk, chunks):
                exp_set |= result
            exponents = sorted(exp_set)
    finally:
        if pool is not None:
            pool.shutdown()

    center_order = scalar_center_order(config)
    avoid: list[int] | None = None
    if with_avoiding:
        if mode == "full":
            dim0 = [k for k, (dim, _) in store.items() if dim == 0]
            avoid = avoiding_orders(config, dim0, exponents)
        elif center_order == 1:
            out: set[int] = set()
            for e in set(exponents):
                out.update(q for q in range(1, e + 1) if e % q == 0)
            avoid = sorted(out)
        # hybrid with nontrivial center: dim-0 systems are not stored, so the
        # per-stabilizer element scan is unavailable; left as None.

    elapsed = time.monotonic() - t0
    return SearchReport(
        config=config.name,
        mode=mode,
        threshold=threshold,
        profile=profile,
        exponents_raw=exponents,
        cofactor_m=config.cofactor_m,
        center_order=center_order,
        avoiding_orders=avoid,
        timing={"elapsed": round(elapsed, 3), "jobs": jobs},
        stats={
            "stored": len(store),
            "waves": waves,
            "limit_seeds": limit_seeds,
            "resumed": loaded,
        },
    )


def _write_checkpoint(path: str, store) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# torusblocks checkpoint v{SCHEMA_VERSION}\n")
        for key in sorted(store):
            dim, invf = store[key]
            fh.write(
                ",".join(map(str, key))
                + f";{dim};"
                + ",".join(map(str, invf))
                + "\n"
            )


def _load_checkpoint(path: str):
    try:
        fh = open(path, encoding="utf-8")
    except FileNotFoundError:
        return None
    store: dict[BlockSystem, tuple[int, tuple[int, ...]]] = {}
    with fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key_s, dim_s, invf_s = line.split(";")
            key = tuple(int(x) for x in key_s.split(","))
            invf = tuple(int(x) for x in invf_s.split(",")) if invf_s else ()
            store[key] = (int(dim_s), invf)
    return store


# ---------------------------------------------------------------------------
# Order verdicts


@dataclass(frozen=True)
class OrderVerdict:
    n: int
    certified_good: bool
    configs: tuple[str, ...]
    reason: str | None          # "exponent-divisibility" | "multiple-of-good"


def _certifies(report: SearchReport, bad_primes: frozenset[int], n: int) -> bool:
    if any(n % p == 0 for p in bad_primes):
        return False
    return all(e % n for e in set(report.exponents_raw))


def order_verdicts(
    reports: list[tuple[SearchReport, frozenset[int]]], n_max: int
) -> list[OrderVerdict]:
    """Certify element orders as good from one or more search reports.

    Each entry pairs a report with the bad-prime set of its config.  Order n
    is good if some config coprime to n has no exponent divisible by n, or
    if some proper divisor > 1 of n is good that way (an element powers into
    every subgroup containing it).
    """
    if not reports:
        raise ValueError("at least one report required")
    direct: dict[int, tuple[str, ...]] = {}
    out: list[OrderVerdict] = []
    for n in range(1, n_max + 1):
        names = tuple(
            rep.config for rep, bad in reports if _certifies(rep, bad, n)
        )
        if names:
            direct[n] = names
            out.append(OrderVerdict(n, True, names, "exponent-divisibility"))
            continue
        via = [
            (m, direct[m])
            for m in range(2, n)
            if n % m == 0 and m in direct
        ]
        if via:
            _, names = via[0]
            out.append(OrderVerdict(n, True, names, "multiple-of-good"))
        else:
            out.append(OrderVerdict(n, False, (), None))
    return out


def bad_order_set(verdicts: list[OrderVerdict]) -> list[int]:
    return [v.n for v in verdicts if not v.certified_good]
