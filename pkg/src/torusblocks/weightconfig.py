"""Problem instances: torus coordinates, eigenvalue forms, and symmetry.

A config fixes everything about one group/subgroup pair: the number r of
torus coordinates, the linear relations among them (SL determinant
conditions), the integer linear forms giving the eigenvalue exponents on the
module, the signed permutation group acting on the coordinates, and the
index of the coordinate torus in the full maximal torus.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from math import gcd

import numpy as np


class ConfigError(ValueError):
    """Raised on malformed config text; carries a 1-based line number."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class SignedPerm:
    """A permutation of the r coordinates with a global sign.

    ``perm`` is 0-based: coordinate k is sent to position perm[k].  The sign
    accommodates symmetries that only preserve the form set after a global
    negation (duality-composed block swaps).
    """

    perm: tuple[int, ...]
    sign: int = 1

    def __post_init__(self):
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError("perm is not a permutation")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @staticmethod
    def identity(r: int) -> "SignedPerm":
        return SignedPerm(tuple(range(r)), 1)

    def compose(self, other: "SignedPerm") -> "SignedPerm":
        """self after other: (self*other)(k) = self.perm[other.perm[k]]."""
        return SignedPerm(
            tuple(self.perm[other.perm[k]] for k in range(len(self.perm))),
            self.sign * other.sign,
        )

    def apply_vector(self, v):
        """Image of a coefficient vector: w[perm[k]] = sign * v[k]."""
        w = [0] * len(v)
        for k, x in enumerate(v):
            w[self.perm[k]] = self.sign * x
        return tuple(w)

    def sort_key(self):
        return (self.perm, 0 if self.sign == 1 else 1)


@dataclass(frozen=True)
class WeightConfig:
    name: str
    r: int
    base_relations: tuple[tuple[int, ...], ...]
    forms: tuple[tuple[int, ...], ...]
    symmetry_generators: tuple[SignedPerm, ...]
    cofactor_m: int = 1
    bad_primes: frozenset[int] = frozenset()
    reference_tG: int | None = None

    @property
    def d(self) -> int:
        return len(self.forms)


@dataclass(frozen=True)
class Diagnostics:
    ok: bool
    group_size: int | None
    messages: tuple[str, ...]


# ---------------------------------------------------------------------------
# Parsing

_CYCLES_RE = re.compile(r"\(([^()]*)\)")


def _parse_cycles(text: str, r: int, lineno: int) -> tuple[int, ...]:
    stripped = re.sub(r"\([^()]*\)", "", text).strip()
    if stripped:
        raise ConfigError(f"bad cycle notation {text!r}", lineno)
    perm = list(range(r))
    for cyc in _CYCLES_RE.findall(text):
        pts = []
        for tok in cyc.split():
            try:
                p = int(tok)
            except ValueError:
                raise ConfigError(f"bad cycle point {tok!r}", lineno) from None
            if not 1 <= p <= r:
                raise ConfigError(f"cycle point {p} out of range 1..{r}", lineno)
            pts.append(p - 1)
        if len(set(pts)) != len(pts):
            raise ConfigError("repeated point in cycle", lineno)
        for i, p in enumerate(pts):
            perm[p] = pts[(i + 1) % len(pts)]
    return tuple(perm)


def parse_config(text: str) -> WeightConfig:
    """Parse the line-oriented config format; '#' starts a comment."""
    name = None
    r = None
    relations: list[tuple[int, ...]] = []
    forms: list[tuple[int, ...]] = []
    sym_lines: list[tuple[str, int]] = []
    cofactor = 1
    bad_primes: set[int] = set()
    tG = None

    def int_row(value: str, lineno: int) -> tuple[int, ...]:
        try:
            row = tuple(int(tok) for tok in value.split())
        except ValueError:
            raise ConfigError(f"bad integer row {value!r}", lineno) from None
        if r is None:
            raise ConfigError("'generators:' must come before rows", lineno)
        if len(row) != r:
            raise ConfigError(
                f"row has {len(row)} entries, expected {r}", lineno
            )
        return row

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ConfigError(f"expected 'key: value', got {line!r}", lineno)
        key, value = (part.strip() for part in line.split(":", 1))
        if key == "name":
            name = value
        elif key == "generators":
            try:
                r = int(value)
            except ValueError:
                raise ConfigError(f"bad generator count {value!r}", lineno) from None
            if r < 1:
                raise ConfigError("generator count must be >= 1", lineno)
        elif key == "relation":
            relations.append(int_row(value, lineno))
        elif key == "form":
            forms.append(int_row(value, lineno))
        elif key == "symmetry":
            sym_lines.append((value, lineno))
        elif key == "cofactor":
            cofactor = int(value)
        elif key == "bad_primes":
            bad_primes = {int(tok) for tok in value.split()}
        elif key == "tG":
            tG = int(value)
        else:
            raise ConfigError(f"unknown key {key!r}", lineno)

    if name is None:
        raise ConfigError("missing 'name:'")
    if r is None:
        raise ConfigError("missing 'generators:'")
    if not forms:
        raise ConfigError("config declares no forms")

    gens = []
    for value, lineno in sym_lines:
        sign = 1
        body = value
        if value.endswith("+") or value.endswith("-"):
            sign = 1 if value[-1] == "+" else -1
            body = value[:-1].strip()
        gens.append(SignedPerm(_parse_cycles(body, r, lineno), sign))

    return WeightConfig(
        name=name,
        r=r,
        base_relations=tuple(relations),
        forms=tuple(forms),
        symmetry_generators=tuple(gens),
        cofactor_m=cofactor,
        bad_primes=frozenset(bad_primes),
        reference_tG=tG,
    )


def format_config(c: WeightConfig) -> str:
    """Inverse of parse_config, up to comments and whitespace."""
    lines = [f"name: {c.name}", f"generators: {c.r}"]
    lines += [f"relation: {' '.join(map(str, row))}" for row in c.base_relations]
    lines += [f"form: {' '.join(map(str, row))}" for row in c.forms]
    for g in c.symmetry_generators:
        lines.append(
            f"symmetry: {_format_cycles(g.perm)} {'+' if g.sign == 1 else '-'}"
        )
    lines.append(f"cofactor: {c.cofactor_m}")
    if c.bad_primes:
        lines.append(f"bad_primes: {' '.join(map(str, sorted(c.bad_primes)))}")
    if c.reference_tG is not None:
        lines.append(f"tG: {c.reference_tG}")
    return "\n".join(lines) + "\n"


def _format_cycles(perm: tuple[int, ...]) -> str:
    seen = set()
    cycles = []
    for start in range(len(perm)):
        if start in seen or perm[start] == start:
            seen.add(start)
            continue
        cyc = [start]
        seen.add(start)
        k = perm[start]
        while k != start:
            cyc.append(k)
            seen.add(k)
            k = perm[k]
        cycles.append("(" + " ".join(str(p + 1) for p in cyc) + ")")
    return "".join(cycles) if cycles else "()"


def load_builtin(name: str) -> WeightConfig:
    """Load one of the bundled configs by name."""
    ref = resources.files("torusblocks") / "configs" / f"{name}.cfg"
    if not ref.is_file():
        raise KeyError(f"no bundled config named {name!r}")
    return parse_config(ref.read_text("utf-8"))


def builtin_names() -> list[str]:
    base = resources.files("torusblocks") / "configs"
    return sorted(p.name[:-4] for p in base.iterdir() if p.name.endswith(".cfg"))


# ---------------------------------------------------------------------------
# Symmetry expansion


DEFAULT_GROUP_CAP = 50_000


class GroupCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class FormAction:
    """The expanded symmetry group realized on form indices.

    ``table[g][i]`` is the image index of form i under group element g, and
    ``inv_table`` its inverse permutation; both are (G, d) numpy arrays.
    ``coord_perms``/``signs`` carry the underlying coordinate action for
    canonicalizing element coordinate vectors.
    """

    elements: tuple[SignedPerm, ...]
    d: int
    table: np.ndarray = field(repr=False)
    inv_table: np.ndarray = field(repr=False)
    coord_perms: np.ndarray = field(repr=False)
    signs: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.elements)


def _expand_group(generators, r: int, cap: int) -> list[SignedPerm]:
    ident = SignedPerm.identity(r)
    seen = {(ident.perm, ident.sign): ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for g in frontier:
            for gen in generators:
                h = gen.compose(g)
                key = (h.perm, h.sign)
                if key not in seen:
                    seen[key] = h
                    nxt.append(h)
                    if len(seen) > cap:
                        raise GroupCapExceeded(
                            f"symmetry group exceeds cap of {cap}"
                        )
        frontier = nxt
    return sorted(seen.values(), key=SignedPerm.sort_key)


def _form_permutation(c: WeightConfig, g: SignedPerm) -> list[int] | None:
    """Form-index permutation induced by g, or None if g is not a symmetry.

    Duplicate form vectors are matched occurrence by occurrence in index
    order, which keeps the table deterministic.
    """
    slots: dict[tuple[int, ...], list[int]] = {}
    for i, f in enumerate(c.forms):
        slots.setdefault(f, []).append(i)
    used = {k: 0 for k in slots}
    table = []
    for f in c.forms:
        w = g.apply_vector(f)
        lst = slots.get(w)
        if lst is None or used[w] >= len(lst):
            return None
        table.append(lst[used[w]])
        used[w] += 1
    return table


def expand_symmetry(c: WeightConfig, cap: int = DEFAULT_GROUP_CAP) -> FormAction:
    """Close the generators under composition and realize them on form indices."""
    elements = _expand_group(c.symmetry_generators, c.r, cap)
    G, d = len(elements), c.d
    table = np.empty((G, d), dtype=np.int16)
    inv_table = np.empty((G, d), dtype=np.int16)
    coord_perms = np.empty((G, c.r), dtype=np.int16)
    signs = np.empty(G, dtype=np.int16)
    for gi, g in enumerate(elements):
        perm = _form_permutation(c, g)
        if perm is None:
            raise ConfigError(
                f"generator product {g} does not permute the form set"
            )
        table[gi] = perm
        inv_table[gi, perm] = np.arange(d, dtype=np.int16)
        coord_perms[gi] = g.perm
        signs[gi] = g.sign
    return FormAction(
        elements=tuple(elements),
        d=d,
        table=table,
        inv_table=inv_table,
        coord_perms=coord_perms,
        signs=signs,
    )


def validate(c: WeightConfig, cap: int = DEFAULT_GROUP_CAP) -> Diagnostics:
    """Structured invariant checks; never raises on bad data."""
    msgs: list[str] = []
    for row in c.base_relations:
        if len(row) != c.r:
            msgs.append(f"base relation {row} has length != {c.r}")
    for f in c.forms:
        if len(f) != c.r:
            msgs.append(f"form {f} has length != {c.r}")
    if c.cofactor_m < 1:
        msgs.append("cofactor must be >= 1")
    for p in c.bad_primes:
        if p < 2 or any(p % q == 0 for q in range(2, p) if q * q <= p):
            msgs.append(f"bad prime {p} is not prime")
        elif c.cofactor_m % p:
            msgs.append(f"bad prime {p} does not divide the cofactor {c.cofactor_m}")

    rel_set = {row for row in c.base_relations}
    rel_set |= {tuple(-x for x in row) for row in c.base_relations}
    for g in c.symmetry_generators:
        for row in c.base_relations:
            if g.apply_vector(row) not in rel_set:
                msgs.append(
                    f"generator {g} does not preserve base relation {row}"
                )
        if _form_permutation(c, g) is None:
            msgs.append(f"generator {g} does not permute the form multiset")

    group_size = None
    if not msgs:
        try:
            group_size = len(expand_symmetry(c, cap=cap))
        except GroupCapExceeded as exc:
            msgs.append(str(exc))
    return Diagnostics(ok=not msgs, group_size=group_size, messages=tuple(msgs))
