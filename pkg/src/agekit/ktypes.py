"""Quantifier-free k-types: orbits of k-tuples of the infinite base structure.

A k-type is an equality partition of the positions {0..k-1} plus the
structure induced on the blocks; blocks are ordered by least position, so
the partition is stored as a restricted-growth string.  Two tuples lie in
the same orbit of a homogeneous structure iff they have the same k-type.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

from .ages import BoundedClass, _in_age, in_age
from .errors import InputError
from .structures import FinStructure, induced, parse_literal, render_literal


@dataclass(frozen=True)
class KType:
    """k positions, partition as a restricted-growth string, quotient on blocks."""

    k: int
    blocks: tuple[int, ...]
    quotient: FinStructure

    def __post_init__(self):
        if self.k < 1 or len(self.blocks) != self.k:
            raise InputError(f"bad type length: k={self.k}, blocks={self.blocks}")
        top = -1
        for b in self.blocks:
            if b > top + 1 or b < 0:
                raise InputError(f"partition not in first-occurrence order: {self.blocks}")
            top = max(top, b)
        if self.quotient.size != top + 1:
            raise InputError("quotient size does not match number of blocks")

    @property
    def nblocks(self) -> int:
        return self.quotient.size

    @property
    def degenerate_pair(self) -> bool:
        return self.blocks == (0, 0)


def serialize_type(p: KType) -> str:
    parts = []
    for b in range(p.nblocks):
        members = [str(i) for i in range(p.k) if p.blocks[i] == b]
        parts.append("{" + ",".join(members) + "}")
    return f"[{''.join(parts)}|{render_literal(p.quotient)}]"


def parse_type(sig, text: str) -> KType:
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise InputError(f"bad type serialization: {text!r}")
    part, _, lit = text[1:-1].partition("|")
    if not part.startswith("{") or not part.endswith("}"):
        raise InputError(f"bad partition in type: {part!r}")
    assign: dict[int, int] = {}
    for b, group in enumerate(part[1:-1].split("}{")):
        for tok in group.split(","):
            if tok == "":
                raise InputError(f"bad partition block in type: {part!r}")
            assign[int(tok)] = b
    k = len(assign)
    if sorted(assign) != list(range(k)):
        raise InputError(f"partition does not cover 0..{k - 1}: {part!r}")
    blocks = tuple(assign[i] for i in range(k))
    return KType(k, blocks, parse_literal(sig, lit))


def type_of_raw(s: FinStructure, tup) -> KType:
    """The type of a tuple of points of s (no age membership check)."""
    tup = tuple(tup)
    if not tup:
        raise InputError("type_of: tuple must be nonempty")
    if any(not (0 <= v < s.size) for v in tup):
        raise InputError(f"type_of: entry out of range: {tup}")
    reps: list[int] = []
    blocks = []
    for v in tup:
        if v not in reps:
            reps.append(v)
        blocks.append(reps.index(v))
    return KType(len(tup), tuple(blocks), induced(s, reps))


def type_of(k: BoundedClass, s: FinStructure, tup) -> KType:
    """The type of a tuple in an age member of k."""
    if not in_age(k, s):
        raise InputError("type_of: structure outside the age")
    return type_of_raw(s, tup)


def restrict_type(p: KType, sigma) -> KType:
    """The type of (t_{sigma(0)},..,t_{sigma(j-1)}) for any tuple t of type p."""
    sigma = tuple(sigma)
    if not sigma:
        raise InputError("restrict_type: sigma must be nonempty")
    if any(not (0 <= v < p.k) for v in sigma):
        raise InputError(f"restrict_type: sigma out of range: {sigma}")
    old = [p.blocks[v] for v in sigma]
    reps: list[int] = []
    blocks = []
    for b in old:
        if b not in reps:
            reps.append(b)
        blocks.append(reps.index(b))
    return KType(len(sigma), tuple(blocks), induced(p.quotient, reps))


def partitions_rgs(k: int):
    """Restricted-growth strings of length k in lexicographic order."""
    rgs = [0] * k

    def rec(i: int, top: int):
        if i == k:
            yield tuple(rgs)
            return
        for b in range(top + 2):
            rgs[i] = b
            yield from rec(i + 1, max(top, b))

    yield from rec(1, 0) if k > 1 else iter([(0,)])


@lru_cache(maxsize=None)
def _labeled_age_structures(k: BoundedClass, n: int) -> tuple[FinStructure, ...]:
    """All labelled structures on n points that lie in the age, in atom-mask order."""
    sig = k.signature
    slots = []
    for si, (_, arity) in enumerate(sig.symbols):
        for t in product(range(n), repeat=arity):
            slots.append((si, t))
    if len(slots) > 20:
        raise InputError("type enumeration: relation space too large at this level")
    out = []
    for bits in range(1 << len(slots)):
        tables = [set() for _ in sig.symbols]
        for j, (si, t) in enumerate(slots):
            if bits >> j & 1:
                tables[si].add(t)
        s = FinStructure(sig, n, tuple(frozenset(t) for t in tables))
        if _in_age(k, s):
            out.append(s)
    return tuple(out)


@lru_cache(maxsize=None)
def enumerate_types(k: BoundedClass, level: int) -> tuple[KType, ...]:
    """All k-types at the given level: partitions x labelled age members on blocks."""
    if level < 1:
        raise InputError("enumerate_types: level must be >= 1")
    out = []
    for rgs in partitions_rgs(level):
        nblocks = max(rgs) + 1
        for q in _labeled_age_structures(k, nblocks):
            out.append(KType(level, rgs, q))
    return tuple(out)


@lru_cache(maxsize=None)
def type_index(k: BoundedClass, level: int) -> dict[KType, int]:
    return {p: i for i, p in enumerate(enumerate_types(k, level))}


@lru_cache(maxsize=None)
def restrict_index_map(k: BoundedClass, level: int, sigma: tuple[int, ...]) -> tuple[int, ...]:
    """Index form of restrict_type: level-`level` types to level-`len(sigma)` types."""
    idx = type_index(k, len(sigma))
    return tuple(idx[restrict_type(p, sigma)] for p in enumerate_types(k, level))


@lru_cache(maxsize=None)
def pad_index_map(k: BoundedClass, m: int, level: int) -> tuple[int, ...]:
    """m-type index -> level-type index via the repeat-last-position padding."""
    if m > level:
        raise InputError("pad_index_map: m must be <= level")
    sigma = tuple(min(i, m - 1) for i in range(level))
    idx = type_index(k, level)
    return tuple(idx[restrict_type(p, sigma)] for p in enumerate_types(k, m))


@lru_cache(maxsize=None)
def first_m_index_map(k: BoundedClass, level: int, m: int) -> tuple[int, ...]:
    """level-type index -> m-type index by restriction to the first m positions."""
    return restrict_index_map(k, level, tuple(range(m)))


def default_level(*reducts_or_classes) -> int:
    """Max over all signatures and declared relation arities."""
    level = 1
    for obj in reducts_or_classes:
        if isinstance(obj, BoundedClass):
            level = max(level, obj.signature.max_arity)
        else:
            level = max(level, obj.base.signature.max_arity)
            level = max(level, max((r.arity for r in obj.relations), default=1))
    return level
