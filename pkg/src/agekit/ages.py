"""Finitely bounded classes: the ages of the infinite base structures.

A class is given by a signature, a finite set of forbidden bounds, and
user-asserted flags (homogeneity, Ramsey).  The infinite structure itself
is never materialized; every computation runs on its age.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

from .errors import InputError
from .structures import (
    FinStructure,
    Signature,
    canonical_form,
    embeds,
    empty_structure,
    encode_key,
    one_point_extensions,
    sort_key,
)


@dataclass(frozen=True)
class BoundedClass:
    """A finitely bounded homogeneous class, represented by its bounds.

    Bounds are normalized on construction: canonicalized, deduplicated and
    minimized (a bound into which another bound embeds is dropped).
    """

    name: str
    signature: Signature
    bounds: tuple[FinStructure, ...]
    homogeneous_asserted: bool = False
    ramsey_asserted: bool = False
    _hash: int = field(init=False, repr=False, compare=False, default=0)

    def __post_init__(self):
        for b in self.bounds:
            if b.signature != self.signature:
                raise InputError(f"bound signature mismatch in class {self.name}")
            if b.size < 1:
                raise InputError(f"class {self.name}: bound sizes must be >= 1")
        normalized = []
        for b in sorted({canonical_form(b) for b in self.bounds}, key=sort_key):
            if not any(embeds(prev, b) for prev in normalized):
                normalized.append(b)
        object.__setattr__(self, "bounds", tuple(normalized))
        object.__setattr__(
            self,
            "_hash",
            hash((self.name, self.signature, self.bounds,
                  self.homogeneous_asserted, self.ramsey_asserted)),
        )

    def __hash__(self) -> int:
        return self._hash

    @property
    def max_bound_size(self) -> int:
        return max((b.size for b in self.bounds), default=0)


def in_age(k: BoundedClass, s: FinStructure) -> bool:
    """True iff no bound of the class embeds into s."""
    if s.signature != k.signature:
        raise InputError("in_age: signature mismatch")
    return _in_age(k, s)


@lru_cache(maxsize=1 << 18)
def _in_age(k: BoundedClass, s: FinStructure) -> bool:
    return not any(embeds(b, s) for b in k.bounds)


@lru_cache(maxsize=None)
def enumerate_age(k: BoundedClass, n: int) -> tuple[FinStructure, ...]:
    """One canonical representative per isomorphism class of age members of size n."""
    if n < 0:
        raise InputError("enumerate_age: n must be >= 0")
    if n == 0:
        return (empty_structure(k.signature),)
    seen = set()
    for base in enumerate_age(k, n - 1):
        for ext in one_point_extensions(base):
            if _in_age(k, ext):
                seen.add(canonical_form(ext))
    return tuple(sorted(seen, key=encode_key))


def default_ap_cap(k: BoundedClass) -> int:
    return max(2, 2 * k.max_bound_size)


@dataclass(frozen=True)
class AmalgamationResult:
    ok: bool
    strong: bool
    cap: int
    diagrams_checked: int
    counterexample: tuple[FinStructure, FinStructure, FinStructure] | None


def check_amalgamation(k: BoundedClass, cap: int | None = None,
                       strong: bool = False) -> AmalgamationResult:
    """One-point amalgamation over all diagrams B0 <= B1, B2 with |Bi| <= cap.

    B0 ranges over age members of size 0..cap-1 (the empty diagram covers
    joint embedding, which the strong variant needs for the no-algebraicity
    proxy); B1, B2 range over labelled one-point age extensions of B0.  The
    strong variant only accepts amalgams that keep the two new points
    distinct.  Returns the first failing diagram, if any.
    """
    if cap is None:
        cap = default_ap_cap(k)
    if cap < 1:
        raise InputError("check_amalgamation: cap must be >= 1")
    checked = 0
    for s in range(0, cap):
        for b0 in enumerate_age(k, s):
            exts = [e for e in one_point_extensions(b0) if _in_age(k, e)]
            for b1 in exts:
                for b2 in exts:
                    checked += 1
                    if not _one_point_amalgam_exists(k, b0, b1, b2, strong):
                        return AmalgamationResult(False, strong, cap, checked, (b0, b1, b2))
    return AmalgamationResult(True, strong, cap, checked, None)


def _one_point_amalgam_exists(k, b0, b1, b2, strong) -> bool:
    s = b0.size
    if not strong and b1.tables == b2.tables:
        # identifying the two new points yields b1 itself
        return True
    # amalgam on s+2 points: base b0, new points s (from b1) and s+1 (from b2)
    sig = k.signature
    tables = [set(t) for t in b1.tables]
    remap = {i: i for i in range(s)}
    remap[s] = s + 1
    for si in range(len(sig.symbols)):
        for t in b2.tables[si]:
            if s in t:
                tables[si].add(tuple(remap[v] for v in t))
    free = []
    for si, (_, arity) in enumerate(sig.symbols):
        for t in product(range(s + 2), repeat=arity):
            if s in t and s + 1 in t:
                free.append((si, t))
    for bits in range(1 << len(free)):
        cand = [set(t) for t in tables]
        for j, (si, t) in enumerate(free):
            if bits >> j & 1:
                cand[si].add(t)
        c = FinStructure(sig, s + 2, tuple(frozenset(t) for t in cand))
        if _in_age(k, c):
            return True
    return False


def unconstrained_class(sig: Signature, name: str = "all") -> BoundedClass:
    return BoundedClass(name, sig, ())


def age_equal_upto(a: BoundedClass, b: BoundedClass, n: int) -> bool:
    """Same age members at every size up to n (canonical representatives)."""
    if a.signature != b.signature:
        return False
    return all(enumerate_age(a, i) == enumerate_age(b, i) for i in range(n + 1))
