"""Model-complete core computation and optimal-presentation checking.

The core of a reduct is found by searching the realizable relation-preserving
range-rigid endo-behaviours of its base class, selecting one whose set of hit
types is inclusion-minimal, and carving the sub-age of members all of whose
k-types are hit.  The new age is presented by freshly scanned minimal bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product

from .ages import BoundedClass, in_age
from .canonical import (
    Behaviour,
    enumerate_behaviours,
    is_range_rigid,
    serialize_behaviour,
)
from .errors import InputError, InternalError
from .ktypes import KType, default_level, enumerate_types, type_of_raw
from .reducts import (
    OrbitsDef,
    Reduct,
    Relation,
    behaviour_preserves_relation,
    compiled_unions,
)
from .structures import canonical_form, enumerate_structures, induced, sort_key


@dataclass(frozen=True)
class CorePresentation:
    base_out: BoundedClass
    reduct_out: Reduct
    witness: Behaviour
    image_types: frozenset[KType]
    k: int
    scan_cap: int
    realize_cap: int | None


def _require_flags(c: Reduct) -> None:
    if not (c.base.homogeneous_asserted and c.base.ramsey_asserted):
        raise InputError(
            f"class {c.base.name} must assert homogeneous and ramsey for core search")


def _relation_filter(c: Reduct):
    unions = [u for _, u in compiled_unions(c)]

    def keeps_all(xi: Behaviour) -> bool:
        return all(behaviour_preserves_relation(xi, u, u) for u in unions)

    return keeps_all


def qualifying_behaviours(c: Reduct, k: int,
                          realize_cap: int | None = None) -> tuple[Behaviour, ...]:
    """Realizable relation-preserving range-rigid endo-behaviours of the base."""
    cands = enumerate_behaviours(c.base, c.base, k,
                                 table_filter=_relation_filter(c),
                                 realize_cap=realize_cap)
    return tuple(xi for xi in cands if is_range_rigid(xi))


def scan_cap_for(c: Reduct, k: int) -> int:
    return max(c.base.max_bound_size, c.base.signature.max_arity, k)


def _hits_only(image_types: frozenset[KType], s, k: int) -> bool:
    if s.size == 0:
        return True
    return all(
        type_of_raw(s, t) in image_types
        for t in product(range(s.size), repeat=k)
    )


def carve_bounds(base: BoundedClass, image_types: frozenset[KType], k: int,
                 cap: int) -> tuple:
    """Minimal structures outside the carved age, scanned up to the cap."""
    def member(s) -> bool:
        return in_age(base, s) and _hits_only(image_types, s, k)

    bounds = []
    for size in range(1, cap + 1):
        for s in enumerate_structures(base.signature, size):
            if member(s):
                continue
            if size > 1 and not all(
                member(induced(s, sub))
                for sub in combinations(range(size), size - 1)
            ):
                continue
            bounds.append(canonical_form(s))
    return tuple(sorted(bounds, key=sort_key))


@lru_cache(maxsize=None)
def compute_core(c: Reduct, k: int | None = None,
                 realize_cap: int | None = None) -> CorePresentation:
    """Model-complete core of a reduct, with an optimal presentation."""
    _require_flags(c)
    if k is None:
        k = default_level(c)
    if k < default_level(c):
        raise InputError(f"core search needs k >= {default_level(c)}")
    qualifying = qualifying_behaviours(c, k, realize_cap)
    if not qualifying:
        raise InternalError("no qualifying behaviour; identity should qualify")
    image_sets = [xi.image_types() for xi in qualifying]
    minimal = [
        xi for xi, s in zip(qualifying, image_sets)
        if not any(other < s for other in image_sets)
    ]
    witness = min(minimal, key=serialize_behaviour)
    image_types = witness.image_types()

    cap = scan_cap_for(c, k)
    base_out = BoundedClass(
        name=f"{c.name}_core_base",
        signature=c.base.signature,
        bounds=carve_bounds(c.base, image_types, k, cap),
        homogeneous_asserted=True,
        ramsey_asserted=True,
    )
    out_types = {m: set(enumerate_types(base_out, m))
                 for m in {r.arity for r in c.relations}}
    relations = []
    for r in c.relations:
        if isinstance(r.definition, OrbitsDef):
            kept = tuple(t for t in r.definition.members if t in out_types[r.arity])
            relations.append(Relation(r.name, r.arity, OrbitsDef(kept)))
        else:
            relations.append(r)
    reduct_out = Reduct(f"{c.name}_core", base_out, tuple(relations))
    return CorePresentation(base_out, reduct_out, witness, image_types, k,
                            cap, realize_cap)


def is_optimally_presented(c: Reduct, k: int | None = None,
                           realize_cap: int | None = None):
    """True iff every realizable relation-preserving endo-behaviour is surjective
    on k-types; otherwise returns a refuting (non-surjective) behaviour."""
    _require_flags(c)
    if k is None:
        k = default_level(c)
    ntypes = len(enumerate_types(c.base, k))
    cands = enumerate_behaviours(c.base, c.base, k,
                                 table_filter=_relation_filter(c),
                                 realize_cap=realize_cap)
    for xi in cands:
        if len(set(xi.table)) != ntypes:
            return False, xi
    return True, None
