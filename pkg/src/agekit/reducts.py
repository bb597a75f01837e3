"""First-order reducts given by quantifier-free formulas or orbit-union literals.

Each relation of a reduct compiles to an orbit union: the set of types of
the base class on which the defining formula holds.  Orbit unions are the
currency of relation preservation throughout the core and decision modules.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .ages import BoundedClass
from .errors import InputError
from .ktypes import KType, enumerate_types, serialize_type
from .structures import QfFormula, eval_qf, render_formula, validate_formula


@dataclass(frozen=True)
class FormulaDef:
    formula: QfFormula


@dataclass(frozen=True)
class OrbitsDef:
    members: tuple[KType, ...]


RelDef = FormulaDef | OrbitsDef


@dataclass(frozen=True)
class Relation:
    name: str
    arity: int
    definition: RelDef


@dataclass(frozen=True)
class Reduct:
    name: str
    base: BoundedClass
    relations: tuple[Relation, ...]

    def __post_init__(self):
        names = [r.name for r in self.relations]
        if len(set(names)) != len(names):
            raise InputError(f"reduct {self.name}: duplicate relation names")
        for r in self.relations:
            if r.arity < 1:
                raise InputError(f"relation {r.name}: arity must be >= 1")
            if isinstance(r.definition, FormulaDef):
                validate_formula(r.definition.formula, self.base.signature, r.arity)
            else:
                for t in r.definition.members:
                    if t.k != r.arity:
                        raise InputError(
                            f"relation {r.name}: orbit literal at wrong level {t.k}")

    def relation(self, name: str) -> Relation:
        for r in self.relations:
            if r.name == name:
                return r
        raise InputError(f"reduct {self.name}: no relation named {name!r}")

    @property
    def max_arity(self) -> int:
        return max((r.arity for r in self.relations), default=1)


@dataclass(frozen=True)
class OrbitUnion:
    arity: int
    members: frozenset[KType]

    def sorted_members(self) -> tuple[KType, ...]:
        return tuple(sorted(self.members, key=serialize_type))


@lru_cache(maxsize=None)
def compile_orbit_union(c: Reduct, name: str) -> OrbitUnion:
    """The set of base types on which the relation's definition holds."""
    rel = c.relation(name)
    all_types = enumerate_types(c.base, rel.arity)
    if isinstance(rel.definition, OrbitsDef):
        universe = set(all_types)
        for t in rel.definition.members:
            if t not in universe:
                raise InputError(
                    f"relation {name}: {serialize_type(t)} is not a type of {c.base.name}")
        return OrbitUnion(rel.arity, frozenset(rel.definition.members))
    phi = rel.definition.formula
    members = frozenset(
        p for p in all_types if eval_qf(phi, p.quotient, p.blocks)
    )
    return OrbitUnion(rel.arity, members)


def compiled_unions(c: Reduct) -> tuple[tuple[str, OrbitUnion], ...]:
    return tuple((r.name, compile_orbit_union(c, r.name)) for r in c.relations)


def behaviour_preserves_relation(xi, src: OrbitUnion, tgt: OrbitUnion) -> bool:
    """True iff xi's induced map at the unions' arity sends src into tgt."""
    if src.arity != tgt.arity:
        raise InputError("behaviour_preserves_relation: arity mismatch")
    if src.arity > xi.k:
        raise InputError("behaviour_preserves_relation: behaviour level too small")
    return all(xi.apply_type(p) in tgt.members for p in src.members)


def render_reldef(base: BoundedClass, d: RelDef) -> str:
    if isinstance(d, FormulaDef):
        return render_formula(d.formula)
    body = ", ".join(serialize_type(t) for t in sorted(d.members, key=serialize_type))
    return f"orbits [ {body} ]"
