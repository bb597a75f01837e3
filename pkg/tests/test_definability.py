"""Definability expansions: ep counting, pp verdicts with witnesses,
the pp-subset-of-ep property, witness verification."""

from itertools import product

import pytest

from agekit.certs import definable_certificate
from agekit.core import compute_core
from agekit.definability import (
    PolymorphismBehaviour,
    ep_expand,
    enumerate_poly_behaviours,
    parse_poly,
    poly_is_coherent,
    poly_is_compatible,
    poly_is_realizable,
    poly_preserves_union,
    pp_definable,
    pp_expand,
    serialize_poly,
)
from agekit.errors import InputError
from agekit.ktypes import enumerate_types, serialize_type
from agekit.reducts import OrbitUnion, compile_orbit_union
from agekit.verify import verify_certificate


def union_of(cls, level, *indices):
    types = enumerate_types(cls, level)
    return OrbitUnion(level, frozenset(types[i] for i in indices))


def oracle_expected_additions(p, n):
    """Combinatorial oracle: nonempty unions per arity minus declared duplicates."""
    declared = {}
    for r in p.reduct_out.relations:
        u = compile_orbit_union(p.reduct_out, r.name)
        declared.setdefault(u.arity, set()).add(u.members)
    total = 0
    for m in range(1, n + 1):
        count = (1 << len(enumerate_types(p.base_out, m))) - 1
        total += count - len(declared.get(m, set()))
    return total


class TestEpExpand:
    def test_qlt_adds_seven(self, catalog):
        p = compute_core(catalog.reduct("Qlt"))
        expanded = ep_expand(p, 2)
        added = len(expanded.relations) - len(p.reduct_out.relations)
        assert added == oracle_expected_additions(p, 2) == 7

    def test_point_core(self, catalog):
        p = compute_core(catalog.reduct("Qleq"))
        expanded = ep_expand(p, 2)
        added = len(expanded.relations) - len(p.reduct_out.relations)
        # one unary union; the single binary union duplicates <= on the point
        assert added == oracle_expected_additions(p, 2) == 1

    def test_clique_core(self, catalog):
        p = compute_core(catalog.reduct("Rg"))
        expanded = ep_expand(p, 2)
        added = len(expanded.relations) - len(p.reduct_out.relations)
        # unions of {=, edge}: 3 nonempty, one ({edge}) duplicates E; plus unary
        assert added == oracle_expected_additions(p, 2) == 3

    def test_added_relations_compile_to_their_unions(self, catalog):
        p = compute_core(catalog.reduct("Qlt"))
        expanded = ep_expand(p, 2)
        unions = [compile_orbit_union(expanded, r.name) for r in expanded.relations]
        binary = [u.members for u in unions if u.arity == 2]
        assert len(set(binary)) == len(binary)  # pairwise distinct
        universe = set()
        for members in binary:
            universe |= members
        assert universe == set(enumerate_types(p.base_out, 2))

    def test_invariant_under_witness_choice(self, catalog):
        # expansion depends only on the carved age, not on which minimal
        # witness produced it: re-coring yields the same expansion
        p = compute_core(catalog.reduct("Kww"))
        p2 = compute_core(p.reduct_out, p.k)
        a = [r.arity for r in ep_expand(p, 2).relations]
        b = [r.arity for r in ep_expand(p2, 2).relations]
        assert a == b


class TestPolymorphismBehaviours:
    def test_unary_polys_match_behaviours(self, linord):
        # arity-1 polymorphism behaviours are plain behaviours
        from agekit.canonical import enumerate_behaviours
        got = enumerate_poly_behaviours(linord, 1, 2)
        assert {tuple(xi.table) for xi in got} == \
            {b.table for b in enumerate_behaviours(linord, linord, 2)}

    def test_projections_always_present(self, linord):
        types = enumerate_types(linord, 2)
        t = len(types)
        got = enumerate_poly_behaviours(linord, 2, 2)
        proj0 = tuple(a for a, b in product(range(t), repeat=2))
        proj1 = tuple(b for a, b in product(range(t), repeat=2))
        tables = {xi.table for xi in got}
        assert proj0 in tables and proj1 in tables

    def test_compatibility_and_coherence_checks(self, linord):
        got = enumerate_poly_behaviours(linord, 2, 2)
        for xi in got:
            assert poly_is_compatible(xi) and poly_is_coherent(xi)

    def test_serialization_round_trip(self, linord):
        for xi in enumerate_poly_behaviours(linord, 2, 2)[:5]:
            assert parse_poly(serialize_poly(xi), linord, 2, 2) == xi


class TestPpDefinable:
    def test_atomic_lt_definable(self, catalog):
        p = compute_core(catalog.reduct("Qlt"))
        verdict = pp_definable(p, union_of(p.base_out, 2, 1))
        assert verdict.definable

    def test_equality_definable(self, catalog):
        for name in ("Qlt", "Rg"):
            p = compute_core(catalog.reduct(name))
            verdict = pp_definable(p, union_of(p.base_out, 2, 0))
            assert verdict.definable

    def test_disequality_not_definable_with_min_witness(self, catalog):
        p = compute_core(catalog.reduct("Qlt"))
        types = enumerate_types(p.base_out, 2)
        neq = union_of(p.base_out, 2, 1, 2)
        verdict = pp_definable(p, neq, arity_cap=2)
        assert not verdict.definable
        w = verdict.witness
        assert w.arity == 2
        # the componentwise-minimum signature: ((<),(>)) collapses to (=)
        assert w.apply_types((types[1], types[2])) == types[0]
        assert poly_preserves_union(w, union_of(p.base_out, 2, 1))
        assert not poly_preserves_union(w, neq)
        assert poly_is_realizable(w, verdict.realize_cap)

    def test_leq_not_definable_in_qlt_core(self, catalog):
        p = compute_core(catalog.reduct("Qlt"))
        verdict = pp_definable(p, union_of(p.base_out, 2, 0, 1))
        assert not verdict.definable

    def test_caps_recorded(self, catalog):
        p = compute_core(catalog.reduct("Qlt"))
        verdict = pp_definable(p, union_of(p.base_out, 2, 1))
        assert verdict.arity_cap == 1 and verdict.realize_cap >= 2
        assert "up to arity" in verdict.label and "realize-cap" in verdict.label

    def test_empty_union_rejected(self, catalog):
        p = compute_core(catalog.reduct("Qlt"))
        with pytest.raises(InputError):
            pp_definable(p, OrbitUnion(2, frozenset()))


class TestPpExpand:
    def test_qlt_core_adds_companions_but_not_disequality(self, catalog):
        p = compute_core(catalog.reduct("Qlt"))
        expanded = pp_expand(p, 2, arity_cap=3)
        unions = {r.name: compile_orbit_union(expanded, r.name)
                  for r in expanded.relations}
        types = enumerate_types(p.base_out, 2)
        members_sets = {frozenset(u.members) for u in unions.values()
                        if u.arity == 2}
        assert frozenset({types[1]}) in members_sets            # {<} declared
        assert frozenset({types[0]}) in members_sets            # {=}
        assert frozenset({types[2]}) in members_sets            # {>}
        assert frozenset(types) in members_sets                 # full
        assert frozenset({types[1], types[2]}) not in members_sets  # no !=
        assert frozenset({types[0], types[1]}) not in members_sets  # no <=

    def test_point_core_pp_equals_ep(self, catalog):
        p = compute_core(catalog.reduct("Qleq"))
        ep = ep_expand(p, 2)
        pp = pp_expand(p, 2)
        assert [(r.arity, compile_orbit_union(ep, r.name).members)
                for r in ep.relations] == \
               [(r.arity, compile_orbit_union(pp, r.name).members)
                for r in pp.relations]

    def test_clique_core_all_binary_unions_definable(self, catalog):
        p = compute_core(catalog.reduct("Rg"))
        ep = ep_expand(p, 2)
        pp = pp_expand(p, 2)
        assert len(pp.relations) == len(ep.relations)

    def test_pp_subset_of_ep_on_catalog(self, catalog):
        for name in ("Qlt", "Qleq", "Rg", "Kww", "Pt"):
            p = compute_core(catalog.reduct(name))
            ep_unions = {(u.arity, u.members) for u in
                         (compile_orbit_union(ep_expand(p, 2), r.name)
                          for r in ep_expand(p, 2).relations)}
            pp_unions = {(u.arity, u.members) for u in
                         (compile_orbit_union(pp_expand(p, 2), r.name)
                          for r in pp_expand(p, 2).relations)}
            assert pp_unions <= ep_unions


class TestWitnessVerification:
    def test_not_definable_witness_verifies_independently(self, catalog):
        c = catalog.reduct("Qlt")
        p = compute_core(c)
        neq = union_of(p.base_out, 2, 1, 2)
        verdict = pp_definable(p, neq)
        cert = definable_certificate(c, p, verdict)
        notes = verify_certificate(cert)
        assert any("violates" in n for n in notes)

    def test_tampered_witness_fails_verification(self, catalog):
        from agekit.verify import VerificationFailure
        c = catalog.reduct("Qlt")
        p = compute_core(c)
        neq = union_of(p.base_out, 2, 1, 2)
        verdict = pp_definable(p, neq)
        cert = definable_certificate(c, p, verdict)
        # break the table: swap the queried relation to one it preserves
        cert["relation"]["members"] = [
            serialize_type(t) for t in union_of(p.base_out, 2, 1).sorted_members()]
        with pytest.raises(VerificationFailure):
            verify_certificate(cert)
