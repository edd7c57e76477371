#!/usr/bin/env python3
"""
🧱 Instance compiler tests for BKS Collapse
Expansion of verified nodes into projective points and orthogonal triples.
"""

from fractions import Fraction

import pytest

from bks_collapse.algebra.geometry import Frame, Vector3
from bks_collapse.algebra.intervals import SymbolBindings
from bks_collapse.algebra.scalars import ExactScalar
from bks_collapse.errors import GeometryError, UnverifiedDerivationError
from bks_collapse.services.coloring_oracle import ColoringMode
from bks_collapse.services.derivation import Derivation, DerivationBuilder
from bks_collapse.services.derivation_verifier import verify_derivation
from bks_collapse.services.instance_compiler import (
    ContextSetBuilder,
    compile_instance,
    expand_to_triples,
    merge_context_sets,
)
from bks_collapse.services.rule_engine import RuleEngine

FRAME = Frame.standard(1)
E1, E2, E3 = FRAME.vectors


def _verified(build, name: str = "small") -> Derivation:
    engine = RuleEngine(DerivationBuilder(name), FRAME)
    engine.assume()
    build(engine)
    d = engine.derivation
    assert verify_derivation(d).passed
    return d


def _sum_rule(engine: RuleEngine) -> None:
    engine.apply_sum_rule(E1 + E2, E1 - E2)


def _orth_force(engine: RuleEngine) -> None:
    engine.apply_orth_force(E1, E2, engine._assumed())


def test_sum_rule_expands_into_deduplicated_triples():
    context = expand_to_triples(_verified(_sum_rule))
    # {w,Z,u} and {Z,g,m} share their points when w = g
    assert context.counts == (5, 2)
    assert context.check_triples() == []
    sum_node = "small:n1"
    assert all(t.provenance == [sum_node] for t in context.triples)


def test_orth_force_expands_into_one_triple():
    context = expand_to_triples(_verified(_orth_force))
    assert context.counts == (3, 1)
    assert {p.key for p in context.points} == {v.projective_key for v in FRAME.vectors}


def test_unverified_derivations_are_refused():
    engine = RuleEngine(DerivationBuilder("raw"), FRAME)
    engine.assume()
    _sum_rule(engine)
    with pytest.raises(UnverifiedDerivationError):
        expand_to_triples(engine.derivation)


def test_frame_triple_merges_with_node_triples():
    context = compile_instance([_verified(_sum_rule)], FRAME)
    assert context.counts == (5, 2)
    frame_triple = context.triples[0]
    assert frame_triple.provenance == ["frame", "small:n1"]
    assert context.point_of("frame:e1") == context.index_of(E1)


def test_restrict_keeps_one_derivation():
    context = compile_instance([_verified(_sum_rule, "first"), _verified(_orth_force, "second")], FRAME)
    first = context.restrict("first")
    second = context.restrict("second")
    assert first.counts == (5, 2)
    assert second.counts == (3, 1)
    assert context.restrict("third").counts == (0, 0)


def test_merge_deduplicates_across_sets():
    one = expand_to_triples(_verified(_sum_rule, "a"))
    two = expand_to_triples(_verified(_sum_rule, "b"))
    merged = merge_context_sets([one, two])
    assert merged.counts == (5, 2)
    assert all(len(t.provenance) == 2 for t in merged.triples)


def test_problem_labels_are_representatives():
    context = expand_to_triples(_verified(_orth_force))
    problem = context.to_problem(ColoringMode.EXHAUSTIVE)
    assert problem.point_count == 3
    assert problem.triples == [(0, 1, 2)]
    assert problem.labels == [p.representative for p in context.points]
    assert problem.mode == ColoringMode.EXHAUSTIVE


def test_check_triples_reports_tampering():
    context = expand_to_triples(_verified(_orth_force))
    vid = context.triples[0].vectors[0]
    context.vectors[vid] = Vector3.of(1, 1, 1)
    problems = context.check_triples()
    assert problems and "not pairwise orthogonal" in problems[0]
    with pytest.raises(KeyError):
        context.point_of("missing:v0")


def test_builder_rejects_bad_material():
    builder = ContextSetBuilder()
    with pytest.raises(GeometryError, match="zero"):
        builder.add_vector("v0", Vector3.zero())
    for vid, vector in [("a", E1), ("b", E2), ("c", E2.scale(-2)), ("d", E1 + E2)]:
        builder.add_vector(vid, vector)
    assert builder.add_vector("c", E2.scale(-2)) == builder.context.point_of("b")
    with pytest.raises(GeometryError, match="repeats a point"):
        builder.add_triple(("a", "b", "c"), "test")
    with pytest.raises(GeometryError, match="not pairwise orthogonal"):
        builder.add_triple(("a", "b", "d"), "test")


def test_symbolic_vectors_need_certified_values():
    bindings = SymbolBindings()
    bindings.bind_rotation(1, ExactScalar.from_fraction(Fraction(1, 2)), 1)
    c, _ = ExactScalar.pair(1)
    builder = ContextSetBuilder(bindings)
    with pytest.raises(GeometryError, match="certified nonzero"):
        builder.add_vector("v0", Vector3.of(c - Fraction(1, 2), 0, 0))
    assert builder.add_vector("v1", Vector3.of(c, 0, 1)) == 0
