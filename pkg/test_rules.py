#!/usr/bin/env python3
"""
🧩 Rule engine tests for BKS Collapse
Rule applications, their failure messages, valuation propagation and re-verification.
"""

import random
from fractions import Fraction

import pytest

from bks_collapse.algebra.geometry import Frame, Vector3
from bks_collapse.algebra.scalars import ExactScalar
from bks_collapse.errors import DerivationStructureError, RuleError
from bks_collapse.services.coloring_oracle import ColoringMode, iter_colorings
from bks_collapse.services.derivation import (
    CONTRADICTION,
    Conclusion,
    ConclusionKind,
    Derivation,
    DerivationBuilder,
    RuleKind,
)
from bks_collapse.services.derivation_verifier import check_structure, verify_derivation
from bks_collapse.services.fact_propagation import FactPropagator
from bks_collapse.services.instance_compiler import compile_instance
from bks_collapse.services.rule_engine import RuleEngine

FRAME = Frame.standard(1)
E1, E2, E3 = FRAME.vectors


def _engine(name: str = "test") -> RuleEngine:
    engine = RuleEngine(DerivationBuilder(name), FRAME)
    engine.assume()
    return engine


# Propagation

def test_triple_relation_forces_the_other_two_to_zero():
    propagator = FactPropagator(key_of=lambda vid: vid)
    propagator.add_relation(["a", "b", "c"], [], 1)
    result = propagator.run([("a", 1)])
    assert not result.conflict
    assert result.value("b") == 0 and result.value("c") == 0


def test_two_ones_in_a_triple_conflict():
    propagator = FactPropagator(key_of=lambda vid: vid)
    propagator.add_relation(["a", "b", "c"], [], 1)
    result = propagator.run([("a", 1), ("b", 1)])
    assert result.conflict
    assert result.forces("anything", 1)


def test_all_zero_triple_conflicts():
    propagator = FactPropagator(key_of=lambda vid: vid)
    propagator.add_relation(["a", "b", "c"], [], 1)
    assert propagator.run([("a", 0), ("b", 0), ("c", 0)]).conflict
    assert propagator.run([("a", 0), ("b", 0)]).value("c") == 1


def test_sum_relations_and_bounds_propagate():
    propagator = FactPropagator(key_of=lambda vid: vid)
    propagator.add_relation(["x", "y"], ["w"])
    propagator.add_bound("low", "w")
    result = propagator.run([("w", 0)])
    assert result.value("x") == 0 and result.value("y") == 0 and result.value("low") == 0
    assert propagator.run([("x", 1)]).value("w") == 1
    assert propagator.run([("low", 1)]).value("w") == 1


def test_keys_identify_vector_ids():
    propagator = FactPropagator(key_of=lambda vid: vid.rstrip("'"))
    propagator.add_relation(["a", "b", "c"], [], 1)
    assert propagator.run([("a'", 1)]).value("b") == 0


# Primitive rules

def test_orth_force_concludes_zero():
    engine = _engine()
    node = engine.apply_orth_force(E1, E2, engine._assumed())
    assert node.kind == RuleKind.ORTH_FORCE
    assert node.conclusion == Conclusion.of_fact(node.role("y"), 0)
    assert engine.derivation.vector(node.role("u")) == E3


def test_orth_force_by_triple_matches():
    engine = _engine()
    conclusion = engine.orth_force_by_triple(E1, E2 + E3, engine._assumed())
    direct = engine.apply_orth_force(E1, E2 + E3, engine._assumed())
    assert conclusion == direct.conclusion


def test_orth_force_needs_orthogonality_and_a_known_one():
    engine = _engine()
    with pytest.raises(RuleError, match="<x,y> = 0"):
        engine.apply_orth_force(E1, E1 + E2, engine._assumed())
    with pytest.raises(RuleError, match="v\\(x\\) = 1 is known"):
        engine.apply_orth_force(E2, E3)
    assert len(engine.derivation.nodes) == 1


def test_scale_relates_a_vector_to_its_multiple():
    engine = _engine()
    node = engine.apply_scale(E1 + E2, Fraction(-3, 2))
    assert engine.derivation.vector(node.role("y")) == Vector3.of(Fraction(-3, 2), Fraction(-3, 2), 0)
    with pytest.raises(RuleError, match="Scale: k != 0"):
        engine.apply_scale(E1, 0)


# S(g) rules

def test_sum_rule_on_a_symmetric_pair():
    engine = _engine()
    node = engine.apply_sum_rule(E1 + E2, E1 - E2)
    d = engine.derivation
    assert d.vector(node.role("w")) == E1
    assert node.conclusion.kind == ConclusionKind.RELATION
    assert node.premises == [engine.assumption.node_id]
    assert all(c.label for c in node.side_conditions)


def test_sum_rule_rejects_other_products():
    engine = _engine()
    with pytest.raises(RuleError, match="<X,Y>_S = -1 fails"):
        engine.apply_sum_rule(E1 + E2, E1 + E3)
    with pytest.raises(RuleError, match="<X,g> = 1 fails"):
        engine.apply_sum_rule(E2, E1 - E2)


def test_monotone_full_and_trivial():
    engine = _engine()
    full = engine.apply_monotone(E1 + E2, E1 + E3)
    assert full.conclusion.kind == ConclusionKind.RELATION
    d = engine.derivation
    assert d.vector(full.role("w")) == d.vector(full.role("Y"))
    assert full.scalar("t") == -2
    trivial = engine.apply_monotone(E1, E1 + E3)
    assert trivial.conclusion.kind == ConclusionKind.BOUND
    assert "W" not in trivial.roles


def test_monotone_side_conditions():
    engine = _engine()
    with pytest.raises(RuleError, match="Monotone: Y != g"):
        engine.apply_monotone(E1 + E2, E1)
    with pytest.raises(RuleError, match="Monotone: <X,Y>_S = 0"):
        engine.apply_monotone(E1 + E2, E1 + E2 + E3)


def test_scale_down():
    engine = _engine()
    X = E1 + E2
    node = engine.apply_scale_down(X, 2)
    d = engine.derivation
    assert d.vector(node.role("scaled")) == E1 + E2.scale(2)
    assert node.scalar("tangent") == 1
    assert node.conclusion == Conclusion.bound(node.role("scaled"), node.role("X"))
    assert len(node.premises) == 2

    node = engine.apply_scale_down(X, 3)
    assert node.scalar("tangent") == ExactScalar.sqrt_int(2)


def test_scale_down_rejects_shrinking():
    engine = _engine()
    with pytest.raises(RuleError, match="lambda - 1 > 0"):
        engine.apply_scale_down(E1 + E2, Fraction(1, 2))
    with pytest.raises(RuleError, match="X != g"):
        engine.apply_scale_down(E1, 2)


def test_case_split_and_branches():
    engine = _engine()
    split = engine.apply_case_split(E2.scale(2))
    d = engine.derivation
    assert d.vector(split.role("Xa")) == E1 - E2.scale(Fraction(1, 2))
    assert split.scalar("alpha") == Fraction(1, 4)

    with engine.branch(split, 1) as first:
        engine.close_branch(first, Conclusion.of_fact(split.role("Xa"), 0))
    with engine.branch(split, 2) as second:
        with pytest.raises(RuleError, match="do not force"):
            engine.close_branch(second, Conclusion.of_fact(split.role("Xa"), 0))
        with pytest.raises(RuleError, match="contradiction"):
            engine.close_branch(second, Conclusion.contradiction())
        engine.close_branch(second, Conclusion.of_fact(split.role("X"), 0))
    assert engine.builder.scope == "root"
    assert verify_derivation(d).passed


def test_case_split_conditions():
    engine = _engine()
    with pytest.raises(RuleError, match="<y,g> = 0"):
        engine.apply_case_split(E1 + E2)
    with pytest.raises(RuleError, match="<y,y> != 0"):
        engine.apply_case_split(Vector3.zero())
    split = engine.apply_case_split(E2)
    with pytest.raises(RuleError):
        with engine.branch(split, 3):
            pass


def test_branch_closes_by_contradiction():
    engine = _engine()
    other = engine.assume(E2)
    engine.apply_triple_sum(E1, E2, E3)
    split = engine.apply_case_split(E3, [other.node_id])
    with engine.branch(split, 1) as scope:
        engine.close_branch(scope, Conclusion.contradiction())
    assert scope.outcome.kind == ConclusionKind.CONTRADICTION
    assert split.premises == [engine.assumption.node_id, other.node_id]


# Verification

def _small_derivation() -> Derivation:
    engine = _engine("small")
    engine.apply_sum_rule(E1 + E2, E1 - E2)
    engine.apply_monotone(E1 + E2, E1 + E3)
    return engine.derivation


def test_verifier_accepts_engine_output():
    d = _small_derivation()
    report = verify_derivation(d)
    assert report.passed and d.verified
    assert report.first_failure is None
    assert report.lines()[0].startswith("derivation small: PASS")
    assert report.to_dict()["passed"] is True


def test_verifier_rejects_a_perturbed_scalar():
    d = _small_derivation()
    monotone = next(n for n in d.nodes if n.kind == RuleKind.MONOTONE)
    monotone.scalars["t"] = monotone.scalars["t"] + 1
    report = verify_derivation(d)
    assert not report.passed and not d.verified
    assert report.first_failure.node_id == monotone.node_id


def test_verifier_rejects_a_perturbed_vector():
    d = _small_derivation()
    sum_rule = next(n for n in d.nodes if n.kind == RuleKind.SUM_RULE)
    d.vectors[sum_rule.role("u")] = Vector3.of(1, 2, 3)
    report = verify_derivation(d)
    assert not report.passed
    assert report.first_failure.node_id == sum_rule.node_id
    assert any("FAIL" in line for line in report.lines())


def test_empty_derivation_passes_vacuously():
    report = verify_derivation(Derivation(name="empty"))
    assert report.passed
    assert report.nodes == [] and report.branches == []


def test_structure_errors():
    d = _small_derivation()
    d.nodes[-1].premises.append("small:n99")
    with pytest.raises(DerivationStructureError, match="dangling premise"):
        check_structure(d)

    d = _small_derivation()
    d.nodes[0].premises.append(d.nodes[1].node_id)
    d.nodes[1].premises.append(d.nodes[0].node_id)
    with pytest.raises(DerivationStructureError):
        check_structure(d)


def test_unclosed_branch_fails_verification():
    engine = _engine("open")
    split = engine.apply_case_split(E2)
    with engine.branch(split, 1) as first:
        engine.close_branch(first, Conclusion.of_fact(split.role("Xa"), 0))
    with engine.branch(split, 2):
        pass
    report = verify_derivation(engine.derivation)
    assert not report.passed
    assert any(not b.passed for b in report.branches)


def test_contradiction_spec_resolves():
    assert CONTRADICTION.resolve({}) == Conclusion.contradiction()
    builder = DerivationBuilder("ids", symbol_base=101)
    assert builder.intern(E1) == "ids:v0"
    assert builder.intern(E1) == "ids:v0"
    assert builder.allocate_symbol_index() == 101


# Soundness against the compiled instance

def _holds(conclusion: Conclusion, value) -> bool:
    if conclusion.kind == ConclusionKind.FACT:
        return value(conclusion.fact.vector_id) == conclusion.fact.value
    if conclusion.kind == ConclusionKind.RELATION:
        return (sum(value(v) for v in conclusion.lhs) - sum(value(v) for v in conclusion.rhs)
                == conclusion.constant)
    return value(conclusion.lower) <= value(conclusion.upper)


def _checked_under_every_coloring(engine: RuleEngine) -> int:
    """Every root conclusion whose vectors are instance points holds in every coloring with v(g) = 1"""
    d = engine.derivation
    assert verify_derivation(d).passed
    context = compile_instance([d], FRAME)
    colorings = list(iter_colorings(context.to_problem(ColoringMode.EXHAUSTIVE), {context.index_of(FRAME.g): 1}))
    assert colorings

    checked = 0
    for node in d.nodes:
        conclusion = node.conclusion
        if node.scope != "root" or conclusion.kind == ConclusionKind.CONTRADICTION:
            continue
        points = {vid: context.index_of(d.vector(vid)) for vid in conclusion.vector_ids}
        if None in points.values():
            continue
        for coloring in colorings:
            assert _holds(conclusion, lambda vid: coloring[points[vid]]), f"{node.node_id}: {conclusion.describe()}"
        checked += 1
    return checked


def test_sum_rule_and_orth_force_hold_in_every_coloring():
    engine = _engine("sum")
    engine.apply_sum_rule(E1 + E2, E1 - E2)
    engine.apply_orth_force(E1, E2 + E3, engine._assumed())
    assert _checked_under_every_coloring(engine) == 3


def test_monotone_holds_in_every_coloring():
    engine = _engine("mono")
    engine.apply_monotone(E1 + E2, E1 + E3)
    assert _checked_under_every_coloring(engine) == 2


def test_scale_down_holds_in_every_coloring():
    engine = _engine("down")
    engine.apply_scale_down(E1 + E2, 2)
    assert _checked_under_every_coloring(engine) == 4


def test_case_split_holds_in_every_coloring():
    engine = _engine("split")
    split = engine.apply_case_split(E2.scale(2))
    with engine.branch(split, 1) as first:
        engine.close_branch(first, Conclusion.of_fact(split.role("Xa"), 0))
    with engine.branch(split, 2) as second:
        engine.close_branch(second, Conclusion.of_fact(split.role("X"), 0))
    assert _checked_under_every_coloring(engine) == 2


def test_scale_keeps_the_projective_point():
    rng = random.Random(31)
    engine = _engine("scale")
    roots = [1, ExactScalar.sqrt_int(2), ExactScalar.sqrt_int(3)]
    for _ in range(50):
        x = Vector3.of(*(Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(3)))
        if x.is_zero():
            continue
        k = rng.choice(roots) * Fraction(rng.choice([-1, 1]) * rng.randint(1, 7), rng.randint(1, 5))
        node = engine.apply_scale(x, k)
        d = engine.derivation
        assert d.vector(node.role("x")).projective_key == d.vector(node.role("y")).projective_key
        assert node.scalar("k") == k
    assert verify_derivation(engine.derivation).passed
