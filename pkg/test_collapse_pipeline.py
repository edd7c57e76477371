#!/usr/bin/env python3
"""
🌀 Collapse pipeline tests for BKS Collapse
Zero-forcing of single vectors and the per-seed contradiction derivation.
"""

import pytest

from bks_collapse.algebra.geometry import Frame, Vector3
from bks_collapse.algebra.scalars import ExactScalar
from bks_collapse.config import PrecisionConfig
from bks_collapse.errors import TargetError
from bks_collapse.services.collapse_pipeline import lemma3_pipeline, seed_frame, theorem_pipeline
from bks_collapse.services.derivation import ConclusionKind, DerivationBuilder, RuleKind
from bks_collapse.services.derivation_verifier import verify_derivation
from bks_collapse.services.rule_engine import RuleEngine

FRAME = Frame.standard(1)
E1, E2, E3 = FRAME.vectors
CFG = PrecisionConfig()


def _engine(name: str = "lemma") -> RuleEngine:
    engine = RuleEngine(DerivationBuilder(name), FRAME, CFG)
    engine.assume()
    return engine


def test_orthogonal_vector_is_forced_directly():
    engine = _engine()
    node = lemma3_pipeline(engine, E2 + E3.scale(5))
    assert node.kind == RuleKind.ORTH_FORCE
    assert node.conclusion.fact.value == 0
    assert verify_derivation(engine.derivation, CFG).passed


def test_degenerate_targets():
    engine = _engine()
    with pytest.raises(TargetError, match="zero vector"):
        lemma3_pipeline(engine, Vector3.zero())
    with pytest.raises(TargetError, match="span of g"):
        lemma3_pipeline(engine, E1.scale(2))
    with pytest.raises(TargetError, match="outside the tower"):
        lemma3_pipeline(engine, E1 + E2.scale(1 + ExactScalar.sqrt_int(2)))


def test_seed_frames_rotate_cyclically():
    assert seed_frame(FRAME, 1) == FRAME
    assert seed_frame(FRAME, 2).vectors == (E2, E3, E1)
    assert seed_frame(FRAME, 3).vectors == (E3, E1, E2)
    with pytest.raises(TargetError, match="seed axis"):
        seed_frame(FRAME, 0)


def test_targets_in_the_seed_span_are_rejected():
    with pytest.raises(TargetError, match="span of the seed"):
        theorem_pipeline(FRAME, 1, E1.scale(-3), CFG)
    with pytest.raises(TargetError):
        theorem_pipeline(FRAME, 2, Vector3.zero(), CFG)


@pytest.mark.slow
def test_lemma3_on_a_diagonal_vector():
    engine = _engine()
    node = lemma3_pipeline(engine, E1.scale(2) + E2.scale(2))
    d = engine.derivation
    assert node.kind == RuleKind.LEMMA3_CONCLUSION
    assert node.conclusion.fact.value == 0
    kinds = {n.kind for n in d.nodes}
    assert {RuleKind.SCALE, RuleKind.SUM_RULE, RuleKind.CASE_SPLIT, RuleKind.CHAIN_LINK} <= kinds
    assert len(d.scopes) == 2
    assert all(scope.outcome.kind == ConclusionKind.FACT for scope in d.scopes.values())
    assert verify_derivation(d, CFG).passed


@pytest.mark.slow
def test_seed_derivation_reaches_a_contradiction():
    d = theorem_pipeline(FRAME, 1, cfg=CFG)
    assert d.name == "seed1"
    assert d.nodes[-1].kind == RuleKind.THEOREM_CONTRADICTION
    assert d.nodes[-1].conclusion.kind == ConclusionKind.CONTRADICTION
    assert all(vid.startswith("seed1:") for vid in d.vectors)
    assert all(index > 100 for index in d.symbols.indices)
    top = [s for s in d.scopes.values() if s.parent == "root" and s.outcome.kind == ConclusionKind.CONTRADICTION]
    assert len(top) == 2
    report = verify_derivation(d, CFG)
    assert report.passed, report.first_failure
