"""
🌀 BKS COLLAPSE - COLLAPSE PIPELINES
The two top-level constructions: every point of S(g) other than g gets value 0 once
v(g) = 1, and a seed axis with v(x) = 1 contradicts any target outside its span.
"""

import logging
from typing import Optional

from ..algebra.geometry import Frame, SVector, Vector3, cross, inner, norm2
from ..config import PrecisionConfig
from ..errors import NotInTowerError, TargetError
from .cosine_chain import transport_zero
from .derivation import CONTRADICTION, Conclusion, Derivation, DerivationBuilder, DerivationNode, RuleKind, fact_of
from .rule_engine import RuleEngine

logger = logging.getLogger(__name__)

SYMBOL_BLOCK = 100


def lemma3_pipeline(engine: RuleEngine, y: Vector3) -> DerivationNode:
    """Node concluding v(y) = 0 for any y outside the span of g, given v(g) = 1"""
    g, frame = engine.g, engine.frame
    premises = engine._assumed()
    if y.is_zero():
        raise TargetError("the zero vector has no projector")
    if inner(y, g).is_zero():
        return engine.apply_orth_force(g, y, premises)

    k = 1 / inner(y, g)
    scale = engine.apply_scale(y, k)
    y1 = y.scale(k)
    ytilde = y1 - g
    if ytilde.is_zero():
        raise TargetError(f"{y} lies in the span of g")
    q = norm2(ytilde)
    try:
        z = cross(g, ytilde) / q.sqrt()
        mu = (1 + q).sqrt()
    except NotInTowerError as e:
        raise TargetError(f"{y} needs a square root outside the tower: {e}") from e

    a_plus = SVector(y1 + z.scale(mu), frame)
    a_minus = SVector(y1 - z.scale(mu), frame)
    combined = engine.apply_sum_rule(a_plus, a_minus)

    split = engine.apply_case_split(z)
    y1_id = engine.builder.intern(y1)
    for index in (1, 2):
        with engine.branch(split, index) as scope:
            zero = SVector(g - z if index == 1 else g + z, frame)
            for target in (a_plus, a_minus):
                transport_zero(engine, zero, target)
            engine.close_branch(scope, Conclusion.of_fact(y1_id, 0))

    node = engine.add(RuleKind.LEMMA3_CONCLUSION, {"g": g, "y": y, "y1": y1}, fact_of("y", 0),
                      [split.node_id, combined.node_id, scale.node_id])
    logger.info(f"🧲 v({y}) = 0 derived from v({g}) = 1")
    return node


def seed_frame(frame: Frame, seed_axis: int) -> Frame:
    """The frame reordered cyclically so that its seed_axis-th vector comes first"""
    if seed_axis not in (1, 2, 3):
        raise TargetError(f"seed axis must be 1, 2 or 3, got {seed_axis}")
    vectors = frame.vectors
    return Frame(*(vectors[(seed_axis - 1 + i) % 3] for i in range(3)))


def theorem_pipeline(frame: Frame, seed_axis: int, target: Optional[Vector3] = None,
                     cfg: Optional[PrecisionConfig] = None) -> Derivation:
    """Derivation from v(e_seed) = 1 to a contradiction through a target h outside the seed's span"""
    local = seed_frame(frame, seed_axis)
    x = local.g
    builder = DerivationBuilder(f"seed{seed_axis}", symbol_base=SYMBOL_BLOCK * seed_axis + 1)
    engine = RuleEngine(builder, local, cfg)
    logger.info(f"🚀 Seed {seed_axis}: assuming v({x}) = 1")
    engine.assume()

    h = target if target is not None else x + local.h1
    if h.is_zero() or cross(h, x).is_zero():
        raise TargetError(f"target {h} lies in the span of the seed {x}")
    if inner(h, x).is_zero():
        h = h + x
    h1 = h / inner(h, x)
    ytilde = h1 - x
    alpha = 1 / norm2(ytilde)

    first = lemma3_pipeline(engine, h1)
    second = lemma3_pipeline(engine, x - ytilde.scale(alpha))
    split = engine.apply_case_split(ytilde, [first.node_id, second.node_id])
    for index in (1, 2):
        with engine.branch(split, index) as scope:
            engine.close_branch(scope, Conclusion.contradiction())
    engine.add(RuleKind.THEOREM_CONTRADICTION, {}, CONTRADICTION, [split.node_id])

    d = builder.derivation
    logger.info(f"💥 Seed {seed_axis}: contradiction with {len(d.nodes)} nodes, {len(d.vectors)} vectors")
    return d
