#!/usr/bin/env python3
"""
🔗 Cosine chain tests for BKS Collapse
Chain parameters on the worked pair, random rational pairs, collinear endpoints
and the verified chain-link node.
"""

import random

import pytest
from mpmath import mp

from bks_collapse.algebra.geometry import Frame, SVector, Vector3, s_inner
from bks_collapse.algebra.scalars import ExactScalar
from bks_collapse.config import PrecisionConfig
from bks_collapse.errors import ChainError
from bks_collapse.services.cosine_chain import (
    ChainParams,
    MonotoneAdvice,
    ScaleDownAdvice,
    build_chain,
    chain_params,
    conclude_lemma2,
    transport_zero,
)
from bks_collapse.services.derivation import ConclusionKind, DerivationBuilder, RuleKind
from bks_collapse.services.derivation_verifier import verify_derivation
from bks_collapse.services.rule_engine import RuleEngine
from bks_collapse.services.worked_example import example_points, run_worked_example

FRAME = Frame.standard(1)
CFG = PrecisionConfig()


def _near(value, expected: str, tolerance: float = 1e-8) -> bool:
    return abs(value.midpoint - mp.mpf(expected)) < tolerance


def test_worked_pair_parameters():
    X, Y = example_points()
    p = chain_params(X, Y, CFG)
    assert isinstance(p, ChainParams)
    assert (p.beta_x, p.beta_y, p.beta_xy) == (1, 3, -1)
    assert p.cos_theta == -1 / ExactScalar.sqrt_int(3)
    assert _near(p.theta_degrees, "125.264389683")
    assert p.n == 5
    assert p.length == 7
    assert _near(p.alpha_interval, "1.056826172")
    assert [n for n, _ in p.rejected] == [1, 2, 3, 4]
    assert _near(p.rejected[-1][1], "0.922631661")


def test_worked_example_rows():
    example = run_worked_example(CFG)
    assert _near(example.row("[cos(theta/4)]^4"), "0.532681638")
    assert _near(example.row("[cos(theta/5)]^5"), "0.610158875")
    assert _near(example.row("alpha(5)"), "1.056826172")
    lines = example.lines()
    assert "  minimal n = 5" in lines
    assert "  chain length = 7" in lines
    assert example.chain is None


def test_worked_example_extends_past_the_minimum():
    example = run_worked_example(CFG, max_n=7)
    assert _near(example.row("alpha(4)"), "0.922631661")
    assert example.row("alpha(7)").is_positive()


def test_worked_chain_closes_on_its_target():
    X, Y = example_points()
    p = chain_params(X, Y, CFG)
    chain = build_chain(p, X, Y, cfg=CFG)
    assert chain.verified
    assert len(chain.vectors) == 7
    assert chain.vectors[0] == Y and chain.vectors[-1] == X
    assert all(value.within(CFG.zero_tolerance) for value in chain.endpoint_residual())
    assert len(chain.step_nodes) == 5
    assert all(node.kind == RuleKind.MONOTONE for node in chain.step_nodes)


def test_transport_zero_yields_a_verified_chain_link():
    engine = RuleEngine(DerivationBuilder("link"), FRAME, CFG)
    engine.assume()
    X, Y = example_points()
    node = transport_zero(engine, X, Y)
    assert node.kind == RuleKind.CHAIN_LINK
    assert node.conclusion.lower == node.role("Y")
    assert node.conclusion.upper == node.role("X")
    assert verify_derivation(engine.derivation, CFG).passed


def test_conclude_needs_a_verified_chain():
    X, Y = example_points()
    chain = build_chain(chain_params(X, Y, CFG), X, Y, cfg=CFG)
    chain.verified = False
    with pytest.raises(ChainError, match="verified chain"):
        conclude_lemma2(chain)


def test_collinear_endpoints_advise_scale_down():
    X = SVector(FRAME.g + FRAME.h1, FRAME)
    Y = SVector(FRAME.g + FRAME.h1.scale(3), FRAME)
    advice = chain_params(X, Y, CFG)
    assert isinstance(advice, ScaleDownAdvice)
    assert advice.lam == 3
    assert advice.message == "use ScaleDown"

    engine = RuleEngine(DerivationBuilder("ray"), FRAME, CFG)
    engine.assume()
    node = transport_zero(engine, X, Y)
    assert node.kind == RuleKind.SCALE_DOWN


def test_endpoint_order_and_origin():
    X, Y = example_points()
    with pytest.raises(ChainError, match="beta_X < beta_Y"):
        chain_params(Y, X, CFG)
    with pytest.raises(ChainError, match="beta_X < beta_Y"):
        chain_params(X, SVector(FRAME.g - FRAME.h1, FRAME), CFG)
    with pytest.raises(ChainError, match="differ from g"):
        chain_params(SVector(FRAME.g, FRAME), Y, CFG)
    with pytest.raises(ChainError, match="different S\\(g\\)"):
        chain_params(X, SVector(Vector3.of(1, 1, 0), Frame.standard(2)), CFG)


def test_alpha_one_at_the_first_step_takes_a_single_monotone_step():
    X = SVector(FRAME.g + FRAME.h1, FRAME)
    Y = SVector(FRAME.g + FRAME.h1 + FRAME.h2, FRAME)
    assert s_inner(X, Y) == X.s_norm2()
    advice = chain_params(X, Y, CFG)
    assert isinstance(advice, MonotoneAdvice)
    assert advice.message == "use Monotone"
    assert advice.step.offset == FRAME.h2

    engine = RuleEngine(DerivationBuilder("step"), FRAME, CFG)
    engine.assume()
    node = transport_zero(engine, X, Y)
    assert node.kind == RuleKind.MONOTONE
    d = engine.derivation
    assert d.vector(node.role("sum")) == Y.base
    assert d.vector(node.role("Y")) == X.base
    assert node.conclusion.kind == ConclusionKind.RELATION
    assert verify_derivation(d, CFG).passed


def test_alpha_above_one_at_the_first_step_keeps_n_at_one():
    X = SVector(FRAME.g + FRAME.h1, FRAME)
    Y = SVector(FRAME.g + FRAME.h1.scale(2) + FRAME.h2, FRAME)
    p = chain_params(X, Y, CFG)
    assert isinstance(p, ChainParams)
    assert p.n == 1
    assert p.rejected == []
    assert build_chain(p, X, Y, cfg=CFG).verified


def _random_pairs(seed: int, count: int):
    rng = random.Random(seed)
    pairs = []
    while len(pairs) < count:
        a = Vector3.of(0, rng.randint(-3, 3), rng.randint(-3, 3))
        b = Vector3.of(0, rng.randint(-9, 9), rng.randint(-9, 9))
        if a.is_zero():
            continue
        X, Y = SVector.from_offset(a, FRAME), SVector.from_offset(b, FRAME)
        beta_x, beta_y = X.s_norm2(), Y.s_norm2()
        # beta_Y >= 4 beta_X keeps n small; a rational ratio can put alpha(n) exactly on 1 for some n >= 2
        if beta_y.to_fraction() < 4 * beta_x.to_fraction():
            continue
        if (beta_y / beta_x).sqrt().is_rational():
            continue
        pairs.append((X, Y))
    return pairs


def _check_pair(X: SVector, Y: SVector) -> None:
    p = chain_params(X, Y, CFG)
    if isinstance(p, MonotoneAdvice):
        assert s_inner(X, Y) == X.s_norm2()
        engine = RuleEngine(DerivationBuilder("step"), FRAME, CFG)
        engine.assume()
        assert transport_zero(engine, X, Y).kind == RuleKind.MONOTONE
        assert verify_derivation(engine.derivation, CFG).passed
        return
    assert isinstance(p, ChainParams)
    assert 1 <= p.n <= 8
    assert p.alpha_interval.lower > 1
    chain = build_chain(p, X, Y, cfg=CFG)
    assert chain.verified
    assert len(chain.vectors) == p.length


def test_random_pairs_quick():
    for X, Y in _random_pairs(11, 5):
        _check_pair(X, Y)


@pytest.mark.slow
def test_random_pairs():
    for X, Y in _random_pairs(12, 100):
        _check_pair(X, Y)
