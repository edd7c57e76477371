#!/usr/bin/env python3
"""
📐 Geometry tests for BKS Collapse
Ambient and S(g) inner products, the w combinator and the orthogonality identities
behind the collapse rules, checked exactly on random rational instances.
"""

import random
from fractions import Fraction

import pytest

from bks_collapse.algebra.geometry import (
    Form,
    Frame,
    SVector,
    Vector3,
    complete_triple,
    cross,
    det3,
    inner,
    norm2,
    pairwise_orthogonal,
    parseval,
    projectively_equal,
    quarter_turn,
    s_inner,
    w_combine,
    w_s,
)
from bks_collapse.algebra.scalars import ExactScalar
from bks_collapse.errors import GeometryError

FRAME = Frame.standard(1)
G = FRAME.g
SQRT2 = ExactScalar.sqrt_int(2)
INSTANCES = 1000


def _rational(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(-9, 9), rng.randint(1, 5))


def _offset(rng: random.Random, nonzero: bool = True) -> Vector3:
    while True:
        v = Vector3.of(0, _rational(rng), _rational(rng))
        if not nonzero or not v.is_zero():
            return v


def test_worked_pair_products():
    X = SVector(Vector3.of(1, -1, 0), FRAME)
    Y = SVector(Vector3.of(1, 1, SQRT2), FRAME)
    assert inner(X.base, Y.base) == 0
    assert s_inner(X, X) == 1
    assert s_inner(Y, Y) == 3
    assert s_inner(X, Y) == -1


def test_parseval_splits_the_ambient_product():
    rng = random.Random(1)
    for _ in range(INSTANCES):
        x = Vector3.of(_rational(rng), _rational(rng), _rational(rng))
        y = Vector3.of(_rational(rng), _rational(rng), _rational(rng))
        assert parseval(G, x, y) + inner(x, G) * inner(y, G) == inner(x, y)


def test_s_orthogonality_of_minus_one_is_ambient_orthogonality():
    rng = random.Random(2)
    for _ in range(INSTANCES):
        X = SVector.from_offset(_offset(rng, nonzero=False), FRAME)
        Y = SVector.from_offset(_offset(rng, nonzero=False), FRAME)
        assert (s_inner(X, Y) == -1) == inner(X.base, Y.base).is_zero()


def test_w_of_a_symmetric_pair_is_the_origin():
    rng = random.Random(3)
    for _ in range(INSTANCES):
        z = _offset(rng)
        plus, minus = SVector(G + z, FRAME), SVector(G - z, FRAME)
        assert w_s(plus, minus) == G


def test_monotone_identity():
    """For X, Y orthogonal in S(g): W = tX + Y pairs with X + Y and w_S(W, X + Y) = Y"""
    rng = random.Random(4)
    for _ in range(INSTANCES):
        a = _offset(rng)
        b = quarter_turn(G, a).scale(_rational(rng))
        X, Y = SVector.from_offset(a, FRAME), SVector.from_offset(b, FRAME)
        assert s_inner(X, Y) == 0
        t = -(1 + Y.s_norm2()) / X.s_norm2()
        W = SVector.from_offset(a.scale(t) + b, FRAME)
        total = X.s_add(Y)
        assert s_inner(W, total) == -1
        assert inner(W.base, total.base) == 0
        assert w_s(W, total) == Y.base


def test_scale_down_pairs_are_orthogonal():
    """(lambda - 1) X - J(X) tangent is S-orthogonal to X + J(X) tangent when tangent^2 = lambda - 1"""
    rng = random.Random(5)
    for _ in range(INSTANCES):
        a = _offset(rng)
        k = _rational(rng)
        lam = 1 + k * k
        aux = quarter_turn(G, a).scale(k)
        together = SVector.from_offset(a + aux, FRAME)
        rest = SVector.from_offset(a.scale(lam - 1) - aux, FRAME)
        assert s_inner(together, rest) == 0


def test_ambient_w_matches_its_formula():
    rng = random.Random(6)
    for _ in range(200):
        x = Vector3.of(_rational(rng), _rational(rng), _rational(rng))
        y = Vector3.of(_rational(rng), _rational(rng), _rational(rng))
        nx, ny = norm2(x), norm2(y)
        expected = (x.scale(1 + ny) + y.scale(1 + nx)) / (2 + nx + ny)
        assert w_combine(x, y) == expected
        assert w_combine(x, y, Form.AMBIENT) == expected


def test_cross_products_complete_triples():
    rng = random.Random(7)
    for _ in range(200):
        u = Vector3.of(_rational(rng), _rational(rng), _rational(rng))
        if u.is_zero():
            continue
        v = cross(u, Vector3.of(_rational(rng), _rational(rng), _rational(rng)))
        if v.is_zero():
            continue
        w = complete_triple(u, v)
        assert pairwise_orthogonal([u, v, w])
        assert det3(u, v, w) == norm2(w)


def test_projective_equality():
    v = Vector3.of(1, SQRT2, 3)
    assert projectively_equal(v, v.scale(-SQRT2))
    assert v.projective_key == v.scale(Fraction(-2, 3)).projective_key
    assert not projectively_equal(v, Vector3.of(1, 1, 3))
    with pytest.raises(GeometryError):
        projectively_equal(v, Vector3.zero())
    with pytest.raises(GeometryError):
        Vector3.zero().projective_key


def test_frames():
    for axis in (1, 2, 3):
        frame = Frame.standard(axis)
        assert frame.g == Vector3.axis(axis)
        assert pairwise_orthogonal(frame.vectors)
    with pytest.raises(GeometryError):
        Frame(Vector3.of(1, 0, 0), Vector3.of(1, 1, 0), Vector3.of(0, 0, 1))
    with pytest.raises(GeometryError):
        Frame(Vector3.of(2, 0, 0), Vector3.of(0, 1, 0), Vector3.of(0, 0, 1))
    with pytest.raises(GeometryError):
        Vector3.axis(4)


def test_s_vectors_must_sit_on_the_plane():
    with pytest.raises(GeometryError):
        SVector(Vector3.of(2, 1, 0), FRAME)
    with pytest.raises(GeometryError):
        SVector.from_offset(Vector3.of(1, 0, 0), FRAME)
    with pytest.raises(GeometryError):
        w_combine(G, G, Form.S_FORM)
    with pytest.raises(GeometryError):
        complete_triple(G, G)


def test_s_plane_arithmetic_uses_g_as_origin():
    X = SVector(Vector3.of(1, -1, 0), FRAME)
    Y = SVector(Vector3.of(1, 1, SQRT2), FRAME)
    assert X.s_add(Y).base == Vector3.of(1, 0, SQRT2)
    assert X.s_add(Y).s_sub(Y) == X
    assert X.s_sub(X).is_origin()
    assert X.s_scale(3).offset == X.offset.scale(3)
    assert X.s_scale(0).base == G


def test_vectors_parse_from_text():
    v = Vector3.parse("(1, 1, sqrt(2))")
    assert v == Vector3.of(1, 1, SQRT2)
    assert str(v) == "(1, 1, sqrt(2))"
    assert Vector3.parse("1, -1, 0") == Vector3.of(1, -1, 0)
