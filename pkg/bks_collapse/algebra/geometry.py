"""
📐 BKS COLLAPSE - GEOMETRY OF M AND S(g)
Exact 3-vectors, the ambient and S(g) inner products, the w combinator,
triple completion and projective equality.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import FrozenSet, Sequence, Tuple, Union

from ..errors import GeometryError
from .scalars import ExactScalar, Number

logger = logging.getLogger(__name__)

ScalarLike = Union[ExactScalar, Number]


@dataclass(frozen=True)
class Vector3:
    coords: Tuple[ExactScalar, ExactScalar, ExactScalar]

    @classmethod
    def of(cls, x: ScalarLike, y: ScalarLike, z: ScalarLike) -> "Vector3":
        return cls((ExactScalar.coerce(x), ExactScalar.coerce(y), ExactScalar.coerce(z)))

    @classmethod
    def parse(cls, text: str) -> "Vector3":
        from .scalar_grammar import parse_vector_text

        return cls(parse_vector_text(text))

    @classmethod
    def zero(cls) -> "Vector3":
        return cls.of(0, 0, 0)

    @classmethod
    def axis(cls, k: int) -> "Vector3":
        """e_k for k in 1..3"""
        if k not in (1, 2, 3):
            raise GeometryError(f"no axis {k} in a 3-dimensional frame")
        return cls.of(*(1 if i == k else 0 for i in (1, 2, 3)))

    def __add__(self, other: "Vector3") -> "Vector3":
        return Vector3(tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "Vector3") -> "Vector3":
        return Vector3(tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "Vector3":
        return Vector3(tuple(-a for a in self.coords))

    def scale(self, k: ScalarLike) -> "Vector3":
        k = ExactScalar.coerce(k)
        return Vector3(tuple(k * a for a in self.coords))

    def __rmul__(self, k: ScalarLike) -> "Vector3":
        return self.scale(k)

    def __truediv__(self, k: ScalarLike) -> "Vector3":
        k = ExactScalar.coerce(k)
        return Vector3(tuple(a / k for a in self.coords))

    def is_zero(self) -> bool:
        return all(a.is_zero() for a in self.coords)

    @cached_property
    def symbols(self) -> FrozenSet[str]:
        return frozenset().union(*(a.symbols for a in self.coords))

    @property
    def chain_symbols(self) -> FrozenSet[str]:
        return frozenset().union(*(a.chain_symbols for a in self.coords))

    @cached_property
    def canonical(self) -> Tuple[str, str, str]:
        return tuple(a.canonical for a in self.coords)

    @cached_property
    def projective_key(self) -> Tuple[str, str, str]:
        """Canonical strings of the multiple whose first nonzero coordinate is 1"""
        for lead in self.coords:
            if not lead.is_zero():
                return tuple((a / lead).canonical for a in self.coords)
        raise GeometryError("the zero vector has no projective class")

    def __str__(self) -> str:
        return "(" + ", ".join(self.canonical) + ")"


def inner(u: Vector3, v: Vector3) -> ExactScalar:
    a, b = u.coords, v.coords
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def norm2(u: Vector3) -> ExactScalar:
    return inner(u, u)


def cross(u: Vector3, v: Vector3) -> Vector3:
    a, b = u.coords, v.coords
    return Vector3((a[1] * b[2] - a[2] * b[1],
                    a[2] * b[0] - a[0] * b[2],
                    a[0] * b[1] - a[1] * b[0]))


def det3(a: Vector3, b: Vector3, c: Vector3) -> ExactScalar:
    return inner(a, cross(b, c))


@dataclass(frozen=True)
class Frame:
    """Orthonormal frame {g, h1, h2} of M"""

    g: Vector3
    h1: Vector3
    h2: Vector3

    def __post_init__(self):
        vectors = (self.g, self.h1, self.h2)
        for i, u in enumerate(vectors):
            if norm2(u) != 1:
                raise GeometryError(f"frame vector {u} is not a unit vector")
            for v in vectors[i + 1:]:
                if not inner(u, v).is_zero():
                    raise GeometryError(f"frame vectors {u} and {v} are not orthogonal")

    @classmethod
    def standard(cls, axis: int = 1) -> "Frame":
        """Cyclic frame with g = e_axis"""
        order = [axis, axis % 3 + 1, (axis + 1) % 3 + 1]
        return cls(*(Vector3.axis(k) for k in order))

    @property
    def vectors(self) -> Tuple[Vector3, Vector3, Vector3]:
        return (self.g, self.h1, self.h2)


class Form(str, Enum):
    AMBIENT = "ambient"
    S_FORM = "s_form"


@dataclass(frozen=True)
class SVector:
    """Element of S(g) = {h : <g, h> = 1}, with g as origin"""

    base: Vector3
    frame: Frame

    def __post_init__(self):
        if inner(self.base, self.frame.g) != 1:
            raise GeometryError(f"{self.base} is not in S(g) for g = {self.frame.g}")

    @classmethod
    def from_offset(cls, offset: Vector3, frame: Frame) -> "SVector":
        if not inner(offset, frame.g).is_zero():
            raise GeometryError(f"offset {offset} is not orthogonal to g")
        return cls(frame.g + offset, frame)

    @property
    def g(self) -> Vector3:
        return self.frame.g

    @cached_property
    def offset(self) -> Vector3:
        return self.base - self.frame.g

    def is_origin(self) -> bool:
        return self.offset.is_zero()

    def s_add(self, other: "SVector") -> "SVector":
        return SVector(self.base + other.offset, self.frame)

    def s_sub(self, other: "SVector") -> "SVector":
        return SVector(self.base - other.offset, self.frame)

    def s_scale(self, k: ScalarLike) -> "SVector":
        return SVector(self.frame.g + self.offset.scale(k), self.frame)

    def s_norm2(self) -> ExactScalar:
        return s_inner(self, self)


def parseval(g: Vector3, x: Vector3, y: Vector3) -> ExactScalar:
    """Parseval form of S(g) on raw vectors: <x,y> - <x,g><y,g>"""
    return inner(x, y) - inner(x, g) * inner(y, g)


def s_inner(x: SVector, y: SVector) -> ExactScalar:
    return parseval(x.frame.g, x.base, y.base)


def _combine(u: Vector3, v: Vector3, nx: ExactScalar, ny: ExactScalar) -> Vector3:
    return (u.scale(1 + ny) + v.scale(1 + nx)) / (2 + nx + ny)


def w_at(g: Vector3, x: Vector3, y: Vector3) -> Vector3:
    """S-form combination of raw vectors of S(g)"""
    return _combine(x, y, parseval(g, x, x), parseval(g, y, y))


def w_combine(x: Union[Vector3, SVector], y: Union[Vector3, SVector],
              form: Form = Form.AMBIENT) -> Vector3:
    """(2 + |x|^2 + |y|^2)^-1 [(1 + |y|^2) x + (1 + |x|^2) y]"""
    if form == Form.S_FORM:
        if not (isinstance(x, SVector) and isinstance(y, SVector)):
            raise GeometryError("the S-form combination needs vectors of S(g)")
        return w_at(x.frame.g, x.base, y.base)
    u = x.base if isinstance(x, SVector) else x
    v = y.base if isinstance(y, SVector) else y
    return _combine(u, v, norm2(u), norm2(v))


def w_s(x: SVector, y: SVector) -> Vector3:
    return w_combine(x, y, Form.S_FORM)


def complete_triple(u: Vector3, v: Vector3) -> Vector3:
    """Unnormalised third member of an orthogonal triple containing u and v"""
    if u.is_zero() or v.is_zero():
        raise GeometryError("complete_triple needs nonzero vectors")
    if not inner(u, v).is_zero():
        raise GeometryError(f"{u} and {v} are not orthogonal")
    return cross(u, v)


def projectively_equal(u: Vector3, v: Vector3) -> bool:
    if u.is_zero() or v.is_zero():
        raise GeometryError("projective equality is undefined for the zero vector")
    return cross(u, v).is_zero()


def quarter_turn(g: Vector3, v: Vector3, orientation: int = 1) -> Vector3:
    """Rotation of an offset v (v orthogonal to the unit vector g) by a right angle"""
    turned = cross(g, v)
    return turned if orientation >= 0 else -turned


def pairwise_orthogonal(vectors: Sequence[Vector3]) -> bool:
    return all(inner(vectors[i], vectors[j]).is_zero()
               for i in range(len(vectors)) for j in range(i + 1, len(vectors)))

