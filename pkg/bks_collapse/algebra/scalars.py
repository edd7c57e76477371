"""
🧮 BKS COLLAPSE - EXACT SCALAR RING
Fractions over Q(sqrt(p) ...)[c_i, s_i]/(c_i^2 + s_i^2 - 1) with a unique canonical form.

Square roots are generated by primes (r_p with r_p^2 = p) and every chain owns a
formal pair (c_i, s_i). Numerators are reduced modulo the defining relations;
denominators are rationalised until they only involve the c_i, then made monic
and coprime to the numerator. Two scalars are equal iff their canonical strings are.
"""

import logging
import re
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Dict, FrozenSet, Iterable, List, Tuple, Union

from sympy import factorint
from sympy.polys.domains import QQ
from sympy.polys.orderings import lex
from sympy.polys.rings import PolyElement, PolyRing

from ..errors import NotInTowerError, ScalarError, ZeroDivisorError

logger = logging.getLogger(__name__)

Number = Union[int, Fraction]
Monomial = Tuple[Tuple[str, int], ...]
Term = Tuple[Fraction, Monomial]

PAIR_SYMBOL = re.compile(r"^([cs])([0-9]+)$")
_ANCHOR = "r2"


def _generator_order(name: str) -> Tuple[int, int, int]:
    # sqrt generators first, then per pair s before c so that s^2 leads its relation
    if name[0] == "r":
        return (0, int(name[1:]), 0)
    return (1, int(name[1:]), 0 if name[0] == "s" else 1)


def display_name(name: str) -> str:
    return f"sqrt({name[1:]})" if name[0] == "r" else name


@lru_cache(maxsize=None)
def _ring(names: Tuple[str, ...]) -> PolyRing:
    return PolyRing(names, QQ, lex)


@lru_cache(maxsize=None)
def _relations(names: Tuple[str, ...]) -> Tuple[PolyElement, ...]:
    ring = _ring(names)
    relations = []
    for gen, name in zip(ring.gens, names):
        if name[0] == "r":
            relations.append(gen**2 - int(name[1:]))
        elif name[0] == "s":
            partner = ring.gens[names.index("c" + name[1:])]
            relations.append(gen**2 + partner**2 - 1)
    return tuple(relations)


def _close(names: Iterable[str]) -> Tuple[str, ...]:
    closed = set(names)
    for name in list(closed):
        if name[0] == "s":
            closed.add("c" + name[1:])
    if not closed:
        closed.add(_ANCHOR)
    return tuple(sorted(closed, key=_generator_order))


def _lift(poly: PolyElement, src: Tuple[str, ...], dst: Tuple[str, ...]) -> PolyElement:
    if src == dst:
        return poly
    target = _ring(dst)
    slots = [dst.index(name) if name in dst else -1 for name in src]
    terms = {}
    for monom, coeff in poly.items():
        lifted = [0] * len(dst)
        for slot, exponent in zip(slots, monom):
            if exponent:
                if slot < 0:
                    raise ScalarError("cannot drop a generator that is in use")
                lifted[slot] = exponent
        terms[tuple(lifted)] = coeff
    return target.from_dict(terms)


def _to_fraction(coeff) -> Fraction:
    return Fraction(int(coeff.numerator), int(coeff.denominator))


def _strip_generator(den: PolyElement, index: int) -> PolyElement:
    """Conjugate of den with respect to a degree-one generator"""
    ring = den.ring
    linear = ring.from_dict({m: c for m, c in den.items() if m[index]})
    return den - 2 * linear


def _normalize(num: PolyElement, den: PolyElement,
               names: Tuple[str, ...]) -> Tuple[PolyElement, PolyElement, Tuple[str, ...]]:
    ring = _ring(names)
    relations = _relations(names)
    num = num.rem(list(relations)) if relations else num
    den = den.rem(list(relations)) if relations else den
    if not den:
        raise ZeroDivisorError()
    if not num:
        return ring.zero, ring.one, names

    for index, name in enumerate(names):
        if name[0] == "c" or not any(m[index] for m in den):
            continue
        conjugate = _strip_generator(den, index)
        num = (num * conjugate).rem(list(relations))
        den = (den * conjugate).rem(list(relations))

    if den.is_ground:
        lead = den.LC
        if lead != 1:
            num = num.quo_ground(lead)
        return _trim(num, ring.one, names)

    c_slots = [i for i, name in enumerate(names) if name[0] == "c"]
    c_names = tuple(names[i] for i in c_slots)
    c_ring = _ring(c_names)

    def project(monom):
        return tuple(monom[i] for i in c_slots)

    den_c = c_ring.from_dict({project(m): c for m, c in den.items()})
    groups: Dict[Tuple[int, ...], Dict[Tuple[int, ...], object]] = {}
    for monom, coeff in num.items():
        rest = tuple(0 if i in c_slots else e for i, e in enumerate(monom))
        groups.setdefault(rest, {})[project(monom)] = coeff
    parts = {rest: c_ring.from_dict(terms) for rest, terms in groups.items()}

    common = den_c
    for part in parts.values():
        if common.is_ground:
            break
        common = common.gcd(part)
    if not common.is_ground:
        den_c = den_c.exquo(common)
        parts = {rest: part.exquo(common) for rest, part in parts.items()}
    lead = den_c.LC
    den_c = den_c.quo_ground(lead)
    parts = {rest: part.quo_ground(lead) for rest, part in parts.items()}

    def embed(rest, c_monom):
        merged = list(rest)
        for slot, exponent in zip(c_slots, c_monom):
            merged[slot] = exponent
        return tuple(merged)

    num = ring.from_dict({embed(rest, cm): c for rest, part in parts.items() for cm, c in part.items()})
    den = ring.from_dict({embed((0,) * len(names), cm): c for cm, c in den_c.items()})
    return _trim(num, den, names)


def _trim(num: PolyElement, den: PolyElement,
          names: Tuple[str, ...]) -> Tuple[PolyElement, PolyElement, Tuple[str, ...]]:
    used = {names[i] for poly in (num, den) for m in poly for i, e in enumerate(m) if e}
    trimmed = _close(used)
    if trimmed == names:
        return num, den, names
    return _lift(num, names, trimmed), _lift(den, names, trimmed), trimmed


class ExactScalar:
    """Immutable element of the scalar ring in canonical form"""

    def __init__(self, num: PolyElement, den: PolyElement, names: Tuple[str, ...]):
        # callers pass canonical data; use the classmethods otherwise
        self._num = num
        self._den = den
        self._names = names

    # construction

    @classmethod
    def _build(cls, num: PolyElement, den: PolyElement, names: Tuple[str, ...]) -> "ExactScalar":
        return cls(*_normalize(num, den, names))

    @classmethod
    def from_fraction(cls, value: Number) -> "ExactScalar":
        value = Fraction(value)
        names = _close(())
        ring = _ring(names)
        return cls(ring.ground_new(QQ(value.numerator, value.denominator)), ring.one, names)

    @classmethod
    def zero(cls) -> "ExactScalar":
        return cls.from_fraction(0)

    @classmethod
    def one(cls) -> "ExactScalar":
        return cls.from_fraction(1)

    @classmethod
    def symbol(cls, name: str) -> "ExactScalar":
        """A chain symbol such as 'c101' or 's101'"""
        if not PAIR_SYMBOL.match(name):
            raise ScalarError(f"not a chain symbol: {name!r}")
        names = _close((name,))
        ring = _ring(names)
        return cls(ring.gens[names.index(name)], ring.one, names)

    @classmethod
    def pair(cls, index: int) -> Tuple["ExactScalar", "ExactScalar"]:
        return cls.symbol(f"c{index}"), cls.symbol(f"s{index}")

    @classmethod
    def sqrt_int(cls, value: int) -> "ExactScalar":
        if value < 0:
            raise NotInTowerError(f"sqrt({value}) is not real")
        if value == 0:
            return cls.zero()
        outside, primes = 1, []
        for prime, exponent in factorint(value).items():
            outside *= prime ** (exponent // 2)
            if exponent % 2:
                primes.append(prime)
        result = cls.from_fraction(outside)
        for prime in primes:
            names = _close((f"r{prime}",))
            ring = _ring(names)
            result = result * cls(ring.gens[names.index(f"r{prime}")], ring.one, names)
        return result

    @classmethod
    def parse(cls, text: str) -> "ExactScalar":
        from .scalar_grammar import parse_scalar

        return parse_scalar(text)

    @staticmethod
    def coerce(value: Union["ExactScalar", Number]) -> "ExactScalar":
        if isinstance(value, ExactScalar):
            return value
        if isinstance(value, (int, Fraction)):
            return ExactScalar.from_fraction(value)
        raise TypeError(f"cannot use {type(value).__name__} as an exact scalar")

    # arithmetic

    def _unify(self, other: "ExactScalar"):
        if self._names == other._names:
            return self._num, self._den, other._num, other._den, self._names
        names = _close(self._names + other._names)
        return (_lift(self._num, self._names, names), _lift(self._den, self._names, names),
                _lift(other._num, other._names, names), _lift(other._den, other._names, names), names)

    def __add__(self, other):
        try:
            other = ExactScalar.coerce(other)
        except TypeError:
            return NotImplemented
        a, b, c, d, names = self._unify(other)
        if b == d:
            return ExactScalar._build(a + c, b, names)
        return ExactScalar._build(a * d + c * b, b * d, names)

    __radd__ = __add__

    def __neg__(self) -> "ExactScalar":
        return ExactScalar(-self._num, self._den, self._names)

    def __sub__(self, other):
        try:
            other = ExactScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return ExactScalar.coerce(other) - self

    def __mul__(self, other):
        try:
            other = ExactScalar.coerce(other)
        except TypeError:
            return NotImplemented
        a, b, c, d, names = self._unify(other)
        return ExactScalar._build(a * c, b * d, names)

    __rmul__ = __mul__

    def __truediv__(self, other):
        try:
            other = ExactScalar.coerce(other)
        except TypeError:
            return NotImplemented
        if other.is_zero():
            raise ZeroDivisorError()
        a, b, c, d, names = self._unify(other)
        return ExactScalar._build(a * d, b * c, names)

    def __rtruediv__(self, other):
        return ExactScalar.coerce(other) / self

    def __pow__(self, exponent: int) -> "ExactScalar":
        if not isinstance(exponent, int):
            return NotImplemented
        if exponent < 0:
            return ExactScalar.one() / (self ** -exponent)
        result, base = ExactScalar.one(), self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def sqrt(self) -> "ExactScalar":
        """Square root of a non-negative rational, inside the square-root tower"""
        if not self.is_rational():
            raise NotInTowerError(f"sqrt({self}) leaves the rational square-root tower")
        value = self.to_fraction()
        if value < 0:
            raise NotInTowerError(f"sqrt({value}) is not real")
        return ExactScalar.sqrt_int(value.numerator * value.denominator) / value.denominator

    # predicates

    def is_zero(self) -> bool:
        return not self._num

    def is_rational(self) -> bool:
        return self._num.is_ground and self._den.is_ground

    def to_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ScalarError(f"{self} is not rational")
        return _to_fraction(self._num.LC) if self._num else Fraction(0)

    @cached_property
    def symbols(self) -> FrozenSet[str]:
        """Binding names this scalar depends on ('sqrt(2)', 'c101', ...)"""
        return frozenset(display_name(name) for _, monom in self.numerator_terms + self.denominator_terms
                         for name, _ in monom)

    @property
    def chain_symbols(self) -> FrozenSet[str]:
        return frozenset(s for s in self.symbols if PAIR_SYMBOL.match(s))

    @property
    def sqrt_primes(self) -> FrozenSet[int]:
        return frozenset(int(s[5:-1]) for s in self.symbols if s.startswith("sqrt("))

    # terms and canonical text

    def _terms(self, poly: PolyElement) -> List[Term]:
        ordered = sorted(poly.items(), key=lambda item: item[0], reverse=True)
        return [(_to_fraction(coeff), tuple((self._names[i], e) for i, e in enumerate(monom) if e))
                for monom, coeff in ordered]

    @cached_property
    def numerator_terms(self) -> List[Term]:
        return self._terms(self._num)

    @cached_property
    def denominator_terms(self) -> List[Term]:
        return self._terms(self._den)

    @cached_property
    def canonical(self) -> str:
        numerator = _format_sum(self.numerator_terms)
        if self._den == 1:
            return numerator
        if len(self.numerator_terms) > 1:
            numerator = f"({numerator})"
        den_terms = self.denominator_terms
        single = len(den_terms) == 1 and den_terms[0][0] == 1 and den_terms[0][1] and \
            len(den_terms[0][1]) == 1 and den_terms[0][1][0][1] == 1
        denominator = _format_sum(den_terms)
        return f"{numerator}/{denominator}" if single else f"{numerator}/({denominator})"

    def __str__(self) -> str:
        return self.canonical

    def __repr__(self) -> str:
        return f"ExactScalar({self.canonical!r})"

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = ExactScalar.from_fraction(other)
        if not isinstance(other, ExactScalar):
            return NotImplemented
        return self.canonical == other.canonical

    def __hash__(self) -> int:
        return hash(self.canonical)


def _format_term(coeff: Fraction, monom: Monomial) -> str:
    body = "*".join(display_name(name) for name, exponent in monom for _ in range(exponent))
    p, q = coeff.numerator, coeff.denominator
    if not body:
        return str(p) if q == 1 else f"{p}/{q}"
    if p == 1:
        text = body
    elif p == -1:
        text = f"-{body}"
    else:
        text = f"{p}*{body}"
    return text if q == 1 else f"{text}/{q}"


def _format_sum(terms: List[Term]) -> str:
    if not terms:
        return "0"
    pieces = []
    for position, (coeff, monom) in enumerate(terms):
        text = _format_term(coeff, monom)
        if position == 0:
            pieces.append(text)
        elif text.startswith("-"):
            pieces.append(f" - {text[1:]}")
        else:
            pieces.append(f" + {text}")
    return "".join(pieces)


def is_zero(a: ExactScalar) -> bool:
    return a.is_zero()


ZERO = ExactScalar.zero()
ONE = ExactScalar.one()
