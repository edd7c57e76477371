"""
📏 BKS COLLAPSE - CERTIFIED INTERVAL EVALUATION
Outward-rounded evaluation of exact scalars at bound symbol values (mpmath.iv),
plus sign certification with precision refinement.
"""

import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, Mapping, Optional, Tuple, Union

from mpmath import iv, mp

from ..config import PrecisionConfig
from ..errors import MissingBindingError, UndecidedSignError
from .scalars import PAIR_SYMBOL, ExactScalar, display_name

logger = logging.getLogger(__name__)

GUARD_BITS = 32


class Sign(str, Enum):
    NEGATIVE = "negative"
    ZERO = "zero"
    POSITIVE = "positive"


@contextmanager
def interval_precision(bits: int) -> Iterator[Any]:
    """mpmath.iv keeps one process-wide precision; restore it on exit"""
    saved = iv.prec
    iv.prec = bits
    try:
        yield iv
    finally:
        iv.prec = saved


def _endpoints(value) -> Tuple[Any, Any]:
    low, high = value._mpi_
    return mp.make_mpf(low), mp.make_mpf(high)


@dataclass(frozen=True)
class IntervalValue:
    value: Any
    precision_bits: int

    @classmethod
    def from_bounds(cls, lower, upper, precision_bits: int) -> "IntervalValue":
        with interval_precision(precision_bits):
            return cls(iv.mpf([lower, upper]), precision_bits)

    @property
    def lower(self):
        return _endpoints(self.value)[0]

    @property
    def upper(self):
        return _endpoints(self.value)[1]

    @property
    def midpoint(self):
        low, high = _endpoints(self.value)
        with mp.workprec(self.precision_bits + GUARD_BITS):
            return (low + high) / 2

    @property
    def width(self):
        low, high = _endpoints(self.value)
        with mp.workprec(self.precision_bits + GUARD_BITS):
            return high - low

    def is_positive(self) -> bool:
        return (self.value > 0) is True

    def is_negative(self) -> bool:
        return (self.value < 0) is True

    def excludes_zero(self) -> bool:
        return self.is_positive() or self.is_negative()

    def contains(self, point) -> bool:
        with interval_precision(self.precision_bits + GUARD_BITS):
            return bool(point in self.value)

    def within(self, bound: float) -> bool:
        """Both endpoints strictly inside (-bound, bound)"""
        low, high = _endpoints(self.value)
        return bool(low > -bound and high < bound)

    def to_degrees(self) -> "IntervalValue":
        with interval_precision(self.precision_bits + GUARD_BITS):
            return IntervalValue(self.value * 180 / iv.pi, self.precision_bits)

    def power(self, exponent: int) -> "IntervalValue":
        with interval_precision(self.precision_bits + GUARD_BITS):
            return IntervalValue(self.value ** exponent, self.precision_bits)

    def format(self, digits: int = 12) -> str:
        low, high = _endpoints(self.value)
        return f"[{mp.nstr(low, digits)}, {mp.nstr(high, digits)}]"

    def __str__(self) -> str:
        return self.format()


BindingSource = Union["SymbolBindings", Mapping[str, IntervalValue]]


@dataclass
class RotationDefinition:
    cos_theta: ExactScalar
    steps: int


@dataclass
class ScaleDefinition:
    alpha: ExactScalar


@dataclass
class SymbolBindings:
    """Numeric meaning of every chain symbol, refinable to any precision"""

    rotations: Dict[int, RotationDefinition] = field(default_factory=dict)
    scales: Dict[int, ScaleDefinition] = field(default_factory=dict)
    _cache: Dict[Tuple[str, int], IntervalValue] = field(default_factory=dict, repr=False)

    def bind_rotation(self, index: int, cos_theta: ExactScalar, steps: int) -> None:
        self._claim(index)
        self.rotations[index] = RotationDefinition(cos_theta, steps)

    def bind_scale(self, index: int, alpha: ExactScalar) -> None:
        self._claim(index)
        self.scales[index] = ScaleDefinition(alpha)

    def _claim(self, index: int) -> None:
        self.rotations.pop(index, None)
        self.scales.pop(index, None)
        self._cache = {key: value for key, value in self._cache.items()
                       if key[0][1:] != str(index) and key[0] != f"theta{index}"}

    def with_rotation(self, index: int, cos_theta: ExactScalar, steps: int) -> "SymbolBindings":
        trial = SymbolBindings(dict(self.rotations), dict(self.scales))
        trial.bind_rotation(index, cos_theta, steps)
        return trial

    def merge(self, other: "SymbolBindings") -> None:
        for index, rotation in other.rotations.items():
            self.bind_rotation(index, rotation.cos_theta, rotation.steps)
        for index, scale in other.scales.items():
            self.bind_scale(index, scale.alpha)

    @property
    def indices(self):
        return sorted(set(self.rotations) | set(self.scales))

    def resolve(self, name: str, bits: int) -> IntervalValue:
        key = (name, bits)
        if key not in self._cache:
            self._cache[key] = self._compute(name, bits)
        return self._cache[key]

    def _compute(self, name: str, bits: int) -> IntervalValue:
        if name.startswith("sqrt("):
            with interval_precision(bits + GUARD_BITS):
                return IntervalValue(iv.sqrt(int(name[5:-1])), bits)
        match = PAIR_SYMBOL.match(name)
        if not match:
            raise MissingBindingError(name)
        kind, index = match.group(1), int(match.group(2))
        if index in self.rotations:
            rotation = self.rotations[index]
            theta = self.theta(index, bits).value
            with interval_precision(bits + GUARD_BITS):
                step = theta / rotation.steps
                if kind == "c":
                    return IntervalValue(iv.cos(step), bits)
                return IntervalValue(_clip_nonnegative(iv.sin(step)), bits)
        if index in self.scales:
            alpha = eval_interval(self.scales[index].alpha, self, _guarded(bits))
            if (alpha.value > 1) is not True:
                raise UndecidedSignError(f"scale symbol {name} needs alpha > 1")
            with interval_precision(bits + GUARD_BITS):
                if kind == "c":
                    return IntervalValue(1 / iv.sqrt(alpha.value), bits)
                return IntervalValue(iv.sqrt(1 - 1 / alpha.value), bits)
        raise MissingBindingError(name)

    def theta(self, index: int, bits: int) -> IntervalValue:
        key = (f"theta{index}", bits)
        if key not in self._cache:
            rotation = self.rotations[index]
            cos_value = eval_interval(rotation.cos_theta, self, _guarded(bits))
            self._cache[key] = certified_angle(cos_value, bits)
        return self._cache[key]


def _guarded(bits: int) -> PrecisionConfig:
    wide = max(64, bits + GUARD_BITS)
    return PrecisionConfig(precision_bits=wide, max_precision_bits=max(4096, wide))


def _clip_nonnegative(value):
    low, high = _endpoints(value)
    if low >= 0:
        return value
    return iv.mpf([0, high])


def certified_angle(cos_value: IntervalValue, bits: int) -> IntervalValue:
    """Interval for theta in [0, pi] with cos(theta) in cos_value.

    A point estimate from mp.acos is widened until interval cosines of the two
    ends certify the bracket; cosine is decreasing on [0, pi].
    """
    work = bits + GUARD_BITS
    with mp.workprec(work):
        estimate = mp.acos(max(mp.mpf(-1), min(mp.mpf(1), cos_value.midpoint)))
        pad = mp.ldexp(1, -(bits - 16))
    with interval_precision(work):
        pi_high = _endpoints(iv.pi)[1]
        for _ in range(64):
            with mp.workprec(work):
                low, high = estimate - pad, estimate + pad
            low_ok = low <= 0 or (iv.cos(iv.mpf(low)) > cos_value.value) is True
            high_ok = high >= pi_high or (iv.cos(iv.mpf(high)) < cos_value.value) is True
            if low_ok and high_ok:
                theta = iv.mpf([max(low, mp.zero), min(high, pi_high)])
                return IntervalValue(theta, bits)
            pad *= 16
    raise UndecidedSignError("cannot bracket the chain angle")


def _lookup(bindings: BindingSource, name: str, bits: int) -> IntervalValue:
    if isinstance(bindings, SymbolBindings):
        return bindings.resolve(name, bits)
    try:
        return bindings[name]
    except KeyError:
        raise MissingBindingError(name) from None


def _eval_terms(terms, bindings: BindingSource, bits: int):
    total = iv.mpf(0)
    for coeff, monom in terms:
        value = iv.mpf(coeff.numerator) / coeff.denominator
        for name, exponent in monom:
            value = value * _lookup(bindings, display_name(name), bits).value ** exponent
        total = total + value
    return total


def eval_interval(a: ExactScalar, bindings: BindingSource, cfg: PrecisionConfig) -> IntervalValue:
    """Interval containing the real value of a under the bindings"""
    bits = cfg.precision_bits
    for symbol in sorted(a.symbols):
        _lookup(bindings, symbol, bits)
    with interval_precision(bits + GUARD_BITS):
        numerator = _eval_terms(a.numerator_terms, bindings, bits)
        denominator = _eval_terms(a.denominator_terms, bindings, bits)
        return IntervalValue(numerator / denominator, bits)


def certify_sign(a: ExactScalar, bindings: BindingSource, cfg: PrecisionConfig) -> Sign:
    if a.is_zero():
        return Sign.ZERO
    bits = cfg.precision_bits
    while True:
        value = eval_interval(a, bindings, cfg.at_bits(bits))
        if value.is_positive():
            return Sign.POSITIVE
        if value.is_negative():
            return Sign.NEGATIVE
        if bits >= cfg.max_precision_bits:
            break
        bits = min(bits * 2, cfg.max_precision_bits)
        logger.debug(f"🔍 Refining sign of {a} to {bits} bits")
    logger.warning(f"⚠️ Sign undecided at {bits} bits: {a}")
    raise UndecidedSignError(f"undecided sign for {a} at {bits} bits")


def evaluate_vector(coords, bindings: BindingSource, cfg: PrecisionConfig) -> Tuple[IntervalValue, ...]:
    return tuple(eval_interval(c, bindings, cfg) for c in coords)


def is_certified_nonzero(coords, bindings: BindingSource, cfg: Optional[PrecisionConfig] = None) -> bool:
    """True when some coordinate interval excludes zero"""
    cfg = cfg or PrecisionConfig()
    for c in coords:
        if c.is_zero():
            continue
        if not c.symbols:
            return True
        if eval_interval(c, bindings, cfg).excludes_zero():
            return True
    return False
