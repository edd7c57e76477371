"""
🔗 BKS COLLAPSE - COSINE CHAINS
Transport of v-monotonicity between two non-orthogonal points of S(g) with
<X,X>_S < <Y,Y>_S: a ScaleDown from X to Y_0, then n rotation steps of angle theta/n,
each a Monotone node, ending numerically on Y.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

from ..algebra.geometry import SVector, det3, quarter_turn, s_inner
from ..algebra.intervals import IntervalValue, Sign, SymbolBindings, certify_sign, eval_interval, evaluate_vector
from ..algebra.scalars import ExactScalar
from ..config import PrecisionConfig
from ..errors import ChainError, NotInTowerError
from .derivation import DerivationBuilder, DerivationNode, RuleKind, bound_of
from .rule_engine import RuleEngine

logger = logging.getLogger(__name__)


@dataclass
class ChainParams:
    beta_x: ExactScalar
    beta_y: ExactScalar
    beta_xy: ExactScalar
    cos_theta: ExactScalar
    theta: IntervalValue
    n: int
    alpha: ExactScalar
    alpha_interval: IntervalValue
    rotation_index: int
    scale_index: int
    orientation: int
    bindings: SymbolBindings
    rejected: List[Tuple[int, IntervalValue]] = field(default_factory=list)

    @property
    def theta_degrees(self) -> IntervalValue:
        return self.theta.to_degrees()

    @property
    def length(self) -> int:
        """Vectors in the chain Y = Y_n, ..., Y_0, X"""
        return self.n + 2


@dataclass
class ScaleDownAdvice:
    """X and Y lie on one ray from g: Y = lam X in S(g), so ScaleDown applies directly"""

    lam: ExactScalar
    message: str = "use ScaleDown"


@dataclass
class MonotoneAdvice:
    """alpha(1) = beta_XY/beta_X is exactly 1: Y - X is S-orthogonal to X and one Monotone step gives v(Y) <= v(X)"""

    step: SVector
    message: str = "use Monotone"


@dataclass
class Chain:
    params: ChainParams
    X: SVector
    Y: SVector
    steps: List[SVector]
    engine: RuleEngine
    scale_down: DerivationNode
    step_nodes: List[DerivationNode]
    verified: bool = False
    link: Optional[DerivationNode] = None

    @property
    def differences(self) -> List[SVector]:
        return [SVector.from_offset(cur.offset - prev.offset, self.X.frame)
                for prev, cur in zip(self.steps, self.steps[1:])]

    @property
    def vectors(self) -> List[SVector]:
        return [self.Y] + self.steps[-2::-1] + [self.X]

    def endpoint_residual(self) -> Tuple[IntervalValue, ...]:
        gap = self.steps[-1].base - self.Y.base
        return evaluate_vector(gap.coords, self.params.bindings, self.engine.cfg)

    def verify(self) -> bool:
        """Exact step identities in the (c, s) ring, then the numeric endpoint"""
        c, _ = ExactScalar.pair(self.params.rotation_index)
        for prev, cur, diff in zip(self.steps, self.steps[1:], self.differences):
            if not s_inner(diff, prev).is_zero():
                raise ChainError(f"step to {cur.base} is not S-orthogonal to its predecessor")
            if prev.s_norm2() != c ** 2 * cur.s_norm2():
                raise ChainError(f"norm recurrence fails at {cur.base}")
        tolerance = self.engine.cfg.zero_tolerance
        if not all(value.within(tolerance) for value in self.endpoint_residual()):
            raise ChainError("chain endpoint misses Y")
        self.verified = True
        return True


def chain_params(X: SVector, Y: SVector, cfg: Optional[PrecisionConfig] = None, rotation_index: int = 1,
                 scale_index: int = 2, bindings: Optional[SymbolBindings] = None
                 ) -> Union[ChainParams, ScaleDownAdvice, MonotoneAdvice]:
    """Smallest n with alpha(n) = sqrt(beta_Y/beta_X) cos(theta/n)^n >= 1.

    alpha(1) = beta_XY/beta_X is decided exactly; when it equals 1 the result is a
    MonotoneAdvice. For n >= 2 the interval of alpha(n) - 1 must certify a positive sign,
    so an exact tie there is reported as UndecidedSignError.
    """
    cfg = cfg or PrecisionConfig()
    bindings = bindings if bindings is not None else SymbolBindings()
    if X.g != Y.g:
        raise ChainError("chain endpoints live in different S(g)")
    beta_x, beta_y, beta_xy = X.s_norm2(), Y.s_norm2(), s_inner(X, Y)
    if beta_x.is_zero() or beta_y.is_zero():
        raise ChainError("chain endpoints must differ from g")
    if certify_sign(beta_y - beta_x, bindings, cfg) != Sign.POSITIVE:
        raise ChainError("beta_X < beta_Y fails")
    try:
        cos_theta = beta_xy / (beta_x * beta_y).sqrt()
        ratio = (beta_y / beta_x).sqrt()
    except NotInTowerError as e:
        raise ChainError(f"chain angle leaves the square-root tower: {e}") from e
    if cos_theta == 1:
        logger.info(f"📏 Collinear chain endpoints, ScaleDown by {ratio}")
        return ScaleDownAdvice(ratio)
    first = certify_sign(beta_xy / beta_x - 1, bindings, cfg)
    if first == Sign.ZERO:
        logger.info("📏 alpha(1) = 1, a single Monotone step reaches Y")
        return MonotoneAdvice(SVector.from_offset(Y.offset - X.offset, X.frame))

    orientation = -1 if certify_sign(det3(X.g, X.offset, Y.offset), bindings, cfg) == Sign.NEGATIVE else 1
    c = ExactScalar.symbol(f"c{rotation_index}")
    rejected: List[Tuple[int, IntervalValue]] = []
    for n in range(1, cfg.chain_step_cap + 1):
        trial = bindings.with_rotation(rotation_index, cos_theta, n)
        alpha = ratio * c ** n
        sign = first if n == 1 else certify_sign(alpha - 1, trial, cfg)
        if sign == Sign.POSITIVE:
            bindings.bind_rotation(rotation_index, cos_theta, n)
            bindings.bind_scale(scale_index, alpha)
            params = ChainParams(beta_x, beta_y, beta_xy, cos_theta, bindings.theta(rotation_index, cfg.precision_bits),
                                 n, alpha, eval_interval(alpha, bindings, cfg), rotation_index, scale_index,
                                 orientation, bindings, rejected)
            logger.debug(f"🧭 Chain parameters: cos(theta) = {cos_theta}, n = {n}")
            return params
        rejected.append((n, eval_interval(alpha, trial, cfg)))
    raise ChainError(f"no n up to {cfg.chain_step_cap} gives alpha >= 1")


def build_chain(p: ChainParams, X: SVector, Y: SVector, engine: Optional[RuleEngine] = None,
                cfg: Optional[PrecisionConfig] = None) -> Chain:
    """Y_0 = X/c'^2 by ScaleDown, then Y_i = Y_(i-1) + (s/c) J Y_(i-1) by Monotone steps"""
    if engine is None:
        builder = DerivationBuilder("chain")
        builder.derivation.symbols = p.bindings
        engine = RuleEngine(builder, X.frame, cfg)
    symbols = engine.derivation.symbols
    if symbols is not p.bindings:
        symbols.bind_rotation(p.rotation_index, p.cos_theta, p.n)
        symbols.bind_scale(p.scale_index, p.alpha)

    frame, g = X.frame, X.g
    c, s = ExactScalar.pair(p.rotation_index)
    c_scale, s_scale = ExactScalar.pair(p.scale_index)
    scale_down = engine.apply_scale_down(X, 1 / c_scale ** 2, s_scale / c_scale)

    steps = [X.s_scale(1 / c_scale ** 2)]
    step_nodes = []
    for _ in range(p.n):
        prev = steps[-1]
        turned = quarter_turn(g, prev.offset, p.orientation).scale(s / c)
        step_nodes.append(engine.apply_monotone(SVector.from_offset(turned, frame), prev))
        steps.append(SVector.from_offset(prev.offset + turned, frame))

    chain = Chain(p, X, Y, steps, engine, scale_down, step_nodes)
    chain.verify()
    logger.info(f"🔗 Chain built: n={p.n}, {p.length} vectors")
    return chain


def conclude_lemma2(chain: Chain) -> DerivationNode:
    """ChainLink node concluding v(Y) <= v(X) over the ScaleDown and step nodes"""
    if not chain.verified:
        raise ChainError("conclude_lemma2 needs a verified chain")
    p = chain.params
    roles = {"g": chain.X.g, "X": chain.X.base, "Y": chain.Y.base}
    roles.update({f"Y_{i}": step.base for i, step in enumerate(chain.steps)})
    scalars = {
        "beta_x": p.beta_x, "beta_y": p.beta_y, "beta_xy": p.beta_xy, "cos_theta": p.cos_theta,
        "alpha": p.alpha, "n": ExactScalar.coerce(p.n), "orientation": ExactScalar.coerce(p.orientation),
        "rotation": ExactScalar.coerce(p.rotation_index), "scale": ExactScalar.coerce(p.scale_index),
    }
    premises = [chain.scale_down.node_id] + [node.node_id for node in chain.step_nodes]
    chain.link = chain.engine.add(RuleKind.CHAIN_LINK, roles, bound_of("Y", "X"), premises, scalars)
    return chain.link


def transport_zero(engine: RuleEngine, X: SVector, Y: SVector) -> DerivationNode:
    """A node concluding v(Y) <= v(X); a ChainLink unless chain_params advises a single rule"""
    rotation_index = engine.builder.allocate_symbol_index()
    scale_index = engine.builder.allocate_symbol_index()
    p = chain_params(X, Y, engine.cfg, rotation_index, scale_index, engine.derivation.symbols)
    if isinstance(p, ScaleDownAdvice):
        return engine.apply_scale_down(X, p.lam)
    if isinstance(p, MonotoneAdvice):
        return engine.apply_monotone(p.step, X)
    return conclude_lemma2(build_chain(p, X, Y, engine))
