"""
⚙️ BKS COLLAPSE - RULE ENGINE
Applies the valuation rules inside one derivation: every node is built from its inputs,
annotated with its side conditions, and rejected with a RuleError naming the first
identity that fails.
"""

import logging
from contextlib import contextmanager
from typing import Dict, Iterable, Iterator, List, Optional, Union

from ..algebra.geometry import Frame, SVector, Vector3, cross, inner, norm2, s_inner, w_at
from ..algebra.intervals import Sign, certify_sign
from ..algebra.scalars import ExactScalar, Number
from ..config import PrecisionConfig
from ..errors import CollapseError, NotInTowerError, RuleError, UndecidedSignError
from .derivation import (
    BranchScope,
    Conclusion,
    ConclusionSpec,
    DerivationBuilder,
    DerivationNode,
    RuleKind,
    bound_of,
    fact_of,
    relation_of,
)
from .rule_checks import CheckContext, conditions_for, run_check

logger = logging.getLogger(__name__)

PointLike = Union[SVector, Vector3]


class RuleEngine:
    """Builds rule nodes for one derivation over the frame {g, h1, h2}"""

    def __init__(self, builder: DerivationBuilder, frame: Frame, cfg: Optional[PrecisionConfig] = None):
        self.builder = builder
        self.frame = frame
        self.cfg = cfg or PrecisionConfig()
        self.assumption: Optional[DerivationNode] = None

    @property
    def derivation(self):
        return self.builder.derivation

    @property
    def g(self) -> Vector3:
        return self.frame.g

    def context(self) -> CheckContext:
        return CheckContext(self.derivation, self.cfg)

    def add(self, kind: RuleKind, roles: Dict[str, Vector3], conclusion: ConclusionSpec,
            premises: Iterable[str] = (), scalars: Optional[Dict[str, ExactScalar]] = None) -> DerivationNode:
        """Append a node and check every side condition of its rule"""
        node = self.builder.add_node(kind, roles, conclusion, premises, scalars)
        try:
            checks = conditions_for(self.context(), node)
            node.side_conditions = [check.side_condition for check in checks]
            for check in checks:
                outcome = run_check(check)
                if not outcome.passed:
                    raise RuleError(f"{kind.value}: {check.label} fails ({outcome.detail})")
        except UndecidedSignError:
            self.builder.discard(node)
            raise
        except RuleError:
            self.builder.discard(node)
            raise
        except CollapseError as e:
            self.builder.discard(node)
            raise RuleError(f"{kind.value}: {e}") from e
        return node

    # primitive rules

    def assume(self, x: Optional[Vector3] = None) -> DerivationNode:
        """v(x) = 1 for the seed, g by default"""
        node = self.add(RuleKind.ASSUMPTION, {"x": x or self.g}, fact_of("x", 1))
        if self.assumption is None:
            self.assumption = node
        logger.info(f"🌱 Assumed v({node.role('x')}) = 1")
        return node

    def _assumed(self) -> List[str]:
        if self.assumption is None:
            self.assume()
        return [self.assumption.node_id]

    def apply_triple_sum(self, a: Vector3, b: Vector3, c: Vector3) -> DerivationNode:
        return self.add(RuleKind.TRIPLE_SUM, {"a": a, "b": b, "c": c}, relation_of(("a", "b", "c"), (), 1))

    def apply_orth_force(self, x: Vector3, y: Vector3, premises: Iterable[str] = ()) -> DerivationNode:
        """v(x) = 1 and x orthogonal to y give v(y) = 0"""
        if not inner(x, y).is_zero():
            raise RuleError("OrthForce: <x,y> = 0 fails")
        return self.add(RuleKind.ORTH_FORCE, {"x": x, "y": y, "u": cross(x, y)}, fact_of("y", 0), premises)

    def orth_force_by_triple(self, x: Vector3, y: Vector3, premises: Iterable[str] = ()) -> Conclusion:
        """The same fact as apply_orth_force, obtained from a TripleSum node and propagation"""
        triple = self.apply_triple_sum(x, y, cross(x, y))
        ctx = self.context()
        result = ctx.propagate(self.builder.scope, list(premises) + [triple.node_id])
        y_id = self.builder.intern(y)
        if not result.forces(ctx.key(y_id), 0):
            raise RuleError("TripleSum: known facts do not force v(y) = 0")
        return Conclusion.of_fact(y_id, 0)

    def apply_scale(self, x: Vector3, k: Union[ExactScalar, Number]) -> DerivationNode:
        k = ExactScalar.coerce(k)
        if k.is_zero():
            raise RuleError("Scale: k != 0 fails")
        return self.add(RuleKind.SCALE, {"x": x, "y": x.scale(k)}, relation_of(("x",), ("y",)), scalars={"k": k})

    # S(g) rules

    def _point(self, value: PointLike, name: str) -> SVector:
        if isinstance(value, SVector):
            if value.g != self.g:
                raise RuleError(f"{name} lives in S(g) for another g")
            return value
        try:
            return SVector(value, self.frame)
        except CollapseError as e:
            raise RuleError(f"<{name},g> = 1 fails") from e

    def _completion(self, x: Vector3, y: Vector3) -> Dict[str, Vector3]:
        w = w_at(self.g, x, y)
        z = y - x.scale(inner(y, w) / inner(x, w))
        return {"w": w, "Z": z, "u": cross(x, y), "m": cross(z, self.g)}

    def apply_sum_rule(self, X: PointLike, Y: PointLike) -> DerivationNode:
        """<X,Y>_S = -1 gives v(X) + v(Y) = v(w_S(X,Y))"""
        X, Y = self._point(X, "X"), self._point(Y, "Y")
        if s_inner(X, Y) != -1:
            raise RuleError(f"SumRule: <X,Y>_S = -1 fails (got {s_inner(X, Y)})")
        roles = {"g": self.g, "X": X.base, "Y": Y.base, **self._completion(X.base, Y.base)}
        return self.add(RuleKind.SUM_RULE, roles, relation_of(("X", "Y"), ("w",)), self._assumed())

    def apply_monotone(self, X: PointLike, Y: PointLike) -> DerivationNode:
        """<X,Y>_S = 0 gives v(X + Y) <= v(Y), stored as v(W) + v(X + Y) = v(Y)"""
        X, Y = self._point(X, "X"), self._point(Y, "Y")
        if Y.is_origin():
            raise RuleError("Monotone: Y != g fails")
        if not s_inner(X, Y).is_zero():
            raise RuleError("Monotone: <X,Y>_S = 0 fails")
        total = X.s_add(Y)
        if X.is_origin():
            roles = {"g": self.g, "X": X.base, "Y": Y.base, "sum": total.base}
            return self.add(RuleKind.MONOTONE, roles, bound_of("sum", "Y"))
        t = -(1 + Y.s_norm2()) / X.s_norm2()
        W = X.s_scale(t).s_add(Y)
        roles = {"g": self.g, "X": X.base, "Y": Y.base, "sum": total.base, "W": W.base,
                 **self._completion(W.base, total.base)}
        return self.add(RuleKind.MONOTONE, roles, relation_of(("W", "sum"), ("Y",)), self._assumed(), {"t": t})

    def apply_scale_down(self, X: PointLike, lam: Union[ExactScalar, Number],
                         tangent: Optional[ExactScalar] = None) -> DerivationNode:
        """v(lambda X) <= v(X) for lambda > 1, through two Monotone steps"""
        X = self._point(X, "X")
        lam = ExactScalar.coerce(lam)
        if X.is_origin():
            raise RuleError("ScaleDown: X != g fails")
        if certify_sign(lam - 1, self.derivation.symbols, self.cfg) != Sign.POSITIVE:
            raise RuleError(f"ScaleDown: lambda - 1 > 0 fails for lambda = {lam}")
        if tangent is None:
            try:
                tangent = (lam - 1).sqrt()
            except NotInTowerError as e:
                raise RuleError(f"ScaleDown: no tangent for lambda = {lam}") from e
        aux = SVector.from_offset(cross(self.g, X.offset).scale(tangent), self.frame)
        first = self.apply_monotone(aux, X)
        together = X.s_add(aux)
        rest = SVector(self.g + X.offset.scale(lam - 1) - aux.offset, self.frame)
        second = self.apply_monotone(rest, together)
        roles = {"g": self.g, "X": X.base, "scaled": X.s_scale(lam).base, "aux": aux.base,
                 "XY": together.base, "P": rest.base}
        return self.add(RuleKind.SCALE_DOWN, roles, bound_of("scaled", "X"), [first.node_id, second.node_id],
                        {"lambda": lam, "tangent": tangent})

    def apply_case_split(self, y: Vector3, premises: Iterable[str] = ()) -> DerivationNode:
        """v(g + y) + v(g - alpha y) = 1 with alpha = 1/<y,y>; open both branches with engine.branch"""
        if y.is_zero():
            raise RuleError("CaseSplit: <y,y> != 0 fails")
        if not inner(y, self.g).is_zero():
            raise RuleError("CaseSplit: <y,g> = 0 fails")
        alpha = 1 / norm2(y)
        X, Xa = self.g + y, self.g - y.scale(alpha)
        roles = {"g": self.g, "y": y, "X": X, "Xa": Xa, **self._completion(X, Xa)}
        base = self._assumed()
        extra = [p for p in premises if p not in base]
        return self.add(RuleKind.CASE_SPLIT, roles, relation_of(("X", "Xa"), (), 1), base + extra, {"alpha": alpha})

    @contextmanager
    def branch(self, split: DerivationNode, index: int) -> Iterator[BranchScope]:
        """Branch 1 assigns v(X) = 1, v(Xa) = 0; branch 2 the reverse"""
        if index not in (1, 2):
            raise RuleError(f"a CaseSplit has branches 1 and 2, not {index}")
        first, second = (1, 0) if index == 1 else (0, 1)
        scope = self.builder.open_scope(split, index, {split.role("X"): first, split.role("Xa"): second})
        outer = self.builder.scope
        self.builder.scope = scope.scope_id
        logger.debug(f"🔀 Entering {scope.scope_id}")
        try:
            yield scope
        finally:
            self.builder.scope = outer

    def close_branch(self, scope: BranchScope, outcome: Conclusion) -> None:
        scope.outcome = outcome
        ok, detail = self.context().outcome_holds(scope)
        if not ok:
            scope.outcome = None
            raise RuleError(f"branch {scope.scope_id}: {detail}")
        logger.debug(f"✅ Closed {scope.scope_id} with {outcome.describe()}")
