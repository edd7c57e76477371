"""
🔎 BKS COLLAPSE - RULE SIDE CONDITIONS
The checkable content of every rule kind. The engine evaluates these when it adds a node;
the verifier regenerates them from the stored node alone and evaluates them again.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple

from mpmath import mp

from ..algebra.geometry import Vector3, cross, det3, inner, norm2, parseval, w_at
from ..algebra.intervals import Sign, certify_sign, eval_interval, evaluate_vector
from ..algebra.scalars import ExactScalar
from ..config import PrecisionConfig
from ..errors import CollapseError, DerivationStructureError, UndecidedSignError
from .derivation import (
    ROOT_SCOPE,
    BranchScope,
    Conclusion,
    ConclusionKind,
    ConditionTag,
    Derivation,
    DerivationNode,
    RuleKind,
    SideCondition,
)
from .fact_propagation import FactPropagator, PropagationResult, relation_propagator

logger = logging.getLogger(__name__)

Facts = List[Tuple[str, int]]


@dataclass(frozen=True)
class CheckOutcome:
    passed: bool
    detail: str = ""
    residual: Optional[str] = None
    width: Optional[str] = None


@dataclass(frozen=True)
class Check:
    label: str
    tag: ConditionTag
    evaluate: Callable[[], CheckOutcome]

    @property
    def side_condition(self) -> SideCondition:
        return SideCondition(self.label, self.tag)


def run_check(check: Check) -> CheckOutcome:
    """Evaluate a check; mathematical failures become failed outcomes, undecided signs propagate"""
    try:
        return check.evaluate()
    except UndecidedSignError:
        raise
    except CollapseError as e:
        return CheckOutcome(False, str(e))


def positive_integer(node: DerivationNode, name: str) -> Optional[int]:
    value = node.scalars.get(name)
    if value is None or not value.is_rational():
        return None
    number = value.to_fraction()
    if number.denominator != 1 or number < 1:
        return None
    return int(number)


class CheckContext:
    """Read-only view of a derivation while its nodes are checked"""

    def __init__(self, derivation: Derivation, cfg: Optional[PrecisionConfig] = None):
        self.derivation = derivation
        self.cfg = cfg or PrecisionConfig()
        self.index = derivation.node_index()
        self._keys: Dict[str, Tuple] = {}

    @property
    def bindings(self):
        return self.derivation.symbols

    def vec(self, vector_id: str) -> Vector3:
        return self.derivation.vector(vector_id)

    def role(self, node: DerivationNode, name: str) -> Vector3:
        return self.vec(node.role(name))

    @cached_property
    def identifications(self) -> Dict[str, str]:
        """Chain endpoint id -> chain target id, for every chain link"""
        pairs = {}
        for node in self.derivation.nodes:
            if node.kind != RuleKind.CHAIN_LINK:
                continue
            steps = positive_integer(node, "n")
            end, target = node.roles.get(f"Y_{steps}"), node.roles.get("Y")
            if steps and end and target and end != target:
                pairs[end] = target
        return pairs

    def key(self, vector_id: str) -> Tuple:
        """Projective point of a vector id; chain endpoints share the point of their target"""
        vector_id = self.identifications.get(vector_id, vector_id)
        if vector_id not in self._keys:
            vector = self.vec(vector_id)
            self._keys[vector_id] = ("zero", vector_id) if vector.is_zero() else vector.projective_key
        return self._keys[vector_id]

    def premises_of(self, node: DerivationNode, kind: Optional[RuleKind] = None) -> List[DerivationNode]:
        found = []
        for premise_id in node.premises:
            premise = self.index.get(premise_id)
            if premise is None:
                raise DerivationStructureError(f"dangling premise {premise_id!r} of {node.node_id}")
            if kind is None or premise.kind == kind:
                found.append(premise)
        return found

    @cached_property
    def dependencies(self) -> Dict[str, Set[str]]:
        return self.derivation.dependencies()

    def closure(self, roots: Iterable[str]) -> Set[str]:
        seen: Set[str] = set()
        stack = list(roots)
        while stack:
            node_id = stack.pop()
            if node_id in seen:
                continue
            seen.add(node_id)
            stack.extend(self.dependencies.get(node_id, ()))
        return seen

    def knowledge(self, scope_id: str, roots: Iterable[str]) -> Facts:
        """Facts usable in scope_id by something that depends on roots"""
        path = self.derivation.scope_path(scope_id)
        on_path = {ROOT_SCOPE} | {scope.scope_id for scope in path}
        facts = [(vid, value) for scope in reversed(path) for vid, value in sorted(scope.assignment.items())]
        for node_id in sorted(self.closure(roots)):
            node = self.index.get(node_id)
            if node is not None and node.scope in on_path and node.conclusion.kind == ConclusionKind.FACT:
                facts.append((node.conclusion.fact.vector_id, node.conclusion.fact.value))
        return facts

    @cached_property
    def propagator(self) -> FactPropagator:
        return relation_propagator(self.derivation, self.key)

    def propagate(self, scope_id: str, roots: Iterable[str]) -> PropagationResult:
        return self.propagator.run(self.knowledge(scope_id, roots))

    def outcome_holds(self, scope: BranchScope) -> Tuple[bool, str]:
        """Whether the facts of a branch force its claimed outcome"""
        outcome = scope.outcome
        if outcome is None:
            return False, "branch has no outcome"
        result = self.propagate(scope.scope_id, [scope.split_node])
        if result.conflict:
            return True, result.reason
        if outcome.kind == ConclusionKind.CONTRADICTION:
            return False, "branch facts do not reach a contradiction"
        if outcome.kind != ConclusionKind.FACT:
            return False, "branch outcome must be a fact or a contradiction"
        fact = outcome.fact
        if result.forces(self.key(fact.vector_id), fact.value):
            return True, ""
        return False, f"branch facts do not force v({fact.vector_id}) = {fact.value}"


# Check constructors

def _brief(value) -> str:
    text = str(value)
    return text if len(text) <= 160 else text[:157] + "..."


def exact_zero(label: str, compute: Callable[[], ExactScalar]) -> Check:
    def evaluate() -> CheckOutcome:
        value = compute()
        if value.is_zero():
            return CheckOutcome(True)
        return CheckOutcome(False, f"nonzero residual {_brief(value)}")

    return Check(label, ConditionTag.EXACT, evaluate)


def exact_equal(label: str, left: Callable, right: Callable) -> Check:
    """left() and right() are both scalars or both vectors"""
    def evaluate() -> CheckOutcome:
        difference = left() - right()
        if difference.is_zero():
            return CheckOutcome(True)
        return CheckOutcome(False, f"differs by {_brief(difference)}")

    return Check(label, ConditionTag.EXACT, evaluate)


def exact_nonzero(label: str, compute: Callable) -> Check:
    def evaluate() -> CheckOutcome:
        if compute().is_zero():
            return CheckOutcome(False, "value is zero")
        return CheckOutcome(True)

    return Check(label, ConditionTag.EXACT, evaluate)


def logical(label: str, compute: Callable[[], Tuple[bool, str]]) -> Check:
    def evaluate() -> CheckOutcome:
        ok, detail = compute()
        return CheckOutcome(ok, "" if ok else detail)

    return Check(label, ConditionTag.EXACT, evaluate)


def interval_positive(ctx: CheckContext, label: str, compute: Callable[[], ExactScalar]) -> Check:
    def evaluate() -> CheckOutcome:
        value = compute()
        sign = certify_sign(value, ctx.bindings, ctx.cfg)
        interval = eval_interval(value, ctx.bindings, ctx.cfg)
        ok = sign == Sign.POSITIVE
        return CheckOutcome(ok, "" if ok else f"sign is {sign.value}", interval.format(),
                            mp.nstr(interval.width, 3))

    return Check(label, ConditionTag.INTERVAL, evaluate)


def interval_vanishing(ctx: CheckContext, label: str, compute: Callable[[], Vector3]) -> Check:
    def evaluate() -> CheckOutcome:
        values = evaluate_vector(compute().coords, ctx.bindings, ctx.cfg)
        ok = all(value.within(ctx.cfg.zero_tolerance) for value in values)
        widest = max(values, key=lambda value: value.width)
        return CheckOutcome(ok, "" if ok else f"residual exceeds {ctx.cfg.zero_tolerance}",
                            ", ".join(value.format() for value in values), mp.nstr(widest.width, 3))

    return Check(label, ConditionTag.INTERVAL, evaluate)


# Shared blocks

def _orthogonal(ctx: CheckContext, node: DerivationNode, names: Sequence[str]) -> Check:
    def compute() -> Tuple[bool, str]:
        vectors = [ctx.role(node, name) for name in names]
        for name, vector in zip(names, vectors):
            if vector.is_zero():
                return False, f"{name} is zero"
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                if not inner(vectors[i], vectors[j]).is_zero():
                    return False, f"<{names[i]},{names[j]}> != 0"
        return True, ""

    return logical("{" + ",".join(names) + "} pairwise orthogonal", compute)


def _in_s(ctx: CheckContext, node: DerivationNode, names: Sequence[str]) -> List[Check]:
    g = lambda: ctx.role(node, "g")  # noqa: E731
    checks = [exact_zero("<g,g> = 1", lambda: norm2(g()) - 1)]
    for name in names:
        checks.append(exact_zero(f"<{name},g> = 1", lambda name=name: inner(ctx.role(node, name), g()) - 1))
    return checks


def _assumed(ctx: CheckContext, node: DerivationNode) -> Check:
    def compute() -> Tuple[bool, str]:
        g_key = ctx.key(node.role("g"))
        for premise in ctx.premises_of(node, RuleKind.ASSUMPTION):
            fact = premise.conclusion.fact
            if premise.scope == ROOT_SCOPE and fact and fact.value == 1 and ctx.key(fact.vector_id) == g_key:
                return True, ""
        return False, "no root assumption v(g) = 1 among the premises"

    return logical("v(g) = 1 among premises", compute)


def _concludes(node: DerivationNode, expected: Callable[[], Conclusion]) -> Check:
    def compute() -> Tuple[bool, str]:
        wanted = expected()
        return node.conclusion == wanted, f"expected {wanted.describe()}"

    return logical("conclusion matches rule", compute)


def _sum_rule_block(ctx: CheckContext, node: DerivationNode, x: str, y: str) -> List[Check]:
    """Sum rule on <X,Y>_S = -1: the Z, u, m completion and the three contexts behind it"""
    def v(name: str) -> Vector3:
        return ctx.role(node, name)

    def z_formula() -> Vector3:
        w = v("w")
        return v(y) - v(x).scale(inner(v(y), w) / inner(v(x), w))

    return [
        exact_zero(f"<{x},{y}>_S = -1", lambda: parseval(v("g"), v(x), v(y)) + 1),
        exact_zero(f"<{x},{y}> = 0", lambda: inner(v(x), v(y))),
        exact_equal(f"w = w_S({x},{y})", lambda: v("w"), lambda: w_at(v("g"), v(x), v(y))),
        exact_equal(f"Z = {y} - (<{y},w>/<{x},w>) {x}", lambda: v("Z"), z_formula),
        exact_nonzero("Z != 0", lambda: v("Z")),
        exact_zero("<Z,w> = 0", lambda: inner(v("Z"), v("w"))),
        exact_zero("<Z,g> = 0", lambda: inner(v("Z"), v("g"))),
        exact_zero(f"det({x},w,Z) = 0", lambda: det3(v(x), v("w"), v("Z"))),
        exact_zero(f"det({y},w,Z) = 0", lambda: det3(v(y), v("w"), v("Z"))),
        exact_nonzero("w x Z != 0", lambda: cross(v("w"), v("Z"))),
        exact_equal(f"u = {x} x {y}", lambda: v("u"), lambda: cross(v(x), v(y))),
        exact_equal("m = Z x g", lambda: v("m"), lambda: cross(v("Z"), v("g"))),
        _orthogonal(ctx, node, (x, y, "u")),
        _orthogonal(ctx, node, ("w", "Z", "u")),
        _orthogonal(ctx, node, ("Z", "g", "m")),
    ]


def _bound_from_premises(ctx: CheckContext, node: DerivationNode) -> Check:
    """v(upper) = 0 forces v(lower) = 0 through the premises' relations alone"""
    def compute() -> Tuple[bool, str]:
        propagator = FactPropagator(ctx.key)
        for premise in ctx.premises_of(node):
            propagator.add_node(premise)
        lower, upper = node.conclusion.lower, node.conclusion.upper
        if lower is None or upper is None:
            return False, "conclusion is not a bound"
        result = propagator.run([(upper, 0)])
        return result.forces(ctx.key(lower), 0), f"premises do not force v({lower}) = 0 from v({upper}) = 0"

    return logical("bound follows from premises", compute)


def _premise_roles(ctx: CheckContext, premise_id: str, kind: RuleKind,
                   expected: Dict[str, str]) -> Tuple[bool, str]:
    premise = ctx.index.get(premise_id)
    if premise is None or premise.kind != kind:
        return False, f"{premise_id} is not a {kind.value} node"
    for role, vector_id in expected.items():
        if premise.roles.get(role) != vector_id:
            return False, f"{premise_id} has the wrong {role}"
    return True, ""


# Rule kinds

def _assumption(ctx: CheckContext, node: DerivationNode) -> List[Check]:
    return [
        logical("assumption is a root without premises",
                lambda: (node.scope == ROOT_SCOPE and not node.premises, "assumption inside a branch or with premises")),
        exact_nonzero("x != 0", lambda: ctx.role(node, "x")),
        _concludes(node, lambda: Conclusion.of_fact(node.role("x"), 1)),
    ]


def _triple_sum(ctx: CheckContext, node: DerivationNode) -> List[Check]:
    return [
        _orthogonal(ctx, node, ("a", "b", "c")),
        _concludes(node, lambda: Conclusion.relation((node.role("a"), node.role("b"), node.role("c")), (), 1)),
    ]


def _orth_force(ctx: CheckContext, node: DerivationNode) -> List[Check]:
    def forced() -> Tuple[bool, str]:
        result = ctx.propagate(node.scope, node.premises)
        return result.forces(ctx.key(node.role("x")), 1), "known facts do not force v(x) = 1"

    return [
        exact_zero("<x,y> = 0", lambda: inner(ctx.role(node, "x"), ctx.role(node, "y"))),
        exact_equal("u = x x y", lambda: ctx.role(node, "u"), lambda: cross(ctx.role(node, "x"), ctx.role(node, "y"))),
        _orthogonal(ctx, node, ("x", "y", "u")),
        logical("v(x) = 1 is known", forced),
        _concludes(node, lambda: Conclusion.of_fact(node.role("y"), 0)),
    ]


def _scale(ctx: CheckContext, node: DerivationNode) -> List[Check]:
    return [
        exact_nonzero("x != 0", lambda: ctx.role(node, "x")),
        exact_nonzero("k != 0", lambda: node.scalar("k")),
        exact_equal("y = k x", lambda: ctx.role(node, "y"), lambda: ctx.role(node, "x").scale(node.scalar("k"))),
        _concludes(node, lambda: Conclusion.relation((node.role("x"),), (node.role("y"),))),
    ]


def _sum_rule(ctx: CheckContext, node: DerivationNode) -> List[Check]:
    return _in_s(ctx, node, ("X", "Y")) + _sum_rule_block(ctx, node, "X", "Y") + [
        _assumed(ctx, node),
        _concludes(node, lambda: Conclusion.relation((node.role("X"), node.role("Y")), (node.role("w"),))),
    ]


def _monotone(ctx: CheckContext, node: DerivationNode) -> List[Check]:
    def v(name: str) -> Vector3:
        return ctx.role(node, name)

    if "W" not in node.roles:
        return _in_s(ctx, node, ("X", "Y")) + [
            exact_equal("X = g", lambda: v("X"), lambda: v("g")),
            exact_equal("sum = Y", lambda: v("sum"), lambda: v("Y")),
            _concludes(node, lambda: Conclusion.bound(node.role("sum"), node.role("Y"))),
        ]

    def t_formula() -> ExactScalar:
        g = v("g")
        return -(1 + parseval(g, v("Y"), v("Y"))) / parseval(g, v("X"), v("X"))

    return _in_s(ctx, node, ("X", "Y")) + [
        exact_zero("<X,Y>_S = 0", lambda: parseval(v("g"), v("X"), v("Y"))),
        exact_nonzero("<X,X>_S != 0", lambda: parseval(v("g"), v("X"), v("X"))),
        exact_nonzero("Y != g", lambda: v("Y") - v("g")),
        exact_equal("sum = X + Y", lambda: v("sum"), lambda: v("X") + v("Y") - v("g")),
        exact_equal("t = -(1 + <Y,Y>_S)/<X,X>_S", lambda: node.scalar("t"), t_formula),
        exact_equal("W = t X + Y", lambda: v("W"),
                    lambda: v("g") + (v("X") - v("g")).scale(node.scalar("t")) + (v("Y") - v("g"))),
    ] + _sum_rule_block(ctx, node, "W", "sum") + [
        exact_equal("w = Y", lambda: v("w"), lambda: v("Y")),
        _assumed(ctx, node),
        _concludes(node, lambda: Conclusion.relation((node.role("W"), node.role("sum")), (node.role("Y"),))),
    ]


def _scale_down(ctx: CheckContext, node: DerivationNode) -> List[Check]:
    def v(name: str) -> Vector3:
        return ctx.role(node, name)

    def offset(name: str) -> Vector3:
        return v(name) - v("g")

    lam = lambda: node.scalar("lambda")  # noqa: E731

    def premises() -> Tuple[bool, str]:
        if len(node.premises) != 2:
            return False, "expected two Monotone premises"
        first = _premise_roles(ctx, node.premises[0], RuleKind.MONOTONE,
                               {"X": node.role("aux"), "Y": node.role("X"), "sum": node.role("XY")})
        if not first[0]:
            return first
        return _premise_roles(ctx, node.premises[1], RuleKind.MONOTONE,
                              {"X": node.role("P"), "Y": node.role("XY"), "sum": node.role("scaled")})

    return _in_s(ctx, node, ("X",)) + [
        exact_nonzero("X != g", lambda: offset("X")),
        exact_equal("tangent^2 = lambda - 1", lambda: node.scalar("tangent") ** 2, lambda: lam() - 1),
        exact_equal("aux = g + tangent (g x (X - g))", lambda: v("aux"),
                    lambda: v("g") + cross(v("g"), offset("X")).scale(node.scalar("tangent"))),
        exact_zero("<aux,X>_S = 0", lambda: parseval(v("g"), v("aux"), v("X"))),
        exact_equal("<aux,aux>_S = (lambda - 1) <X,X>_S", lambda: parseval(v("g"), v("aux"), v("aux")),
                    lambda: (lam() - 1) * parseval(v("g"), v("X"), v("X"))),
        exact_equal("XY = X + aux", lambda: v("XY"), lambda: v("X") + offset("aux")),
        exact_equal("P = (lambda - 1) X - aux", lambda: v("P"),
                    lambda: v("g") + offset("X").scale(lam() - 1) - offset("aux")),
        exact_equal("scaled = lambda X", lambda: v("scaled"), lambda: v("g") + offset("X").scale(lam())),
        exact_zero("<XY,P>_S = 0", lambda: parseval(v("g"), v("XY"), v("P"))),
        interval_positive(ctx, "lambda - 1 > 0", lambda: lam() - 1),
        logical("premises are Monotone(aux, X) and Monotone(P, XY)", premises),
        _bound_from_premises(ctx, node),
        _concludes(node, lambda: Conclusion.bound(node.role("scaled"), node.role("X"))),
    ]


def _case_split(ctx: CheckContext, node: DerivationNode) -> List[Check]:
    def v(name: str) -> Vector3:
        return ctx.role(node, name)

    alpha = lambda: node.scalar("alpha")  # noqa: E731
    return [
        exact_zero("<g,g> = 1", lambda: norm2(v("g")) - 1),
        exact_zero("<y,g> = 0", lambda: inner(v("y"), v("g"))),
        exact_nonzero("<y,y> != 0", lambda: norm2(v("y"))),
        exact_zero("alpha <y,y> = 1", lambda: alpha() * norm2(v("y")) - 1),
        exact_equal("X = g + y", lambda: v("X"), lambda: v("g") + v("y")),
        exact_equal("Xa = g - alpha y", lambda: v("Xa"), lambda: v("g") - v("y").scale(alpha())),
    ] + _sum_rule_block(ctx, node, "X", "Xa") + [
        exact_equal("w = g", lambda: v("w"), lambda: v("g")),
        _assumed(ctx, node),
        _concludes(node, lambda: Conclusion.relation((node.role("X"), node.role("Xa")), (), 1)),
    ]


def _chain_link(ctx: CheckContext, node: DerivationNode) -> List[Check]:
    steps = positive_integer(node, "n")
    rotation = positive_integer(node, "rotation")
    scale = positive_integer(node, "scale")
    if not (steps and rotation and scale):
        raise DerivationStructureError(f"chain link {node.node_id} needs positive integer n, rotation and scale")
    c, s = ExactScalar.pair(rotation)
    c_scale, s_scale = ExactScalar.pair(scale)

    def v(name: str) -> Vector3:
        return ctx.role(node, name)

    def beta(a: str, b: str) -> ExactScalar:
        return parseval(v("g"), v(a), v(b))

    def scalar(name: str) -> ExactScalar:
        return node.scalar(name)

    def rotation_bound() -> Tuple[bool, str]:
        bound = ctx.bindings.rotations.get(rotation)
        ok = bound is not None and bound.cos_theta == scalar("cos_theta") and bound.steps == steps
        return ok, f"symbol table does not bind rotation {rotation} to this chain"

    def scale_bound() -> Tuple[bool, str]:
        bound = ctx.bindings.scales.get(scale)
        ok = bound is not None and bound.alpha == scalar("alpha")
        return ok, f"symbol table does not bind scale {scale} to this chain"

    def scale_premise() -> Tuple[bool, str]:
        if len(node.premises) != steps + 1:
            return False, f"expected a ScaleDown premise and {steps} Monotone steps"
        ok, detail = _premise_roles(ctx, node.premises[0], RuleKind.SCALE_DOWN,
                                    {"X": node.role("X"), "scaled": node.role("Y_0")})
        if not ok:
            return ok, detail
        premise = ctx.index[node.premises[0]]
        ok = premise.scalar("lambda") == 1 / c_scale ** 2 and premise.scalar("tangent") == s_scale / c_scale
        return ok, "ScaleDown premise does not use this chain's scale pair"

    checks = _in_s(ctx, node, ("X", "Y")) + [
        exact_equal("beta_x = <X,X>_S", lambda: scalar("beta_x"), lambda: beta("X", "X")),
        exact_equal("beta_y = <Y,Y>_S", lambda: scalar("beta_y"), lambda: beta("Y", "Y")),
        exact_equal("beta_xy = <X,Y>_S", lambda: scalar("beta_xy"), lambda: beta("X", "Y")),
        exact_nonzero("beta_x != 0", lambda: scalar("beta_x")),
        exact_equal("cos_theta = beta_xy/sqrt(beta_x beta_y)", lambda: scalar("cos_theta"),
                    lambda: scalar("beta_xy") / (scalar("beta_x") * scalar("beta_y")).sqrt()),
        exact_equal(f"alpha = sqrt(beta_y/beta_x) c{rotation}^{steps}", lambda: scalar("alpha"),
                    lambda: (scalar("beta_y") / scalar("beta_x")).sqrt() * c ** steps),
        logical(f"rotation {rotation} is bound to cos_theta in {steps} steps", rotation_bound),
        logical(f"scale {scale} is bound to alpha", scale_bound),
        logical("orientation is +1 or -1", lambda: (scalar("orientation") in (1, -1), "orientation must be +1 or -1")),
        exact_equal(f"Y_0 = X/c{scale}^2", lambda: v("Y_0"), lambda: v("g") + (v("X") - v("g")) / c_scale ** 2),
        logical("first premise is ScaleDown(X) onto Y_0", scale_premise),
    ]

    ratio = s / c
    for i in range(1, steps + 1):
        prev, cur = f"Y_{i - 1}", f"Y_{i}"

        def recurrence(prev=prev) -> Vector3:
            turned = cross(v("g"), v(prev) - v("g")).scale(scalar("orientation") * ratio)
            return v(prev) + turned

        def step_premise(i=i, prev=prev, cur=cur) -> Tuple[bool, str]:
            premise_id = node.premises[i] if i < len(node.premises) else None
            if premise_id is None:
                return False, f"missing Monotone premise for step {i}"
            ok, detail = _premise_roles(ctx, premise_id, RuleKind.MONOTONE,
                                        {"Y": node.role(prev), "sum": node.role(cur)})
            if not ok:
                return ok, detail
            step = ctx.vec(ctx.index[premise_id].role("X")) - (v("g") + v(cur) - v(prev))
            return step.is_zero(), f"step {i} premise does not add {cur} - {prev}"

        checks += [
            exact_equal(f"{cur} = {prev} + (s/c) J({prev})", lambda cur=cur: v(cur), recurrence),
            exact_zero(f"<{cur} - {prev},{prev}>_S = 0",
                       lambda cur=cur, prev=prev: parseval(v("g"), v(cur) - v(prev), v(prev))),
            exact_equal(f"<{prev},{prev}>_S = c^2 <{cur},{cur}>_S", lambda prev=prev: beta(prev, prev),
                        lambda cur=cur: c ** 2 * beta(cur, cur)),
            logical(f"step {i} is a Monotone premise", step_premise),
        ]

    checks += [
        interval_positive(ctx, "alpha - 1 > 0", lambda: scalar("alpha") - 1),
        interval_positive(ctx, f"1 - c{rotation}^2 > 0", lambda: 1 - c ** 2),
        interval_vanishing(ctx, f"Y_{steps} - Y vanishes", lambda: v(f"Y_{steps}") - v("Y")),
        _bound_from_premises(ctx, node),
        _concludes(node, lambda: Conclusion.bound(node.role("Y"), node.role("X"))),
    ]
    return checks


def _split_branches(ctx: CheckContext, split: DerivationNode,
                    accept: Callable[[Conclusion], bool]) -> Tuple[bool, str]:
    branches = ctx.derivation.branches_of(split.node_id)
    if len(branches) != 2:
        return False, f"{split.node_id} has {len(branches)} branches"
    for branch in branches:
        if branch.outcome is None or not accept(branch.outcome):
            return False, f"branch {branch.scope_id} claims the wrong outcome"
    return True, ""


def _lemma3_conclusion(ctx: CheckContext, node: DerivationNode) -> List[Check]:
    def v(name: str) -> Vector3:
        return ctx.role(node, name)

    def premises() -> Tuple[bool, str]:
        if len(node.premises) != 3:
            return False, "expected CaseSplit, SumRule and Scale premises"
        split_id, sum_id, scale_id = node.premises
        ok, detail = _premise_roles(ctx, split_id, RuleKind.CASE_SPLIT, {"g": node.role("g")})
        if ok:
            ok, detail = _premise_roles(ctx, scale_id, RuleKind.SCALE, {"x": node.role("y"), "y": node.role("y1")})
        if ok:
            ok, detail = _premise_roles(ctx, sum_id, RuleKind.SUM_RULE, {"g": node.role("g")})
        if ok and ctx.key(ctx.index[sum_id].role("w")) != ctx.key(node.role("y1")):
            return False, "SumRule premise does not combine to y1"
        if ok and ctx.index[split_id].scope != node.scope:
            return False, "CaseSplit premise lives in another scope"
        return ok, detail

    def branches() -> Tuple[bool, str]:
        split = ctx.index.get(node.premises[0]) if node.premises else None
        if split is None:
            return False, "no CaseSplit premise"
        target = ctx.key(node.role("y1"))

        def accept(outcome: Conclusion) -> bool:
            if outcome.kind == ConclusionKind.CONTRADICTION:
                return True
            return (outcome.kind == ConclusionKind.FACT and outcome.fact.value == 0
                    and ctx.key(outcome.fact.vector_id) == target)

        return _split_branches(ctx, split, accept)

    return [
        exact_zero("<g,g> = 1", lambda: norm2(v("g")) - 1),
        exact_nonzero("<y,g> != 0", lambda: inner(v("y"), v("g"))),
        exact_equal("y1 = y/<y,g>", lambda: v("y1"), lambda: v("y") / inner(v("y"), v("g"))),
        exact_nonzero("y1 != g", lambda: v("y1") - v("g")),
        logical("premises are CaseSplit, SumRule onto y1 and Scale(y, y1)", premises),
        logical("both branches conclude v(y1) = 0", branches),
        _concludes(node, lambda: Conclusion.of_fact(node.role("y"), 0)),
    ]


def _theorem_contradiction(ctx: CheckContext, node: DerivationNode) -> List[Check]:
    def premises() -> Tuple[bool, str]:
        if len(node.premises) != 1:
            return False, "expected a single CaseSplit premise"
        split = ctx.index.get(node.premises[0])
        if split is None or split.kind != RuleKind.CASE_SPLIT:
            return False, "premise is not a CaseSplit"
        if split.scope != node.scope:
            return False, "CaseSplit premise lives in another scope"
        return _split_branches(ctx, split, lambda outcome: outcome.kind == ConclusionKind.CONTRADICTION)

    return [
        logical("both branches of the CaseSplit premise are contradictions", premises),
        _concludes(node, Conclusion.contradiction),
    ]


_CONDITIONS: Dict[RuleKind, Callable[[CheckContext, DerivationNode], List[Check]]] = {
    RuleKind.ASSUMPTION: _assumption,
    RuleKind.TRIPLE_SUM: _triple_sum,
    RuleKind.ORTH_FORCE: _orth_force,
    RuleKind.SCALE: _scale,
    RuleKind.SUM_RULE: _sum_rule,
    RuleKind.MONOTONE: _monotone,
    RuleKind.SCALE_DOWN: _scale_down,
    RuleKind.CASE_SPLIT: _case_split,
    RuleKind.CHAIN_LINK: _chain_link,
    RuleKind.LEMMA3_CONCLUSION: _lemma3_conclusion,
    RuleKind.THEOREM_CONTRADICTION: _theorem_contradiction,
}


def conditions_for(ctx: CheckContext, node: DerivationNode) -> List[Check]:
    """Side conditions of a node, regenerated from its kind, roles and scalars"""
    return _CONDITIONS[node.kind](ctx, node)
