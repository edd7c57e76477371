"""
✅ BKS COLLAPSE - DERIVATION VERIFIER
Independent re-check of a derivation: structure first, then every node's regenerated
side conditions, then every branch outcome.
"""

import logging
from dataclasses import asdict, dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Any, Dict, List, Optional

from ..config import PrecisionConfig
from ..errors import CollapseError, DerivationStructureError, UndecidedSignError
from .derivation import ROOT_SCOPE, ConclusionKind, Derivation, DerivationNode, RuleKind
from .rule_checks import CheckContext, conditions_for, run_check

logger = logging.getLogger(__name__)


@dataclass
class ConditionReport:
    label: str
    tag: str
    passed: bool
    detail: str = ""
    residual: Optional[str] = None
    width: Optional[str] = None


@dataclass
class NodeReport:
    node_id: str
    kind: str
    scope: str
    passed: bool
    conclusion: str
    conditions: List[ConditionReport] = field(default_factory=list)
    problems: List[str] = field(default_factory=list)


@dataclass
class BranchReport:
    scope_id: str
    outcome: str
    passed: bool
    detail: str = ""


@dataclass
class VerificationReport:
    derivation: str
    passed: bool
    nodes: List[NodeReport] = field(default_factory=list)
    branches: List[BranchReport] = field(default_factory=list)

    @property
    def first_failure(self) -> Optional[NodeReport]:
        return next((node for node in self.nodes if not node.passed), None)

    @property
    def condition_count(self) -> int:
        return sum(len(node.conditions) for node in self.nodes)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def lines(self) -> List[str]:
        verdict = "PASS" if self.passed else "FAIL"
        out = [f"derivation {self.derivation}: {verdict} "
               f"({len(self.nodes)} nodes, {self.condition_count} conditions, {len(self.branches)} branches)"]
        for node in self.nodes:
            mark = "ok  " if node.passed else "FAIL"
            out.append(f"  {mark} {node.node_id} {node.kind} [{node.scope}] {node.conclusion}")
            for condition in node.conditions:
                if condition.tag == "interval" or not condition.passed:
                    state = "ok" if condition.passed else "FAIL"
                    width = f" width {condition.width}" if condition.width else ""
                    out.append(f"       {state} {condition.tag} {condition.label}{width} {condition.detail}".rstrip())
            for problem in node.problems:
                out.append(f"       FAIL {problem}")
        for branch in self.branches:
            mark = "ok  " if branch.passed else "FAIL"
            out.append(f"  {mark} branch {branch.scope_id} -> {branch.outcome} {branch.detail}".rstrip())
        return out


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise DerivationStructureError(message)


def check_structure(d: Derivation) -> None:
    """Raise DerivationStructureError on dangling ids, malformed scopes or cyclic dependencies"""
    index: Dict[str, DerivationNode] = {}
    for node in d.nodes:
        _require(node.node_id not in index, f"duplicate node id {node.node_id!r}")
        index[node.node_id] = node

    for node in d.nodes:
        for premise in node.premises:
            _require(premise in index, f"dangling premise {premise!r} of {node.node_id}")
        for vector_id in list(node.roles.values()) + list(node.conclusion.vector_ids):
            _require(vector_id in d.vectors, f"dangling vector id {vector_id!r} in {node.node_id}")
        _require(node.scope == ROOT_SCOPE or node.scope in d.scopes, f"unknown scope {node.scope!r}")
        d.scope_path(node.scope)
        if node.kind == RuleKind.ASSUMPTION:
            _require(node.node_id in d.roots, f"assumption {node.node_id} is not a root")

    for root in d.roots:
        _require(root in index and index[root].kind == RuleKind.ASSUMPTION, f"root {root!r} is not an assumption")

    for scope_id, scope in d.scopes.items():
        _require(scope.scope_id == scope_id, f"scope {scope_id!r} is filed under another id")
        split = index.get(scope.split_node)
        _require(split is not None and split.kind == RuleKind.CASE_SPLIT,
                 f"scope {scope_id!r} does not hang off a CaseSplit")
        _require(scope.parent == split.scope, f"scope {scope_id!r} does not open inside its split's scope")
        d.scope_path(scope_id)
        for vector_id in scope.assignment:
            _require(vector_id in d.vectors, f"dangling vector id {vector_id!r} in scope {scope_id}")
        if scope.outcome is not None:
            _require(scope.outcome.kind in (ConclusionKind.FACT, ConclusionKind.CONTRADICTION),
                     f"scope {scope_id!r} claims neither a fact nor a contradiction")
            for vector_id in scope.outcome.vector_ids:
                _require(vector_id in d.vectors, f"dangling vector id {vector_id!r} in scope {scope_id}")

    for node in d.nodes:
        if node.kind != RuleKind.CASE_SPLIT:
            continue
        branches = d.branches_of(node.node_id)
        _require([b.index for b in branches] == [1, 2], f"CaseSplit {node.node_id} needs branches 1 and 2")
        x, xa = node.role("X"), node.role("Xa")
        _require(branches[0].assignment == {x: 1, xa: 0}, f"branch 1 of {node.node_id} must assign X = 1, Xa = 0")
        _require(branches[1].assignment == {x: 0, xa: 1}, f"branch 2 of {node.node_id} must assign X = 0, Xa = 1")

    try:
        tuple(TopologicalSorter(d.dependencies()).static_order())
    except CycleError as e:
        raise DerivationStructureError(f"dependency cycle through {e.args[1]}") from None


def _verify_node(ctx: CheckContext, node: DerivationNode) -> NodeReport:
    report = NodeReport(node.node_id, node.kind.value, node.scope, True, node.conclusion.describe())
    try:
        checks = conditions_for(ctx, node)
    except UndecidedSignError:
        raise
    except CollapseError as e:
        report.passed = False
        report.problems.append(str(e))
        return report

    stored = [(c.label, c.tag) for c in node.side_conditions]
    expected = [(c.label, c.tag) for c in checks]
    if stored != expected:
        report.passed = False
        report.problems.append("stored side conditions differ from the rule's side conditions")

    for check in checks:
        outcome = run_check(check)
        report.conditions.append(ConditionReport(check.label, check.tag.value, outcome.passed, outcome.detail,
                                                 outcome.residual, outcome.width))
        if not outcome.passed:
            report.passed = False
    return report


def verify_derivation(d: Derivation, cfg: Optional[PrecisionConfig] = None) -> VerificationReport:
    """Check every node and branch; sets d.verified to the overall verdict"""
    cfg = cfg or PrecisionConfig()
    d.verified = False
    check_structure(d)
    ctx = CheckContext(d, cfg)

    report = VerificationReport(d.name, True)
    for node in d.nodes:
        node_report = _verify_node(ctx, node)
        report.nodes.append(node_report)
        if not node_report.passed:
            report.passed = False
            logger.debug(f"❌ {node.node_id} {node.kind.value} failed")

    for scope_id in sorted(d.scopes):
        scope = d.scopes[scope_id]
        try:
            ok, detail = ctx.outcome_holds(scope)
        except UndecidedSignError:
            raise
        except CollapseError as e:
            ok, detail = False, str(e)
        outcome = scope.outcome.describe() if scope.outcome else "none"
        report.branches.append(BranchReport(scope_id, outcome, ok, "" if ok else detail))
        if not ok:
            report.passed = False

    d.verified = report.passed
    verdict = "✅ passed" if report.passed else "❌ failed"
    logger.info(f"🔎 Verification of {d.name} {verdict}: {len(report.nodes)} nodes, {len(report.branches)} branches")
    return report
