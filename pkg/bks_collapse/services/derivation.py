"""
🧾 BKS COLLAPSE - DERIVATION MODEL
Valuation facts, rule nodes, branch scopes and the builder that interns vectors
and numbers nodes deterministically.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Set, Tuple

from ..algebra.geometry import Vector3
from ..algebra.intervals import SymbolBindings
from ..algebra.scalars import ExactScalar
from ..errors import DerivationStructureError

logger = logging.getLogger(__name__)

ROOT_SCOPE = "root"


class RuleKind(str, Enum):
    ASSUMPTION = "Assumption"
    TRIPLE_SUM = "TripleSum"
    ORTH_FORCE = "OrthForce"
    SCALE = "Scale"
    SUM_RULE = "SumRule"
    MONOTONE = "Monotone"
    SCALE_DOWN = "ScaleDown"
    CASE_SPLIT = "CaseSplit"
    CHAIN_LINK = "ChainLink"
    LEMMA3_CONCLUSION = "Lemma3Conclusion"
    THEOREM_CONTRADICTION = "TheoremContradiction"


class ConditionTag(str, Enum):
    EXACT = "exact"
    INTERVAL = "interval"


class ConclusionKind(str, Enum):
    FACT = "fact"
    RELATION = "relation"
    BOUND = "bound"
    CONTRADICTION = "contradiction"


@dataclass(frozen=True)
class ValFact:
    """v(vector) = value, a statement about the projector of the vector"""

    vector_id: str
    value: int

    def __post_init__(self):
        if self.value not in (0, 1):
            raise DerivationStructureError(f"valuation value must be 0 or 1, got {self.value}")


@dataclass(frozen=True)
class Conclusion:
    kind: ConclusionKind
    fact: Optional[ValFact] = None
    lhs: Tuple[str, ...] = ()
    rhs: Tuple[str, ...] = ()
    constant: int = 0
    lower: Optional[str] = None
    upper: Optional[str] = None

    @classmethod
    def of_fact(cls, vector_id: str, value: int) -> "Conclusion":
        return cls(ConclusionKind.FACT, fact=ValFact(vector_id, value))

    @classmethod
    def relation(cls, lhs: Iterable[str], rhs: Iterable[str] = (), constant: int = 0) -> "Conclusion":
        """sum of v over lhs - sum of v over rhs = constant"""
        return cls(ConclusionKind.RELATION, lhs=tuple(lhs), rhs=tuple(rhs), constant=constant)

    @classmethod
    def bound(cls, lower: str, upper: str) -> "Conclusion":
        """v(lower) <= v(upper)"""
        return cls(ConclusionKind.BOUND, lower=lower, upper=upper)

    @classmethod
    def contradiction(cls) -> "Conclusion":
        return cls(ConclusionKind.CONTRADICTION)

    @property
    def vector_ids(self) -> Tuple[str, ...]:
        ids = list(self.lhs) + list(self.rhs)
        if self.fact:
            ids.append(self.fact.vector_id)
        ids += [v for v in (self.lower, self.upper) if v]
        return tuple(ids)

    def describe(self) -> str:
        if self.kind == ConclusionKind.FACT:
            return f"v({self.fact.vector_id}) = {self.fact.value}"
        if self.kind == ConclusionKind.BOUND:
            return f"v({self.lower}) <= v({self.upper})"
        if self.kind == ConclusionKind.CONTRADICTION:
            return "contradiction"
        left = " + ".join(f"v({v})" for v in self.lhs) or "0"
        right = " + ".join(f"v({v})" for v in self.rhs)
        if self.constant:
            right = f"{right} + {self.constant}" if right else str(self.constant)
        return f"{left} = {right or '0'}"


@dataclass(frozen=True)
class SideCondition:
    label: str
    tag: ConditionTag


@dataclass
class DerivationNode:
    node_id: str
    kind: RuleKind
    scope: str
    premises: List[str]
    roles: Dict[str, str]
    scalars: Dict[str, ExactScalar]
    conclusion: Conclusion
    side_conditions: List[SideCondition] = field(default_factory=list)

    def role(self, name: str) -> str:
        try:
            return self.roles[name]
        except KeyError:
            raise DerivationStructureError(f"node {self.node_id} has no role {name!r}") from None

    def scalar(self, name: str) -> ExactScalar:
        try:
            return self.scalars[name]
        except KeyError:
            raise DerivationStructureError(f"node {self.node_id} has no scalar {name!r}") from None


@dataclass
class BranchScope:
    scope_id: str
    parent: str
    split_node: str
    index: int
    assignment: Dict[str, int]
    outcome: Optional[Conclusion] = None


@dataclass
class Derivation:
    name: str
    vectors: Dict[str, Vector3] = field(default_factory=dict)
    nodes: List[DerivationNode] = field(default_factory=list)
    scopes: Dict[str, BranchScope] = field(default_factory=dict)
    symbols: SymbolBindings = field(default_factory=SymbolBindings)
    roots: List[str] = field(default_factory=list)
    verified: bool = False

    def node(self, node_id: str) -> DerivationNode:
        for node in self.nodes:
            if node.node_id == node_id:
                return node
        raise DerivationStructureError(f"dangling node id {node_id!r}")

    def node_index(self) -> Dict[str, DerivationNode]:
        return {node.node_id: node for node in self.nodes}

    def vector(self, vector_id: str) -> Vector3:
        try:
            return self.vectors[vector_id]
        except KeyError:
            raise DerivationStructureError(f"dangling vector id {vector_id!r}") from None

    def branches_of(self, split_id: str) -> List[BranchScope]:
        return sorted((s for s in self.scopes.values() if s.split_node == split_id), key=lambda s: s.index)

    def scope_path(self, scope_id: str) -> List[BranchScope]:
        """Branch scopes from scope_id up to (excluding) the root"""
        path = []
        seen = set()
        while scope_id != ROOT_SCOPE:
            if scope_id in seen or scope_id not in self.scopes:
                raise DerivationStructureError(f"malformed scope chain at {scope_id!r}")
            seen.add(scope_id)
            scope = self.scopes[scope_id]
            path.append(scope)
            scope_id = scope.parent
        return path

    def dependencies(self) -> Dict[str, Set[str]]:
        """Premises of every node, plus every node inside a CaseSplit's branches for that split"""
        deps: Dict[str, Set[str]] = {node.node_id: set(node.premises) for node in self.nodes}
        for node in self.nodes:
            for scope in self.scope_path(node.scope):
                deps.setdefault(scope.split_node, set()).add(node.node_id)
        return deps


class DerivationBuilder:
    """Interns vectors and appends nodes for one derivation"""

    def __init__(self, name: str, symbol_base: int = 1):
        self.derivation = Derivation(name=name)
        self._by_key: Dict[Tuple[str, str, str], str] = {}
        self._next_vector = 0
        self._next_node = 0
        self._next_symbol = symbol_base
        self.scope = ROOT_SCOPE

    @property
    def name(self) -> str:
        return self.derivation.name

    def intern(self, vector: Vector3) -> str:
        key = vector.canonical
        if key not in self._by_key:
            vector_id = f"{self.name}:v{self._next_vector}"
            self._next_vector += 1
            self._by_key[key] = vector_id
            self.derivation.vectors[vector_id] = vector
        return self._by_key[key]

    def vector_id(self, vector: Vector3) -> Optional[str]:
        return self._by_key.get(vector.canonical)

    def allocate_symbol_index(self) -> int:
        index = self._next_symbol
        self._next_symbol += 1
        return index

    def add_node(self, kind: RuleKind, roles: Dict[str, Vector3], conclusion_roles: "ConclusionSpec",
                 premises: Iterable[str] = (), scalars: Optional[Dict[str, ExactScalar]] = None) -> DerivationNode:
        role_ids = {role: self.intern(vector) for role, vector in roles.items()}
        node = DerivationNode(
            node_id=f"{self.name}:n{self._next_node}",
            kind=kind,
            scope=self.scope,
            premises=list(premises),
            roles=role_ids,
            scalars=dict(scalars or {}),
            conclusion=conclusion_roles.resolve(role_ids),
        )
        self._next_node += 1
        self.derivation.nodes.append(node)
        if kind == RuleKind.ASSUMPTION:
            self.derivation.roots.append(node.node_id)
        logger.debug(f"🧩 {node.node_id} {kind.value}: {node.conclusion.describe()}")
        return node

    def discard(self, node: DerivationNode) -> None:
        """Drop the most recently added node after a failed rule application"""
        if not self.derivation.nodes or self.derivation.nodes[-1] is not node:
            raise DerivationStructureError(f"{node.node_id} is not the last node")
        self.derivation.nodes.pop()
        self._next_node -= 1
        if node.node_id in self.derivation.roots:
            self.derivation.roots.remove(node.node_id)

    def open_scope(self, split_node: DerivationNode, index: int, assignment: Dict[str, int]) -> BranchScope:
        scope = BranchScope(
            scope_id=f"{split_node.node_id}/b{index}",
            parent=self.scope,
            split_node=split_node.node_id,
            index=index,
            assignment=dict(assignment),
        )
        self.derivation.scopes[scope.scope_id] = scope
        return scope


@dataclass(frozen=True)
class ConclusionSpec:
    """A conclusion written with role names, resolved to vector ids when the node is added"""

    kind: ConclusionKind
    fact_role: Optional[str] = None
    value: int = 0
    lhs: Tuple[str, ...] = ()
    rhs: Tuple[str, ...] = ()
    constant: int = 0
    lower: Optional[str] = None
    upper: Optional[str] = None

    def resolve(self, ids: Dict[str, str]) -> Conclusion:
        if self.kind == ConclusionKind.FACT:
            return Conclusion.of_fact(ids[self.fact_role], self.value)
        if self.kind == ConclusionKind.RELATION:
            return Conclusion.relation((ids[r] for r in self.lhs), (ids[r] for r in self.rhs), self.constant)
        if self.kind == ConclusionKind.BOUND:
            return Conclusion.bound(ids[self.lower], ids[self.upper])
        return Conclusion.contradiction()


def fact_of(role: str, value: int) -> ConclusionSpec:
    return ConclusionSpec(ConclusionKind.FACT, fact_role=role, value=value)


def relation_of(lhs: Iterable[str], rhs: Iterable[str] = (), constant: int = 0) -> ConclusionSpec:
    return ConclusionSpec(ConclusionKind.RELATION, lhs=tuple(lhs), rhs=tuple(rhs), constant=constant)


def bound_of(lower: str, upper: str) -> ConclusionSpec:
    return ConclusionSpec(ConclusionKind.BOUND, lower=lower, upper=upper)


CONTRADICTION = ConclusionSpec(ConclusionKind.CONTRADICTION)
