"""
🔁 BKS COLLAPSE - VALUATION FACT PROPAGATION
0/1 unit propagation over the relations and bounds concluded by derivation nodes,
keyed by projective point.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Hashable, Iterable, List, Optional, Set, Tuple

from .derivation import ConclusionKind, Derivation, DerivationNode

logger = logging.getLogger(__name__)

Key = Hashable


@dataclass(frozen=True)
class LinearConstraint:
    """sum(coeff * v(key)) = constant, or <= constant when at_most, over 0/1 values"""

    terms: Tuple[Tuple[Key, int], ...]
    constant: int
    origin: str = ""
    at_most: bool = False


@dataclass
class PropagationResult:
    values: Dict[Key, int]
    conflict: bool
    steps: int
    reason: str = ""

    def value(self, key: Key) -> Optional[int]:
        return self.values.get(key)

    def forces(self, key: Key, value: int) -> bool:
        """Forced value, or anything at all once the facts are contradictory"""
        return self.conflict or self.values.get(key) == value


@dataclass
class FactPropagator:
    key_of: Callable[[str], Key]
    constraints: List[LinearConstraint] = field(default_factory=list)
    _watch: Dict[Key, List[int]] = field(default_factory=dict)

    def add_relation(self, lhs: Iterable[str], rhs: Iterable[str], constant: int = 0, origin: str = "") -> None:
        coeffs: Dict[Key, int] = {}
        for vid in lhs:
            key = self.key_of(vid)
            coeffs[key] = coeffs.get(key, 0) + 1
        for vid in rhs:
            key = self.key_of(vid)
            coeffs[key] = coeffs.get(key, 0) - 1
        terms = tuple((k, c) for k, c in coeffs.items() if c)
        self._add(LinearConstraint(terms, constant, origin))

    def add_bound(self, lower: str, upper: str, origin: str = "") -> None:
        lo, hi = self.key_of(lower), self.key_of(upper)
        if lo != hi:
            self._add(LinearConstraint(((lo, 1), (hi, -1)), 0, origin, at_most=True))

    def add_node(self, node: DerivationNode) -> None:
        conclusion = node.conclusion
        if conclusion.kind == ConclusionKind.RELATION:
            self.add_relation(conclusion.lhs, conclusion.rhs, conclusion.constant, node.node_id)
        elif conclusion.kind == ConclusionKind.BOUND:
            self.add_bound(conclusion.lower, conclusion.upper, node.node_id)

    def _add(self, constraint: LinearConstraint) -> None:
        index = len(self.constraints)
        self.constraints.append(constraint)
        for key, _ in constraint.terms:
            self._watch.setdefault(key, []).append(index)

    def run(self, facts: Iterable[Tuple[str, int]]) -> PropagationResult:
        """Fixpoint of unit propagation from the given (vector id, value) facts"""
        values: Dict[Key, int] = {}
        fresh: List[Key] = []

        def assign(key: Key, value: int, origin: str) -> Optional[str]:
            current = values.get(key)
            if current is None:
                values[key] = value
                fresh.append(key)
                return None
            if current != value:
                return f"{origin}: point forced to both 0 and 1"
            return None

        for vid, value in facts:
            problem = assign(self.key_of(vid), value, "fact")
            if problem:
                return PropagationResult(values, True, len(values), problem)

        pending: Set[int] = set(range(len(self.constraints)))
        while pending:
            index = pending.pop()
            problem = self._propagate(self.constraints[index], values, assign)
            if problem:
                return PropagationResult(values, True, len(values), problem)
            while fresh:
                pending.update(self._watch.get(fresh.pop(), ()))
        return PropagationResult(values, False, len(values))

    @staticmethod
    def _propagate(constraint: LinearConstraint, values: Dict[Key, int], assign) -> Optional[str]:
        fixed = sum(c * values[k] for k, c in constraint.terms if k in values)
        free = [(k, c) for k, c in constraint.terms if k not in values]
        low = fixed + sum(min(0, c) for _, c in free)
        high = fixed + sum(max(0, c) for _, c in free)

        def feasible(lo: int, hi: int) -> bool:
            if constraint.at_most:
                return lo <= constraint.constant
            return lo <= constraint.constant <= hi

        if not feasible(low, high):
            return f"{constraint.origin}: constraint cannot hold"
        for key, coeff in free:
            rest_low, rest_high = low - min(0, coeff), high - max(0, coeff)
            options = [value for value in (0, 1)
                       if feasible(rest_low + coeff * value, rest_high + coeff * value)]
            if not options:
                return f"{constraint.origin}: no value fits"
            if len(options) == 1:
                problem = assign(key, options[0], constraint.origin)
                if problem:
                    return problem
        return None


def relation_propagator(derivation: Derivation, key_of: Callable[[str], Key],
                        nodes: Optional[Iterable[DerivationNode]] = None) -> FactPropagator:
    propagator = FactPropagator(key_of)
    for node in (derivation.nodes if nodes is None else nodes):
        propagator.add_node(node)
    return propagator

