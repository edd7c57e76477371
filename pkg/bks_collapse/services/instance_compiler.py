"""
🧱 BKS COLLAPSE - INSTANCE COMPILER
Expands verified derivations into a finite set of projective points and orthogonal
triples: the branch-free instance the coloring oracle audits.
"""

import asyncio
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from ..algebra.geometry import Frame, Vector3, pairwise_orthogonal
from ..algebra.intervals import SymbolBindings, is_certified_nonzero
from ..config import PrecisionConfig
from ..errors import GeometryError, UnverifiedDerivationError
from .coloring_oracle import ColoringMode, ColoringProblem
from .collapse_pipeline import theorem_pipeline
from .derivation import Derivation, DerivationNode, RuleKind
from .derivation_verifier import verify_derivation
from .rule_checks import CheckContext

logger = logging.getLogger(__name__)

FRAME_ORIGIN = "frame"

# Role names of the triples each rule kind expands into
_BLOCK = (("X", "Y", "u"), ("w", "Z", "u"), ("Z", "g", "m"))
_EXPANSIONS: Dict[RuleKind, Tuple[Tuple[str, str, str], ...]] = {
    RuleKind.SUM_RULE: _BLOCK,
    RuleKind.MONOTONE: (("W", "sum", "u"), ("w", "Z", "u"), ("Z", "g", "m")),
    RuleKind.CASE_SPLIT: (("X", "Xa", "u"), ("w", "Z", "u"), ("Z", "g", "m")),
    RuleKind.ORTH_FORCE: (("x", "y", "u"),),
    RuleKind.TRIPLE_SUM: (("a", "b", "c"),),
}

PointKey = Tuple[str, ...]


@dataclass
class ContextPoint:
    key: PointKey
    representative: str
    members: List[str] = field(default_factory=list)


@dataclass
class ContextTriple:
    points: Tuple[int, int, int]
    vectors: Tuple[str, str, str]
    provenance: List[str] = field(default_factory=list)


@dataclass
class ContextSet:
    """Projective points and the orthogonal triples between them"""

    vectors: Dict[str, Vector3] = field(default_factory=dict)
    points: List[ContextPoint] = field(default_factory=list)
    triples: List[ContextTriple] = field(default_factory=list)
    symbols: SymbolBindings = field(default_factory=SymbolBindings)

    @property
    def counts(self) -> Tuple[int, int]:
        return len(self.points), len(self.triples)

    def point_of(self, vector_id: str) -> int:
        for index, point in enumerate(self.points):
            if vector_id in point.members:
                return index
        raise KeyError(vector_id)

    def index_of(self, vector: Vector3) -> Optional[int]:
        """Point projectively equal to vector, if the instance has one"""
        key = vector.projective_key
        return next((i for i, point in enumerate(self.points) if point.key == key), None)

    def check_triples(self) -> List[str]:
        """Problems found by re-checking every triple exactly; empty when the instance is sound"""
        problems = []
        for triple in self.triples:
            try:
                vectors = [self.vectors[vid] for vid in triple.vectors]
            except KeyError as e:
                problems.append(f"triple {triple.vectors} names unknown vector {e.args[0]!r}")
                continue
            if any(v.is_zero() for v in vectors):
                problems.append(f"triple {triple.vectors} contains the zero vector")
            elif not pairwise_orthogonal(vectors):
                problems.append(f"triple {triple.vectors} is not pairwise orthogonal")
            owners = tuple(sorted(self.point_of(vid) for vid in triple.vectors))
            if owners != triple.points:
                problems.append(f"triple {triple.vectors} sits on points {owners}, not {triple.points}")
        return problems

    def restrict(self, prefix: str) -> "ContextSet":
        """Sub-instance of the triples produced by nodes of one derivation"""
        builder = ContextSetBuilder(self.symbols)
        tag = f"{prefix}:"
        for triple in self.triples:
            if not any(origin.startswith(tag) for origin in triple.provenance):
                continue
            for vid in triple.vectors:
                builder.add_vector(vid, self.vectors[vid], self.points[self.point_of(vid)].key)
            for origin in triple.provenance:
                builder.add_triple(triple.vectors, origin)
        return builder.context

    def to_problem(self, mode: ColoringMode = ColoringMode.BACKTRACKING) -> ColoringProblem:
        return ColoringProblem(len(self.points), [t.points for t in self.triples], mode,
                               [p.representative for p in self.points])


class ContextSetBuilder:
    """Adds vectors and triples with projective deduplication"""

    def __init__(self, symbols: Optional[SymbolBindings] = None, cfg: Optional[PrecisionConfig] = None):
        self.context = ContextSet(symbols=symbols if symbols is not None else SymbolBindings())
        self.cfg = cfg or PrecisionConfig()
        self._by_key: Dict[PointKey, int] = {}
        self._by_member: Dict[str, int] = {}
        self._by_points: Dict[Tuple[int, int, int], int] = {}

    def add_vector(self, vector_id: str, vector: Vector3, key: Optional[PointKey] = None) -> int:
        if vector_id in self._by_member:
            return self._by_member[vector_id]
        if vector.is_zero():
            raise GeometryError(f"vector {vector_id} is zero and has no point")
        if vector.symbols and not is_certified_nonzero(vector.coords, self.context.symbols, self.cfg):
            raise GeometryError(f"vector {vector_id} is not certified nonzero at the bound symbol values")
        key = key or vector.projective_key
        if key not in self._by_key:
            self._by_key[key] = len(self.context.points)
            self.context.points.append(ContextPoint(key, vector_id))
        index = self._by_key[key]
        self.context.points[index].members.append(vector_id)
        self.context.vectors[vector_id] = vector
        self._by_member[vector_id] = index
        return index

    def add_triple(self, vector_ids: Sequence[str], origin: str) -> int:
        points = tuple(sorted(self._by_member[vid] for vid in vector_ids))
        if len(set(points)) != 3:
            raise GeometryError(f"triple {tuple(vector_ids)} from {origin} repeats a point")
        vectors = [self.context.vectors[vid] for vid in vector_ids]
        if not pairwise_orthogonal(vectors):
            raise GeometryError(f"triple {tuple(vector_ids)} from {origin} is not pairwise orthogonal")
        if points not in self._by_points:
            self._by_points[points] = len(self.context.triples)
            self.context.triples.append(ContextTriple(points, tuple(vector_ids)))
        index = self._by_points[points]
        provenance = self.context.triples[index].provenance
        if origin not in provenance:
            provenance.append(origin)
        return index

    def add_frame(self, frame: Frame) -> int:
        ids = tuple(f"{FRAME_ORIGIN}:e{k}" for k in (1, 2, 3))
        for vid, vector in zip(ids, frame.vectors):
            self.add_vector(vid, vector)
        return self.add_triple(ids, FRAME_ORIGIN)

    def add_derivation(self, d: Derivation) -> None:
        if not d.verified:
            raise UnverifiedDerivationError(f"derivation {d.name} has not passed verification")
        self.context.symbols.merge(d.symbols)
        ctx = CheckContext(d, self.cfg)
        for node in d.nodes:
            for roles in _EXPANSIONS.get(node.kind, ()):
                if node.kind == RuleKind.MONOTONE and "W" not in node.roles:
                    continue
                self._add_node_triple(ctx, node, roles)

    def _add_node_triple(self, ctx: CheckContext, node: DerivationNode, roles: Tuple[str, str, str]) -> None:
        ids = tuple(node.role(name) for name in roles)
        for vid in ids:
            vector = ctx.vec(vid)
            if vector.is_zero():
                raise GeometryError(f"{node.node_id} expands into the zero vector {vid}")
            self.add_vector(vid, vector, ctx.key(vid))
        self.add_triple(ids, node.node_id)


def expand_to_triples(d: Derivation, cfg: Optional[PrecisionConfig] = None) -> ContextSet:
    """Branch-free material of one verified derivation"""
    builder = ContextSetBuilder(cfg=cfg)
    builder.add_derivation(d)
    return builder.context


def compile_instance(derivations: Iterable[Derivation], frame: Optional[Frame] = None,
                     cfg: Optional[PrecisionConfig] = None) -> ContextSet:
    """Union of the derivations' material, plus the frame's own triple when given"""
    builder = ContextSetBuilder(cfg=cfg)
    if frame is not None:
        builder.add_frame(frame)
    for d in derivations:
        builder.add_derivation(d)
    points, triples = builder.context.counts
    logger.info(f"🧱 Instance compiled: {points} points, {triples} triples")
    return builder.context


def merge_context_sets(sets: Iterable[ContextSet], cfg: Optional[PrecisionConfig] = None) -> ContextSet:
    builder = ContextSetBuilder(cfg=cfg)
    for context in sets:
        builder.context.symbols.merge(context.symbols)
        for triple in context.triples:
            for vid in triple.vectors:
                builder.add_vector(vid, context.vectors[vid], context.points[context.point_of(vid)].key)
            for origin in triple.provenance:
                builder.add_triple(triple.vectors, origin)
    return builder.context


def build_verified_seed(frame: Frame, seed_axis: int, target: Optional[Vector3] = None,
                        cfg: Optional[PrecisionConfig] = None) -> Derivation:
    d = theorem_pipeline(frame, seed_axis, target, cfg)
    report = verify_derivation(d, cfg)
    if not report.passed:
        failure = report.first_failure
        where = f" at {failure.node_id} ({failure.kind})" if failure else ""
        raise UnverifiedDerivationError(f"seed {seed_axis} derivation fails verification{where}")
    return d


def assemble_instance(frame: Frame, target: Optional[Vector3] = None, cfg: Optional[PrecisionConfig] = None,
                      seed_axes: Sequence[int] = (1, 2, 3)) -> Tuple[Dict[int, Derivation], ContextSet]:
    """One verified derivation per seed axis and the union instance with the frame triple"""
    derivations = {axis: build_verified_seed(frame, axis, target, cfg) for axis in seed_axes}
    return derivations, compile_instance(derivations.values(), frame, cfg)


class InstanceAssembler:
    """Async front end: seeds are built off the event loop, then merged in axis order"""

    def __init__(self):
        self.is_active = False
        self._executor: Optional[ThreadPoolExecutor] = None
        self.instances_built = 0

    async def initialize(self):
        try:
            logger.info("🧱 Initializing Instance Assembler...")
            # mpmath.iv precision is process-wide, so seeds run one at a time
            self._executor = ThreadPoolExecutor(max_workers=1, thread_name_prefix="bks-seed")
            self.is_active = True
            logger.info("✅ Instance Assembler initialized successfully")
        except Exception as e:
            logger.error(f"❌ Error initializing Instance Assembler: {e}")
            raise

    async def build_seed(self, frame: Frame, seed_axis: int, target: Optional[Vector3] = None,
                         cfg: Optional[PrecisionConfig] = None) -> Derivation:
        if not self.is_active:
            await self.initialize()
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(self._executor, build_verified_seed, frame, seed_axis, target, cfg)

    async def assemble(self, frame: Frame, target: Optional[Vector3] = None, cfg: Optional[PrecisionConfig] = None,
                       seed_axes: Sequence[int] = (1, 2, 3)) -> Tuple[Dict[int, Derivation], ContextSet]:
        results = await asyncio.gather(*(self.build_seed(frame, axis, target, cfg) for axis in seed_axes))
        derivations = dict(zip(seed_axes, results))
        instance = compile_instance((derivations[axis] for axis in sorted(derivations)), frame, cfg)
        self.instances_built += 1
        return derivations, instance

    async def shutdown(self):
        try:
            logger.info("🛑 Shutting down Instance Assembler...")
            if self._executor is not None:
                self._executor.shutdown(wait=True)
                self._executor = None
            self.is_active = False
        except Exception as e:
            logger.error(f"❌ Error shutting down Instance Assembler: {e}")


# Global instance assembler
instance_assembler = InstanceAssembler()
