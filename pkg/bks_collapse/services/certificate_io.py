"""
📜 BKS COLLAPSE - CERTIFICATE I/O
Canonical JSON certificates: frame, symbol table, vector table, derivations and the
compiled instance, sealed with a sha256 digest of the canonical body.
"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Set, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..algebra.geometry import Frame, Vector3
from ..algebra.intervals import SymbolBindings
from ..algebra.scalars import PAIR_SYMBOL, ExactScalar
from ..config import GeneratorSettings, PrecisionConfig
from ..errors import (
    CertificateStructureError,
    CertificateSyntaxError,
    CollapseError,
    UnknownVersionError,
    UnresolvedIdError,
)
from .derivation import (
    BranchScope,
    Conclusion,
    ConclusionKind,
    ConditionTag,
    Derivation,
    DerivationNode,
    RuleKind,
    SideCondition,
)
from .derivation_verifier import VerificationReport, verify_derivation
from .instance_compiler import ContextPoint, ContextSet, ContextTriple, compile_instance

logger = logging.getLogger(__name__)

FORMAT_VERSION = "bks-collapse/1"
GENERATOR = "bks-collapse"

ScalarTriple = List[str]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RotationModel(StrictModel):
    index: int = Field(ge=1)
    cos_theta: str
    steps: int = Field(ge=1)


class ScaleModel(StrictModel):
    index: int = Field(ge=1)
    alpha: str


class HeaderModel(StrictModel):
    format_version: str
    sqrt_tower: List[int] = Field(default_factory=list)
    rotations: List[RotationModel] = Field(default_factory=list)
    scales: List[ScaleModel] = Field(default_factory=list)
    digest: str = ""


class ConclusionModel(StrictModel):
    kind: ConclusionKind
    vector: Optional[str] = None
    value: Optional[int] = None
    lhs: List[str] = Field(default_factory=list)
    rhs: List[str] = Field(default_factory=list)
    constant: int = 0
    lower: Optional[str] = None
    upper: Optional[str] = None


class SideConditionModel(StrictModel):
    label: str
    tag: ConditionTag


class NodeModel(StrictModel):
    id: str
    kind: RuleKind
    scope: str
    premises: List[str] = Field(default_factory=list)
    roles: Dict[str, str] = Field(default_factory=dict)
    scalars: Dict[str, str] = Field(default_factory=dict)
    conclusion: ConclusionModel
    side_conditions: List[SideConditionModel] = Field(default_factory=list)


class ScopeModel(StrictModel):
    id: str
    parent: str
    split: str
    index: int
    assignment: Dict[str, int]
    outcome: Optional[ConclusionModel] = None


class DerivationModel(StrictModel):
    name: str
    roots: List[str]
    nodes: List[NodeModel]
    scopes: List[ScopeModel] = Field(default_factory=list)


class PointModel(StrictModel):
    representative: str
    members: List[str]


class TripleModel(StrictModel):
    points: List[int] = Field(min_length=3, max_length=3)
    vectors: List[str] = Field(min_length=3, max_length=3)
    provenance: List[str] = Field(default_factory=list)


class ContextSetModel(StrictModel):
    points: List[PointModel]
    triples: List[TripleModel]


class MetadataModel(StrictModel):
    generator: str = GENERATOR
    settings: GeneratorSettings
    points: int = 0
    triples: int = 0


class Certificate(StrictModel):
    header: HeaderModel
    frame: List[ScalarTriple] = Field(min_length=3, max_length=3)
    vectors: Dict[str, ScalarTriple]
    derivations: List[DerivationModel]
    context: ContextSetModel
    metadata: MetadataModel


@dataclass
class CertificateContents:
    """A certificate resolved into live objects"""

    frame: Frame
    derivations: List[Derivation]
    context: ContextSet
    settings: GeneratorSettings


# Building

def _text(vector: Vector3) -> ScalarTriple:
    return [str(c) for c in vector.coords]


def _conclusion_model(c: Conclusion) -> ConclusionModel:
    return ConclusionModel(
        kind=c.kind,
        vector=c.fact.vector_id if c.fact else None,
        value=c.fact.value if c.fact else None,
        lhs=list(c.lhs), rhs=list(c.rhs), constant=c.constant,
        lower=c.lower, upper=c.upper,
    )


def _derivation_model(d: Derivation) -> DerivationModel:
    nodes = [NodeModel(
        id=node.node_id, kind=node.kind, scope=node.scope, premises=list(node.premises),
        roles=dict(node.roles), scalars={name: str(value) for name, value in node.scalars.items()},
        conclusion=_conclusion_model(node.conclusion),
        side_conditions=[SideConditionModel(label=c.label, tag=c.tag) for c in node.side_conditions],
    ) for node in d.nodes]
    scopes = [ScopeModel(
        id=scope.scope_id, parent=scope.parent, split=scope.split_node, index=scope.index,
        assignment=dict(scope.assignment),
        outcome=_conclusion_model(scope.outcome) if scope.outcome else None,
    ) for _, scope in sorted(d.scopes.items())]
    return DerivationModel(name=d.name, roots=list(d.roots), nodes=nodes, scopes=scopes)


def _all_scalars(vectors: Dict[str, Vector3], derivations: List[Derivation]) -> List[ExactScalar]:
    scalars = [c for vector in vectors.values() for c in vector.coords]
    for d in derivations:
        scalars += [value for node in d.nodes for value in node.scalars.values()]
    return scalars


def build_certificate(frame: Frame, derivations: List[Derivation], context: ContextSet,
                      settings: Optional[GeneratorSettings] = None) -> Certificate:
    settings = settings or GeneratorSettings()
    vectors: Dict[str, Vector3] = {}
    symbols = SymbolBindings()
    for d in derivations:
        vectors.update(d.vectors)
        symbols.merge(d.symbols)
    vectors.update(context.vectors)

    tower = sorted(set().union(*(s.sqrt_primes for s in _all_scalars(vectors, derivations))))
    header = HeaderModel(
        format_version=FORMAT_VERSION,
        sqrt_tower=tower,
        rotations=[RotationModel(index=i, cos_theta=str(r.cos_theta), steps=r.steps)
                   for i, r in sorted(symbols.rotations.items())],
        scales=[ScaleModel(index=i, alpha=str(s.alpha)) for i, s in sorted(symbols.scales.items())],
    )
    cert = Certificate(
        header=header,
        frame=[_text(v) for v in frame.vectors],
        vectors={vid: _text(v) for vid, v in vectors.items()},
        derivations=[_derivation_model(d) for d in derivations],
        context=ContextSetModel(
            points=[PointModel(representative=p.representative, members=list(p.members)) for p in context.points],
            triples=[TripleModel(points=list(t.points), vectors=list(t.vectors), provenance=list(t.provenance))
                     for t in context.triples],
        ),
        metadata=MetadataModel(settings=settings, points=len(context.points), triples=len(context.triples)),
    )
    return seal(cert)


# Text form

def _dump(data: Dict[str, Any]) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def body_digest(cert: Certificate) -> str:
    """sha256 of the canonical text with an empty digest field"""
    data = cert.model_dump(mode="json")
    data["header"]["digest"] = ""
    return hashlib.sha256(_dump(data).encode("utf-8")).hexdigest()


def seal(cert: Certificate) -> Certificate:
    header = cert.header.model_copy(update={"digest": body_digest(cert)})
    return cert.model_copy(update={"header": header})


def serialize(cert: Certificate) -> str:
    return _dump(cert.model_dump(mode="json"))


def parse(text: str) -> Certificate:
    """Certificate from its text; every id and scalar is resolved before returning"""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise CertificateSyntaxError(e.msg, e.lineno, e.colno) from None
    if not isinstance(data, dict):
        raise CertificateStructureError("a certificate is a JSON object")
    header = data.get("header")
    version = header.get("format_version") if isinstance(header, dict) else None
    if version != FORMAT_VERSION:
        raise UnknownVersionError(f"unknown certificate version {version!r}")
    try:
        cert = Certificate.model_validate(data)
    except ValidationError as e:
        raise CertificateStructureError(str(e)) from None
    unpack(cert)
    return cert


# Resolution

def _bindings(header: HeaderModel) -> SymbolBindings:
    symbols = SymbolBindings()
    for rotation in header.rotations:
        symbols.bind_rotation(rotation.index, ExactScalar.parse(rotation.cos_theta), rotation.steps)
    for scale in header.scales:
        symbols.bind_scale(scale.index, ExactScalar.parse(scale.alpha))
    return symbols


class _Resolver:
    """Checks that every referenced id and symbol is declared"""

    def __init__(self, cert: Certificate):
        self.cert = cert
        self.tower = set(cert.header.sqrt_tower)
        self.indices = {r.index for r in cert.header.rotations} | {s.index for s in cert.header.scales}

    def scalar(self, text: str, where: str) -> ExactScalar:
        value = ExactScalar.parse(text)
        for prime in value.sqrt_primes:
            if prime not in self.tower:
                raise UnresolvedIdError(f"sqrt({prime})", f"{where} (not in the square-root tower)")
        for symbol in value.chain_symbols:
            if int(PAIR_SYMBOL.match(symbol).group(2)) not in self.indices:
                raise UnresolvedIdError(symbol, f"{where} (not in the symbol table)")
        return value

    def vector(self, texts: ScalarTriple, where: str) -> Vector3:
        if len(texts) != 3:
            raise CertificateStructureError(f"{where} needs three coordinates")
        return Vector3(tuple(self.scalar(t, where) for t in texts))

    def vector_id(self, vector_id: str, vectors: Dict[str, Vector3], where: str) -> str:
        if vector_id not in vectors:
            raise UnresolvedIdError(vector_id, where)
        return vector_id

    def conclusion(self, model: ConclusionModel, vectors: Dict[str, Vector3], where: str) -> Conclusion:
        def ref(vector_id: Optional[str]) -> str:
            if vector_id is None:
                raise CertificateStructureError(f"{where}: {model.kind.value} conclusion is missing a vector")
            return self.vector_id(vector_id, vectors, where)

        try:
            if model.kind == ConclusionKind.FACT:
                if model.value is None:
                    raise CertificateStructureError(f"{where}: fact without a value")
                return Conclusion.of_fact(ref(model.vector), model.value)
            if model.kind == ConclusionKind.RELATION:
                return Conclusion.relation([ref(v) for v in model.lhs], [ref(v) for v in model.rhs], model.constant)
            if model.kind == ConclusionKind.BOUND:
                return Conclusion.bound(ref(model.lower), ref(model.upper))
            return Conclusion.contradiction()
        except CertificateStructureError:
            raise
        except CollapseError as e:
            raise CertificateStructureError(f"{where}: {e}") from e


def _derivation(resolver: _Resolver, model: DerivationModel, vectors: Dict[str, Vector3]) -> Derivation:
    prefix = f"{model.name}:"
    d = Derivation(name=model.name, symbols=_bindings(resolver.cert.header))
    d.vectors = {vid: v for vid, v in vectors.items() if vid.startswith(prefix)}
    node_ids: Set[str] = {node.id for node in model.nodes}
    scope_ids: Set[str] = {scope.id for scope in model.scopes}

    for node in model.nodes:
        where = f"node {node.id}"
        for premise in node.premises:
            if premise not in node_ids:
                raise UnresolvedIdError(premise, where)
        if node.scope != "root" and node.scope not in scope_ids:
            raise UnresolvedIdError(node.scope, where)
        roles = {role: resolver.vector_id(vid, vectors, where) for role, vid in node.roles.items()}
        d.nodes.append(DerivationNode(
            node_id=node.id, kind=node.kind, scope=node.scope, premises=list(node.premises), roles=roles,
            scalars={name: resolver.scalar(text, where) for name, text in node.scalars.items()},
            conclusion=resolver.conclusion(node.conclusion, vectors, where),
            side_conditions=[SideCondition(c.label, c.tag) for c in node.side_conditions],
        ))
    for root in model.roots:
        if root not in node_ids:
            raise UnresolvedIdError(root, f"roots of {model.name}")
    d.roots = list(model.roots)

    for scope in model.scopes:
        where = f"scope {scope.id}"
        if scope.split not in node_ids:
            raise UnresolvedIdError(scope.split, where)
        if scope.parent != "root" and scope.parent not in scope_ids:
            raise UnresolvedIdError(scope.parent, where)
        for vid in scope.assignment:
            resolver.vector_id(vid, vectors, where)
        d.scopes[scope.id] = BranchScope(
            scope_id=scope.id, parent=scope.parent, split_node=scope.split, index=scope.index,
            assignment=dict(scope.assignment),
            outcome=resolver.conclusion(scope.outcome, vectors, where) if scope.outcome else None,
        )
    return d


def _context(resolver: _Resolver, model: ContextSetModel, vectors: Dict[str, Vector3],
             symbols: SymbolBindings) -> ContextSet:
    context = ContextSet(symbols=symbols)
    members: Dict[str, int] = {}
    for index, point in enumerate(model.points):
        where = f"context point {index}"
        if point.representative not in point.members:
            raise CertificateStructureError(f"{where}: representative is not a member")
        for vid in point.members:
            resolver.vector_id(vid, vectors, where)
            if vid in members:
                raise CertificateStructureError(f"vector {vid} belongs to two context points")
            members[vid] = index
            context.vectors[vid] = vectors[vid]
        representative = vectors[point.representative]
        if representative.is_zero():
            raise CertificateStructureError(f"{where}: the zero vector is not a point")
        context.points.append(ContextPoint(representative.projective_key, point.representative, list(point.members)))
    for index, triple in enumerate(model.triples):
        where = f"context triple {index}"
        for vid in triple.vectors:
            if vid not in members:
                raise UnresolvedIdError(vid, where)
        if any(not 0 <= p < len(model.points) for p in triple.points):
            raise UnresolvedIdError(str(triple.points), where)
        context.triples.append(ContextTriple(tuple(triple.points), tuple(triple.vectors), list(triple.provenance)))
    return context


def unpack(cert: Certificate) -> CertificateContents:
    resolver = _Resolver(cert)
    symbols = _bindings(cert.header)
    vectors = {vid: resolver.vector(texts, f"vector {vid}") for vid, texts in cert.vectors.items()}
    axes = [resolver.vector(texts, "frame") for texts in cert.frame]
    try:
        frame = Frame(*axes)
    except CollapseError as e:
        raise CertificateStructureError(f"frame: {e}") from e
    derivations = [_derivation(resolver, model, vectors) for model in cert.derivations]
    context = _context(resolver, cert.context, vectors, symbols)
    return CertificateContents(frame, derivations, context, cert.metadata.settings)


# Verification

@dataclass
class CertificateReport:
    passed: bool
    digest_ok: bool
    derivations: List[VerificationReport] = field(default_factory=list)
    triple_problems: List[str] = field(default_factory=list)
    instance_matches: bool = False
    counts: Tuple[int, int] = (0, 0)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def lines(self) -> List[str]:
        verdict = "PASS" if self.passed else "FAIL"
        out = [f"certificate: {verdict}",
               f"  digest: {'ok' if self.digest_ok else 'MISMATCH'}"]
        for report in self.derivations:
            out += ["  " + line for line in report.lines()]
        points, triples = self.counts
        out.append(f"  instance: {points} points, {triples} triples, "
                   f"{'matches' if self.instance_matches else 'DIFFERS FROM'} the derivations")
        out += [f"  FAIL {problem}" for problem in self.triple_problems]
        return out


def _instance_signature(context: ContextSet) -> Tuple:
    return ([tuple(p.members) for p in context.points],
            [(t.points, t.vectors, tuple(t.provenance)) for t in context.triples])


def verify_certificate(cert: Certificate, cfg: Optional[PrecisionConfig] = None) -> CertificateReport:
    """Digest, every derivation, every context triple and the instance-derivation match.

    The precision recorded in the metadata is never used here; checks run under cfg
    or the default PrecisionConfig.
    """
    cfg = cfg or PrecisionConfig()
    digest_ok = cert.header.digest == body_digest(cert)
    report = CertificateReport(passed=False, digest_ok=digest_ok)
    if not digest_ok:
        logger.warning("⚠️ Certificate digest mismatch")
        return report

    contents = unpack(cert)
    for d in contents.derivations:
        report.derivations.append(verify_derivation(d, cfg))
    report.counts = contents.context.counts
    report.triple_problems = contents.context.check_triples()
    if all(r.passed for r in report.derivations):
        try:
            rebuilt = compile_instance(contents.derivations, contents.frame, cfg)
            report.instance_matches = _instance_signature(rebuilt) == _instance_signature(contents.context)
        except CollapseError as e:
            report.triple_problems.append(f"instance does not compile: {e}")
    report.passed = (bool(report.derivations) and all(r.passed for r in report.derivations)
                     and not report.triple_problems and report.instance_matches)
    logger.info(f"📜 Certificate verification {'✅ passed' if report.passed else '❌ failed'}")
    return report
