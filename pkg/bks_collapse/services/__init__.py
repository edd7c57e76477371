"""
BKS Collapse - Services Package
Derivations, rule checking, chains, pipelines, instance compilation, coloring and certificates
"""

from .derivation import Derivation, DerivationBuilder, DerivationNode, RuleKind
from .rule_engine import RuleEngine
from .derivation_verifier import VerificationReport, verify_derivation
from .cosine_chain import ChainParams, build_chain, chain_params, conclude_lemma2
from .collapse_pipeline import lemma3_pipeline, theorem_pipeline
from .coloring_oracle import ColoringMode, ColoringProblem, ColoringResult, check_coloring, check_consistency
from .instance_compiler import ContextSet, assemble_instance, expand_to_triples, instance_assembler
from .certificate_io import Certificate, parse, serialize, verify_certificate

__all__ = [
    'Derivation',
    'DerivationBuilder',
    'DerivationNode',
    'RuleKind',
    'RuleEngine',
    'VerificationReport',
    'verify_derivation',
    'ChainParams',
    'build_chain',
    'chain_params',
    'conclude_lemma2',
    'lemma3_pipeline',
    'theorem_pipeline',
    'ColoringMode',
    'ColoringProblem',
    'ColoringResult',
    'check_coloring',
    'check_consistency',
    'ContextSet',
    'assemble_instance',
    'expand_to_triples',
    'instance_assembler',
    'Certificate',
    'parse',
    'serialize',
    'verify_certificate',
]
