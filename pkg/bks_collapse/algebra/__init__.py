"""
BKS Collapse - Algebra Package
Exact scalars, certified intervals and the geometry of M and S(g)
"""

from .scalars import ExactScalar, is_zero
from .intervals import IntervalValue, Sign, SymbolBindings, certify_sign, eval_interval
from .geometry import (
    Form,
    Frame,
    SVector,
    Vector3,
    complete_triple,
    cross,
    inner,
    projectively_equal,
    s_inner,
    w_combine,
)

__all__ = [
    'ExactScalar',
    'is_zero',
    'IntervalValue',
    'Sign',
    'SymbolBindings',
    'certify_sign',
    'eval_interval',
    'Form',
    'Frame',
    'SVector',
    'Vector3',
    'complete_triple',
    'cross',
    'inner',
    'projectively_equal',
    's_inner',
    'w_combine',
]
