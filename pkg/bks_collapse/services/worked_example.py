"""
📐 BKS COLLAPSE - WORKED CHAIN EXAMPLE
X = x - y and Y = x + y + sqrt(2) z in S(x): the angle, the powers [cos(theta/n)]^n,
the scale factor alpha(n) for each n up to the minimal one, and optionally the chain.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from ..algebra.geometry import Frame, SVector
from ..algebra.intervals import IntervalValue, eval_interval
from ..algebra.scalars import ExactScalar
from ..config import PrecisionConfig
from ..errors import ChainError
from .cosine_chain import Chain, ChainParams, MonotoneAdvice, ScaleDownAdvice, build_chain, chain_params

logger = logging.getLogger(__name__)


@dataclass
class ReproRow:
    label: str
    value: IntervalValue


@dataclass
class WorkedExample:
    X: SVector
    Y: SVector
    params: ChainParams
    rows: List[ReproRow] = field(default_factory=list)
    chain: Optional[Chain] = None

    def row(self, label: str) -> IntervalValue:
        return next(r.value for r in self.rows if r.label == label)

    def lines(self, digits: int = 12) -> List[str]:
        p = self.params
        out = [f"worked example: X = {self.X.base}, Y = {self.Y.base} in S({self.X.g})",
               f"  beta_X = {p.beta_x}, beta_Y = {p.beta_y}, beta_XY = {p.beta_xy}",
               f"  cos(theta) = {p.cos_theta}"]
        width = max(len(r.label) for r in self.rows)
        out += [f"  {r.label.ljust(width)}  {r.value.format(digits)}" for r in self.rows]
        out.append(f"  minimal n = {p.n}")
        out.append(f"  chain length = {p.length}")
        if self.chain is not None:
            widths = ", ".join(v.format(6) for v in self.chain.endpoint_residual())
            out.append(f"  chain verified: {'yes' if self.chain.verified else 'no'} (endpoint residual {widths})")
            out += [f"    {i}: {v.base}" for i, v in enumerate(self.chain.vectors)]
        return out


def example_points(frame: Optional[Frame] = None) -> Tuple[SVector, SVector]:
    frame = frame or Frame.standard(1)
    x, y, z = frame.vectors
    return SVector(x - y, frame), SVector(x + y + z.scale(ExactScalar.sqrt_int(2)), frame)


def run_worked_example(cfg: Optional[PrecisionConfig] = None, max_n: Optional[int] = None,
                       with_chain: bool = False) -> WorkedExample:
    cfg = cfg or PrecisionConfig()
    X, Y = example_points()
    p = chain_params(X, Y, cfg)
    if isinstance(p, (ScaleDownAdvice, MonotoneAdvice)):
        raise ChainError(f"the worked example points need a chain, got {p.message}")

    example = WorkedExample(X, Y, p)
    example.rows.append(ReproRow("theta (degrees)", p.theta_degrees))
    c, _ = ExactScalar.pair(p.rotation_index)
    ratio = (p.beta_y / p.beta_x).sqrt()
    for n in range(1, max(p.n, max_n or 0) + 1):
        trial = p.bindings.with_rotation(p.rotation_index, p.cos_theta, n)
        example.rows.append(ReproRow(f"[cos(theta/{n})]^{n}", eval_interval(c ** n, trial, cfg)))
        example.rows.append(ReproRow(f"alpha({n})", eval_interval(ratio * c ** n, trial, cfg)))

    if with_chain:
        example.chain = build_chain(p, X, Y, cfg=cfg)
    logger.info(f"📐 Worked example: theta = {p.theta_degrees.format(9)} degrees, n = {p.n}")
    return example
