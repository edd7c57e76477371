"""
⚙️ BKS COLLAPSE - CONFIGURATION
Precision settings, generator parameters and process-level logging setup.
"""

import logging
import os
from dataclasses import dataclass
from typing import List, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, model_validator

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class PrecisionConfig(BaseModel):
    """Numeric side of every certified decision"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    precision_bits: int = Field(default=256, ge=64)
    zero_tolerance: float = Field(default=1e-30, gt=0)
    max_precision_bits: int = Field(default=4096, ge=64)
    chain_step_cap: int = Field(default=64, ge=1)
    exhaustive_point_cap: int = Field(default=25, ge=1, le=30)

    @model_validator(mode="after")
    def _check_ceiling(self) -> "PrecisionConfig":
        if self.max_precision_bits < self.precision_bits:
            raise ValueError("max_precision_bits must be at least precision_bits")
        return self

    def at_bits(self, bits: int) -> "PrecisionConfig":
        return self.model_copy(update={"precision_bits": bits,
                                       "max_precision_bits": max(bits, self.max_precision_bits)})


class GeneratorSettings(BaseModel):
    """Parameters recorded in certificate metadata"""

    model_config = ConfigDict(extra="forbid")

    seed_axes: List[int] = Field(default_factory=lambda: [1, 2, 3])
    target: Optional[str] = None
    precision: PrecisionConfig = Field(default_factory=PrecisionConfig)

    @model_validator(mode="after")
    def _check_axes(self) -> "GeneratorSettings":
        if not self.seed_axes or any(axis not in (1, 2, 3) for axis in self.seed_axes):
            raise ValueError("seed axes must be drawn from 1, 2, 3")
        return self


@dataclass
class Settings:
    log_level: str = "WARNING"

    @classmethod
    def from_env(cls) -> "Settings":
        load_dotenv()
        return cls(log_level=os.getenv("BKS_LOG_LEVEL", "WARNING").upper())


def configure_logging(level: Optional[str] = None) -> None:
    """Send log records to stderr; reports own stdout"""
    resolved = (level or Settings.from_env().log_level).upper()
    logging.basicConfig(level=getattr(logging, resolved, logging.WARNING), format=LOG_FORMAT, force=True)
