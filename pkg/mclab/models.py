"""
Configuration and report models.

Pydantic models for everything the lab reads from config files or writes to
JSON: solver settings, annealing schedule, adversary probe settings, the
experiment configuration and the experiment report rows.
"""

from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

import utils


class SolverConfig(BaseModel):
    """Operator-splitting parameters for the nuclear-norm completion solvers."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    penalty: float = Field(default=1.0, gt=0.0)
    max_iters: int = Field(default=2000, ge=1)
    primal_tol: float = Field(default=1e-6, gt=0.0, lt=1.0)
    dual_tol: float = Field(default=1e-6, gt=0.0, lt=1.0)
    over_relaxation: float = Field(default=1.6, ge=1.0, le=1.9)
    adaptive_penalty: bool = True


class AnnealConfig(BaseModel):
    """Simulated-annealing schedule for heuristic cut distances."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    levels: int = Field(default=150, ge=1)
    decay: float = Field(default=0.95, gt=0.0, lt=1.0)
    proposals_per_size: int = Field(default=100, ge=1)
    restarts: int = Field(default=20, ge=1)


class ProbeConfig(BaseModel):
    """Adversarial search settings for the stable-recovery probe."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    penalty: float = Field(default=10.0, ge=0.0)
    iterations: int = Field(default=200, ge=1)
    restarts: int = Field(default=8, ge=0)
    step_size: float = Field(default=0.5, gt=0.0)
    masked_tol: float = Field(default=1e-6, ge=0.0)
    full_tol: float = Field(default=0.1, ge=0.0)


class PatternFamily(str, Enum):
    HALF_ROWS = "half-rows"
    PARITY = "parity"
    QUASIRANDOM = "quasirandom"
    FULL = "full"
    FROM_FILE = "from-file"


class ExperimentConfig(BaseModel):
    """One completion experiment: a mask family swept over sizes."""

    model_config = ConfigDict(extra="forbid")

    pattern_family: PatternFamily = PatternFamily.QUASIRANDOM
    sizes: List[int] = Field(default_factory=lambda: [32, 64, 128])
    rank_bound: int = Field(default=2, ge=1)
    box_bound: float = Field(default=1.0, gt=0.0)
    density: float = Field(default=0.5, gt=0.0, lt=1.0)
    mask_path: Optional[str] = None
    solver: SolverConfig = Field(default_factory=SolverConfig)
    probe: ProbeConfig = Field(default_factory=ProbeConfig)
    run_probe: bool = False
    seed: int = Field(default_factory=lambda: utils.DEFAULT_SEED)
    output_path: str = Field(default_factory=lambda: utils.OUTPUT_DIR)
    workers: int = Field(default=4, ge=1)

    @field_validator("sizes")
    @classmethod
    def _sizes_increasing(cls, sizes: List[int]) -> List[int]:
        if not sizes:
            raise ValueError("sizes must not be empty")
        if any(k < 2 for k in sizes):
            raise ValueError("every size must be at least 2")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError("sizes must be strictly increasing")
        return sizes

    @model_validator(mode="after")
    def _mask_path_for_file_family(self) -> "ExperimentConfig":
        if self.pattern_family == PatternFamily.FROM_FILE and not self.mask_path:
            raise ValueError("pattern_family from-file requires mask_path")
        return self


class NormTriple(BaseModel):
    modified: float
    plain: float
    truth: float


class SizeRecord(BaseModel):
    """One row of the experiment report."""

    k: int
    maskedDiff: Optional[float] = None
    fullDiff: Optional[float] = None
    errModified: float
    errPlain: float
    nuclear: NormTriple
    iters: Dict[str, int]
    converged: Dict[str, bool]
    probeVerdict: Optional[str] = None


class PatternVerdict(BaseModel):
    admitsRecovery: bool
    phiZero: float
    etaGrid: List[float]
    phiValues: List[float]
    probeVerdict: Optional[str] = None


class ExperimentReport(BaseModel):
    config: dict
    perSize: List[SizeRecord]
    patternVerdict: PatternVerdict
    metadata: dict = Field(default_factory=dict)
