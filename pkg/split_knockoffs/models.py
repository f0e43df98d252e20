"""Configuration and result models for split-knockoffs artifacts."""

import math
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from split_knockoffs import SCHEMA_VERSION


class SplitConfig(BaseModel):
    """Knobs of a single Split Knockoff run."""
    nu: float = Field(gt=0)  # variable-splitting strength
    q: float = Field(gt=0.0, lt=1.0)  # nominal FDR_dir
    plus: bool = False
    n1: Optional[int] = Field(None, ge=1)  # None -> round(0.4 n)
    split_mode: Literal["random", "first"] = "random"
    lambda_count: int = Field(200, ge=2)
    lambda_min_ratio: float = Field(1e-3, gt=0.0, lt=1.0)
    seed: int = Field(0, ge=0, lt=2**64)
    s_method: Literal["equicorrelated"] = "equicorrelated"
    refine_bisection_steps: int = Field(30, ge=0)
    max_iter: int = Field(10_000, ge=1)
    allow_nonconverged: bool = False

    def resolve_n1(self, n: int) -> int:
        """Size of D1 for a dataset with n rows."""
        return self.n1 if self.n1 is not None else int(round(0.4 * n))


class ScreeningInfo(BaseModel):
    """What the high-dimensional screen kept (1-based indices)."""
    lambda_beta: float
    lambda_gamma: float
    S_beta: List[int]
    S_gamma: List[int]


class SelectionDiagnostics(BaseModel):
    """Solver and copy diagnostics echoed with every selection."""
    mode: Literal["split", "no_split", "hd"]
    nu: float
    n1: int
    n2: int
    lambda_max: float
    converged: List[bool]
    refine_nonconverged: int = 0  # bisection re-solves that hit max_iter
    s: List[float]
    screening: Optional[ScreeningInfo] = None


class RunManifest(BaseModel):
    """Provenance of a CLI invocation, for replay."""
    command: str
    config: dict
    input_digests: Dict[str, str] = {}
    library_version: str
    schema_version: str = SCHEMA_VERSION
    seed: int
    os: str
    python_version: str
    timestamp: str  # wall clock
    elapsed_s: float  # wall clock


class SelectionResult(BaseModel):
    """Output of the knockoff filter.

    ``tested`` lists the 1-based gamma coordinates the statistics refer to; W, Z,
    Z_tilde and r are aligned with it. ``selected`` and the keys of ``signs`` are
    1-based. ``T`` is None when the threshold is +infinity.
    """
    model_config = ConfigDict(populate_by_name=True)

    schema_id: str = Field(default=SCHEMA_VERSION, alias="schema")
    W: List[float]
    Z: List[float]
    Z_tilde: List[float]
    r: List[int]
    T: Optional[float] = None
    selected: List[int]
    signs: Dict[int, int]
    tested: List[int]
    config: SplitConfig
    diagnostics: SelectionDiagnostics
    manifest: Optional[RunManifest] = None

    @property
    def threshold_value(self) -> float:
        return math.inf if self.T is None else self.T


class ExperimentSpec(BaseModel):
    """Monte-Carlo experiment description."""
    scenario: Literal["d1", "d2", "d3"] = "d2"
    n: int = Field(500, ge=2)
    p: int = Field(100, ge=2)
    rho: float = Field(0.5, ge=0.0, lt=1.0)
    beta_pattern: Literal["mod3", "null"] = "mod3"
    amplitude: float = 1.0
    sigma: float = Field(1.0, ge=0.0)
    q: float = Field(0.2, gt=0.0, lt=1.0)
    log10_nu_grid: List[float]
    nu_choice: Literal["grid", "cv"] = "grid"
    replicates: int = Field(ge=1)
    base_seed: int = Field(0, ge=0)
    mode: Literal["split", "no_split", "hd"] = "split"
    n1: int = Field(200, ge=1)
    lambda_count: int = Field(200, ge=2)
    refine_bisection_steps: int = Field(30, ge=0)
    cv_folds: int = Field(5, ge=2)
    cv_lambda_count: int = Field(50, ge=2)

    @field_validator("log10_nu_grid")
    @classmethod
    def _grid_nonempty(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("nu grid must not be empty")
        return value

    @property
    def transform_kind(self) -> str:
        return {"d1": "identity", "d2": "line_difference", "d3": "stacked"}[self.scenario]


class ReplicateRecord(BaseModel):
    """Metrics of one (nu, replicate, variant) work unit."""
    scenario: str
    mode: str
    variant: Literal["knockoff", "knockoff+"]
    nu_label: str  # formatted log10 nu, or "cv"
    log10_nu: float  # nu actually used
    replicate: int
    fdp_dir: Optional[float] = Field(None, ge=0.0, le=1.0)
    mfdp: Optional[float] = Field(None, ge=0.0, le=1.0)
    power: Optional[float] = Field(None, ge=0.0, le=1.0)
    n_selected: Optional[int] = None
    threshold: Optional[float] = None
    failed: bool = False
    error: Optional[str] = None


class NuSummary(BaseModel):
    """Aggregate over replicates for one (mode, variant, nu) cell.

    The *_lo / *_hi bounds are the 10% and 90% empirical quantiles clipped to [0, 1].
    """
    mode: str
    variant: str
    nu_label: str
    log10_nu: float
    n_ok: int
    n_failed: int
    mean_fdp_dir: float
    sd_fdp_dir: float
    fdp_dir_lo: float
    fdp_dir_hi: float
    mean_mfdp: float
    mean_power: float
    sd_power: float
    power_lo: float
    power_hi: float
    mean_n_selected: float


class ExperimentReport(BaseModel):
    """Per-replicate records, per-nu summaries and the spec that produced them."""
    spec: ExperimentSpec
    harness_version: str
    records: List[ReplicateRecord]
    summaries: List[NuSummary]
    n_failed: int
