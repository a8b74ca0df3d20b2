"""Pydantic models for Monte Carlo experiments and run bookkeeping."""
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, model_validator

from .estimates import Regime
from .graph import GraphMode
from .kernel import ExponentialKernel, Kernel


class ExperimentConfig(BaseModel):
    """Base configuration shared by all Monte Carlo harnesses."""

    N: int = Field(..., ge=1)
    K: int = Field(..., ge=1)
    p: float = Field(..., ge=0, le=1)
    mu: float = Field(default=1.0, gt=0)
    kernel: Kernel = Field(default_factory=lambda: ExponentialKernel(a=2.0, b=1.0))
    mode: GraphMode = Field(default=GraphMode.INDEPENDENT)
    horizon: float = Field(..., gt=0, description="Observation horizon T")
    q: float = Field(default=12.0, gt=3, description="Moment order of the window schedule")
    seed: int = Field(default=0, ge=0, description="Master seed")
    max_events: int = Field(default=10_000_000, ge=1)
    fixed_graph: bool = Field(
        default=False, description="Reuse one graph for all replicas"
    )
    workers: int = Field(default=1, ge=1, description="Parallel replica workers")

    @model_validator(mode="after")
    def _check_k(self) -> "ExperimentConfig":
        if self.K > self.N:
            raise ValueError(f"K={self.K} exceeds N={self.N}")
        return self


class Quartiles(BaseModel):
    q25: float
    q50: float
    q75: float


class MCPoint(Quartiles):
    """Quartiles of p_hat_t - p at one time point."""

    t: float
    good_fraction: float = Field(..., description="Share of replicas with the right regime")
    replicas: int = Field(..., gt=0)


class MCSummary(BaseModel):
    p: float
    points: List[MCPoint] = Field(default_factory=list)
    replicas: int = Field(..., gt=0)


class HorizonEstimate(BaseModel):
    regime: Regime
    analytic: float = Field(..., gt=0, description="Closed-form horizon")
    refined: float = Field(..., gt=0, description="Horizon found on the pilot run")
    pilot_mean_count: float = Field(..., description="Pilot Zbar at the refined horizon")


class LimitSummary(Quartiles):
    """Quartiles of the graph-only limit minus p over sampled graphs."""

    regime: Regime
    graphs: int = Field(..., gt=0)
    rejected: int = Field(default=0, ge=0, description="Graphs failing the guard")


class SweepPoint(Quartiles):
    delta: float = Field(..., gt=0, description="Admissible window actually used")
    requested: float = Field(..., gt=0, description="Window asked for")


class SweepSummary(BaseModel):
    t: float
    points: List[SweepPoint] = Field(default_factory=list)
    replicas: int = Field(..., gt=0)


class ToyConfig(BaseModel):
    gamma: float = Field(..., gt=0, description="Rate scale Gamma")
    p: float = Field(..., gt=0, le=1)
    N: int = Field(..., ge=2)
    m_t: float = Field(..., gt=0, description="Effective mass of the time window")
    replicas: int = Field(default=10_000, ge=1)
    seed: int = Field(default=0, ge=0)


class ToyResult(BaseModel):
    empirical_variance: float
    formula_variance: float
    replicas: int


class SystemInfo(BaseModel):
    """Static description of the host, recorded in run manifests."""

    platform: str = Field(default="Unknown")
    processor: str = Field(default="Unknown")
    python_version: str = Field(default="Unknown")
    cpu: Dict[str, Optional[int]] = Field(default_factory=dict)
    memory_total_gb: Optional[float] = None


class RunManifest(BaseModel):
    command: str
    seed: int
    config: Dict[str, object]
    versions: Dict[str, str]
    system_info: SystemInfo
    outputs: List[str] = Field(default_factory=list)
