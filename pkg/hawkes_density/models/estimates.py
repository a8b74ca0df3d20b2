"""Pydantic models for estimator outputs."""
from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field, model_validator


class Regime(str, Enum):
    SUBCRITICAL = "subcritical"
    SUPERCRITICAL = "supercritical"


class SubEstimates(BaseModel):
    """Subcritical statistics computed on (t, 2t]."""

    t: float = Field(..., gt=0)
    delta: float = Field(..., gt=0, description="Window size Delta")
    K: int = Field(..., ge=1, description="Number of observed individuals")
    N: int = Field(..., ge=1, description="Population size")
    E: float = Field(..., description="Mean rate estimator")
    V: float = Field(..., description="Cross-sectional dispersion estimator")
    Z_delta: float = Field(..., description="Temporal dispersion at window Delta")
    Z_2delta: float = Field(..., description="Temporal dispersion at window 2 Delta")
    W: float = Field(..., description="2 Z_2delta - Z_delta")

    @model_validator(mode="after")
    def _check(self) -> "SubEstimates":
        if self.K > self.N:
            raise ValueError(f"K={self.K} exceeds N={self.N}")
        return self

    @property
    def w_corrected(self) -> float:
        """W - (N - K) E / K, the third argument of the inversion."""
        return self.W - (self.N - self.K) / self.K * self.E


class ParamEstimate(BaseModel):
    """Estimates of (mu, Lambda, p) obtained by inverting the moment map."""

    mu_hat: Optional[float] = None
    lambda_hat: Optional[float] = None
    p_hat: Optional[float] = None
    in_domain: bool = Field(..., description="Whether (u, v, w) lies in D")


class SupEstimates(BaseModel):
    U: float = Field(..., description="Normalized dispersion of final counts")
    P: float = Field(..., ge=0, le=1, description="1 / (U + 1) when U >= 0, else 0")
    mean_count: float = Field(..., ge=0, description="Zbar^{N,K}_T")
    low_count_flag: bool = Field(..., description="Zbar_T below the practical floor")


class RegimeDecision(BaseModel):
    regime: Regime
    log_mean_count: float = Field(..., description="log Zbar_T (-inf when Zbar_T = 0)")
    threshold: float = Field(..., description="(log T)^2")


class EstimateRecord(BaseModel):
    """One row of the estimate CSV: every statistic available at time t."""

    t: float
    regime: Regime
    E: Optional[float] = None
    V: Optional[float] = None
    W: Optional[float] = None
    U: Optional[float] = None
    P: Optional[float] = None
    mu_hat: Optional[float] = None
    lambda_hat: Optional[float] = None
    p_hat: Optional[float] = None
    low_count_flag: bool = False
    in_domain: bool = False
