"""Pydantic models for the interaction graph and its linear-algebra data."""
from enum import Enum
from functools import cached_property
from typing import Any, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class GraphMode(str, Enum):
    INDEPENDENT = "independent"
    SYMMETRIC = "symmetric"


class InteractionGraph(BaseModel):
    """Bernoulli interaction matrix theta; theta[i, j] = 1 when j excites i."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    N: int = Field(..., ge=1, description="Population size")
    mode: GraphMode = Field(default=GraphMode.INDEPENDENT)
    p_nominal: float = Field(..., ge=0, le=1, description="Edge probability")
    adjacency: np.ndarray = Field(..., description="N x N matrix of 0/1 entries")
    seed: Optional[int] = Field(default=None, description="Seed the graph was drawn from")

    @field_validator("adjacency", mode="before")
    @classmethod
    def _as_bits(cls, v: object) -> np.ndarray:
        arr = np.array(v)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("adjacency must be a square matrix")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("adjacency entries must be 0 or 1")
        arr = arr.astype(np.uint8)
        arr.flags.writeable = False
        return arr

    @model_validator(mode="after")
    def _check_shape(self) -> "InteractionGraph":
        if self.adjacency.shape[0] != self.N:
            raise ValueError(f"adjacency is {self.adjacency.shape}, expected N={self.N}")
        if self.mode is GraphMode.SYMMETRIC and not np.array_equal(
            self.adjacency, self.adjacency.T
        ):
            raise ValueError("symmetric graph with a non-symmetric adjacency")
        return self

    @cached_property
    def interaction_matrix(self) -> np.ndarray:
        """A_N = theta / N."""
        a = self.adjacency.astype(float) / self.N
        a.flags.writeable = False
        return a

    @cached_property
    def followers(self) -> List[np.ndarray]:
        """followers[j]: the individuals i whose intensity jumps when j jumps."""
        return [np.flatnonzero(self.adjacency[:, j]) for j in range(self.N)]

    def permuted(self, perm: np.ndarray) -> "InteractionGraph":
        """Relabel individuals: new individual k is old individual perm[k]."""
        perm = np.asarray(perm)
        return InteractionGraph(
            N=self.N,
            mode=self.mode,
            p_nominal=self.p_nominal,
            adjacency=self.adjacency[np.ix_(perm, perm)],
            seed=self.seed,
        )


class ResolventData(BaseModel):
    """Row and column sums of Q_N = (I - Lambda A_N)^-1."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    ell: Optional[np.ndarray] = Field(default=None, description="Row sums of Q_N")
    col: Optional[np.ndarray] = Field(default=None, description="Column sums of Q_N")
    lambda_used: float = Field(..., description="Kernel mass Lambda")
    omega1: bool = Field(..., description="Whether the good event holds")
    threshold: float = Field(..., description="a = (1 + Lambda p) / 2")
    residual: Optional[float] = Field(default=None)
    factor: Optional[Any] = Field(
        default=None, exclude=True, repr=False, description="LU factors of I - Lambda A_N"
    )

    @property
    def solved(self) -> bool:
        return self.ell is not None


class SpectralData(BaseModel):
    """Perron-Frobenius pair of A_N, with V normalized to ||V||_2 = sqrt(N)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    rho: float = Field(..., description="Spectral radius of A_N")
    V: np.ndarray = Field(..., description="Positive eigenvector")
    omega2: bool = Field(..., description="Whether the good event holds")
    residual: float = Field(..., description="||A V - rho V||_2 / sqrt(N)")
    iterations: int = Field(default=0)
