"""Pydantic models for simulation inputs and outputs."""
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..errors import RangeError
from .graph import InteractionGraph
from .kernel import Kernel

DEFAULT_MAX_EVENTS = 10_000_000


class SimConfig(BaseModel):
    """Everything needed to run one simulation of the N-dimensional system."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    graph: InteractionGraph
    mu: float = Field(..., gt=0, description="Baseline intensity (events/time)")
    kernel: Kernel
    horizon: float = Field(..., gt=0, description="Simulation horizon T")
    seed: int = Field(default=0, ge=0, description="Seed of the event stream")
    max_events: int = Field(
        default=DEFAULT_MAX_EVENTS, ge=1, description="Explosion guard"
    )


class EventLog(BaseModel):
    """Per-individual sorted jump times on (0, horizon]."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    horizon: float = Field(..., gt=0)
    times: List[np.ndarray] = Field(..., description="times[i]: jumps of individual i")

    @field_validator("times", mode="before")
    @classmethod
    def _as_arrays(cls, v: object) -> List[np.ndarray]:
        out = []
        for row in v:  # type: ignore[attr-defined]
            arr = np.array(row, dtype=float).reshape(-1)
            arr.flags.writeable = False
            out.append(arr)
        return out

    @model_validator(mode="after")
    def _check_times(self) -> "EventLog":
        for i, row in enumerate(self.times):
            if row.size == 0:
                continue
            if row[0] <= 0 or row[-1] > self.horizon:
                raise ValueError(f"individual {i} has events outside (0, {self.horizon}]")
            if np.any(np.diff(row) <= 0):
                raise ValueError(f"individual {i} has non-increasing event times")
        return self

    @property
    def N(self) -> int:
        return len(self.times)

    @property
    def total_events(self) -> int:
        return int(sum(row.size for row in self.times))

    def mean_count(self, t: Optional[float] = None, K: Optional[int] = None) -> float:
        """Zbar^{N,K}_t, the mean count of the first K individuals at time t."""
        t = self.horizon if t is None else t
        rows = self.times[: (K or self.N)]
        return float(np.mean([np.searchsorted(row, t, side="right") for row in rows]))


class CountsGrid(BaseModel):
    """Cumulative counts Z^{i,N} sampled on an increasing time grid."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: np.ndarray = Field(..., description="Increasing time points")
    counts: np.ndarray = Field(..., description="N x len(grid) cumulative counts")

    @field_validator("grid", mode="before")
    @classmethod
    def _as_grid(cls, v: object) -> np.ndarray:
        arr = np.array(v, dtype=float).reshape(-1)
        arr.flags.writeable = False
        return arr

    @field_validator("counts", mode="before")
    @classmethod
    def _as_counts(cls, v: object) -> np.ndarray:
        arr = np.array(v, dtype=np.int64)
        if arr.ndim != 2:
            raise ValueError("counts must be an N x len(grid) matrix")
        arr.flags.writeable = False
        return arr

    @model_validator(mode="after")
    def _check_counts(self) -> "CountsGrid":
        if self.counts.shape[1] != self.grid.size:
            raise ValueError("counts and grid disagree on the number of time points")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(self.counts < 0) or np.any(np.diff(self.counts, axis=1) < 0):
            raise ValueError("counts must be nonnegative and nondecreasing in time")
        return self

    @property
    def N(self) -> int:
        return int(self.counts.shape[0])

    @property
    def mean(self) -> np.ndarray:
        """Zbar^N on the grid, the column mean over all individuals."""
        return self.counts.mean(axis=0)

    def index_of(self, t: float) -> int:
        """Grid index of time t (up to rounding), or RangeError."""
        tol = 1e-9 * max(1.0, abs(t))
        k = int(np.searchsorted(self.grid, t - tol))
        if k < self.grid.size and abs(self.grid[k] - t) <= tol:
            return k
        raise RangeError(f"time {t!r} is not on the counts grid")

    def at(self, t: float, K: Optional[int] = None) -> np.ndarray:
        """Counts of the first K individuals at time t."""
        return self.counts[: (K or self.N), self.index_of(t)]
