"""Pydantic models for excitation kernels."""
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ExponentialKernel(BaseModel):
    """phi(t) = a * exp(-b t) on t >= 0."""

    model_config = ConfigDict(frozen=True)

    type: Literal["exp"] = "exp"
    a: float = Field(..., gt=0, description="Amplitude phi(0)")
    b: float = Field(..., gt=0, description="Decay rate (1/time)")

    def __call__(self, t: Union[float, np.ndarray]) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, self.a * np.exp(-self.b * np.maximum(t, 0.0)), 0.0)

    @property
    def non_increasing(self) -> bool:
        return True


class TabulatedKernel(BaseModel):
    """Kernel given by samples on a strictly increasing grid.

    Values are linearly interpolated between grid points and the kernel
    vanishes beyond the last grid point.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    type: Literal["table"] = "table"
    grid: np.ndarray = Field(..., description="Support grid, strictly increasing")
    values: np.ndarray = Field(..., description="Nonnegative intensities on the grid")

    @field_validator("grid", "values", mode="before")
    @classmethod
    def _as_array(cls, v: object) -> np.ndarray:
        arr = np.array(v, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("expected a one-dimensional array of length >= 2")
        if not np.all(np.isfinite(arr)):
            raise ValueError("entries must be finite")
        arr.flags.writeable = False
        return arr

    @model_validator(mode="after")
    def _check_table(self) -> "TabulatedKernel":
        if self.grid.shape != self.values.shape:
            raise ValueError("grid and values must have the same length")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if self.grid[0] < 0:
            raise ValueError("grid must start at t >= 0")
        if np.any(self.values < 0):
            raise ValueError("kernel values must be nonnegative")
        return self

    def __call__(self, t: Union[float, np.ndarray]) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.interp(t, self.grid, self.values, left=0.0, right=0.0)
        # np.interp returns the endpoint values on the grid itself
        return np.where((t < self.grid[0]) | (t > self.grid[-1]), 0.0, out)

    @property
    def non_increasing(self) -> bool:
        return bool(np.all(np.diff(self.values) <= 0))

    @property
    def step(self) -> Optional[float]:
        """Common grid spacing, or None for a non-uniform grid."""
        steps = np.diff(self.grid)
        if np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            return float(steps[0])
        return None


Kernel = Annotated[Union[ExponentialKernel, TabulatedKernel], Field(discriminator="type")]


class KernelMoments(BaseModel):
    """Scalars derived from a kernel."""

    total_mass: float = Field(..., gt=0, description="Lambda, integral of phi")
    mean_delay: float = Field(..., gt=0, description="kappa, first moment over Lambda")
    growth_exponent: Optional[float] = Field(
        default=None, gt=0, description="alpha_0, present only when p * Lambda > 1"
    )
    p: Optional[float] = Field(
        default=None, description="Graph density used for alpha_0"
    )
