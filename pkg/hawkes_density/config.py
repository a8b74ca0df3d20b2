"""Run configuration: a flat ``key=value`` file plus command-line overrides.

The file is parsed with python-dotenv, so ``#`` comments, blank lines and
quoted values behave as in a ``.env`` file. Dotted keys (``kernel.a``,
``toy.m_t``) map to the fields of ``RunConfig`` through their aliases.

Precedence, lowest first: defaults, file, ``--set key=value``, dedicated flags.
"""
import csv
import logging
import os
from typing import Dict, Literal, Mapping, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import ConfigError
from .models.experiment import ExperimentConfig, ToyConfig
from .models.graph import GraphMode
from .models.kernel import ExponentialKernel, Kernel, TabulatedKernel

logger = logging.getLogger(__name__)


class RunConfig(BaseModel):
    """Every setting a subcommand may read."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)

    N: Optional[int] = Field(default=None, ge=1, description="Population size")
    K: Optional[int] = Field(
        default=None, ge=1, description="Observed individuals (default N)"
    )
    p: Optional[float] = Field(default=None, ge=0, le=1, description="Graph density")
    mu: float = Field(default=1.0, gt=0, description="Baseline intensity")
    kernel_type: Literal["exp", "table"] = Field(default="exp", alias="kernel.type")
    kernel_a: float = Field(default=2.0, gt=0, alias="kernel.a")
    kernel_b: float = Field(default=1.0, gt=0, alias="kernel.b")
    kernel_file: Optional[str] = Field(
        default=None, alias="kernel.file", description="CSV 't,value' for kernel.type=table"
    )
    mode: GraphMode = Field(default=GraphMode.INDEPENDENT)
    T: Optional[float] = Field(default=None, gt=0, description="Horizon")
    q: float = Field(default=12.0, gt=3, description="Moment order of the window schedule")
    replicas: int = Field(default=100, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    t_points: int = Field(default=50, ge=1, description="Points of the Monte Carlo t grid")
    workers: int = Field(default=1, ge=1)
    max_events: int = Field(default=10_000_000, ge=1)
    fixed_graph: bool = Field(default=False)
    target_count: Optional[float] = Field(
        default=None, gt=0, description="Choose T so that Zbar_T is close to this"
    )
    graph_replicas: int = Field(default=100, ge=1, description="Graphs for limit quartiles")
    delta_min: float = Field(default=1.0, gt=0)
    delta_max: float = Field(default=15.0, gt=0)
    delta_step: float = Field(default=1.0, gt=0)
    dump_replicas: int = Field(default=1, ge=1, description="Replicas written by simulate")
    toy_gamma: float = Field(default=1.0, gt=0, alias="toy.gamma")
    toy_m_t: float = Field(default=100.0, gt=0, alias="toy.m_t")
    toy_N: int = Field(default=1000, ge=2, alias="toy.N")
    toy_replicas: int = Field(default=10_000, ge=1, alias="toy.replicas")
    toy_model: Literal["gaussian", "poisson"] = Field(default="gaussian", alias="toy.model")

    @property
    def observed(self) -> Optional[int]:
        return self.N if self.K is None else self.K

    def require(self, *keys: str) -> None:
        for key in keys:
            if getattr(self, key) is None:
                raise ConfigError(key, "required by this command")

    def echo(self) -> Dict[str, object]:
        """Effective configuration keyed as in the file format."""
        values = self.model_dump(mode="json", by_alias=True)
        values["K"] = self.observed
        return values


def config_keys() -> Dict[str, str]:
    """File key -> field name."""
    return {(f.alias or name): name for name, f in RunConfig.model_fields.items()}


def parse_config(
    path: Optional[str] = None, overrides: Optional[Mapping[str, str]] = None
) -> RunConfig:
    """Read the file, apply the overrides in order and validate."""
    raw: Dict[str, object] = {}
    if path is not None:
        if not os.path.isfile(path):
            raise ConfigError("config", f"file not found: {path}")
        for key, value in dotenv_values(path).items():
            if value is None:
                raise ConfigError(key, "missing '=value'")
            raw[key] = value
        logger.debug(f"read {len(raw)} keys from {path}")
    raw.update(overrides or {})

    known = config_keys()
    for key in raw:
        if key not in known:
            raise ConfigError(key, "unknown key")
    try:
        cfg = RunConfig.model_validate(raw)
    except ValidationError as e:
        error = e.errors()[0]
        key = str(error["loc"][0]) if error["loc"] else "config"
        raise ConfigError(key, error["msg"]) from e

    if cfg.K is not None and cfg.N is not None and cfg.K > cfg.N:
        raise ConfigError("K", f"K={cfg.K} exceeds N={cfg.N}")
    if cfg.delta_min > cfg.delta_max:
        raise ConfigError("delta_min", "must not exceed delta_max")
    if cfg.kernel_type == "table" and cfg.kernel_file is None:
        raise ConfigError("kernel.file", "required when kernel.type=table")
    return cfg


def parse_overrides(pairs: Optional[tuple] = None) -> Dict[str, str]:
    """'key=value' strings from repeated --set flags."""
    out: Dict[str, str] = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise ConfigError(pair, "expected key=value")
        out[key.strip()] = value.strip()
    return out


def load_kernel_table(path: str) -> TabulatedKernel:
    try:
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
    except OSError as e:
        raise ConfigError("kernel.file", f"cannot read {path}: {e}") from e
    if not rows or [c.strip() for c in rows[0]] != ["t", "value"]:
        raise ConfigError("kernel.file", "expected a 't,value' header")
    try:
        grid = [float(r[0]) for r in rows[1:] if r]
        values = [float(r[1]) for r in rows[1:] if r]
        return TabulatedKernel(grid=grid, values=values)
    except (IndexError, ValueError) as e:
        raise ConfigError("kernel.file", str(e).splitlines()[0]) from e


def build_kernel(cfg: RunConfig) -> Kernel:
    if cfg.kernel_type == "exp":
        return ExponentialKernel(a=cfg.kernel_a, b=cfg.kernel_b)
    assert cfg.kernel_file is not None
    return load_kernel_table(cfg.kernel_file)


def experiment_config(cfg: RunConfig, horizon: Optional[float] = None) -> ExperimentConfig:
    """Settings shared by the simulation harnesses; needs N and p."""
    cfg.require("N", "p")
    T = cfg.T if horizon is None else horizon
    if T is None:
        raise ConfigError("T", "required by this command (or set target_count)")
    return ExperimentConfig(
        N=cfg.N,
        K=cfg.observed,
        p=cfg.p,
        mu=cfg.mu,
        kernel=build_kernel(cfg),
        mode=cfg.mode,
        horizon=T,
        q=cfg.q,
        seed=cfg.seed,
        max_events=cfg.max_events,
        fixed_graph=cfg.fixed_graph,
        workers=cfg.workers,
    )


def toy_config(cfg: RunConfig) -> ToyConfig:
    cfg.require("p")
    if not cfg.p:
        raise ConfigError("p", "toy models need p > 0")
    return ToyConfig(
        gamma=cfg.toy_gamma,
        p=cfg.p,
        N=cfg.toy_N,
        m_t=cfg.toy_m_t,
        replicas=cfg.toy_replicas,
        seed=cfg.seed,
    )
