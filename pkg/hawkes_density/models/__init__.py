from .estimates import (
    EstimateRecord,
    ParamEstimate,
    Regime,
    RegimeDecision,
    SubEstimates,
    SupEstimates,
)
from .experiment import (
    ExperimentConfig,
    HorizonEstimate,
    LimitSummary,
    MCPoint,
    MCSummary,
    Quartiles,
    RunManifest,
    SweepPoint,
    SweepSummary,
    SystemInfo,
    ToyConfig,
    ToyResult,
)
from .graph import GraphMode, InteractionGraph, ResolventData, SpectralData
from .kernel import ExponentialKernel, Kernel, KernelMoments, TabulatedKernel
from .simulation import CountsGrid, EventLog, SimConfig

__all__ = [
    "CountsGrid",
    "EstimateRecord",
    "EventLog",
    "ExperimentConfig",
    "ExponentialKernel",
    "GraphMode",
    "HorizonEstimate",
    "InteractionGraph",
    "Kernel",
    "KernelMoments",
    "LimitSummary",
    "MCPoint",
    "MCSummary",
    "ParamEstimate",
    "Quartiles",
    "Regime",
    "RegimeDecision",
    "ResolventData",
    "RunManifest",
    "SimConfig",
    "SpectralData",
    "SubEstimates",
    "SupEstimates",
    "SweepPoint",
    "SweepSummary",
    "SystemInfo",
    "TabulatedKernel",
    "ToyConfig",
    "ToyResult",
]
