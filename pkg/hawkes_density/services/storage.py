import csv
import json
import logging
import os
import platform
from enum import Enum
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np
import psutil
import scipy
from pydantic import BaseModel

from .. import __version__
from ..errors import OutputError
from ..models.experiment import RunManifest, SystemInfo
from ..models.simulation import CountsGrid, EventLog

# Set up logging
logger = logging.getLogger(__name__)

EVENTS_SCHEMA = ("replica", "individual", "time")
COUNTS_SCHEMA = ("time", "individual", "count")
ESTIMATE_SCHEMA = (
    "t",
    "regime",
    "E",
    "V",
    "W",
    "U",
    "P",
    "mu_hat",
    "lambda_hat",
    "p_hat",
    "low_count_flag",
    "in_domain",
)
SUMMARY_SCHEMA = ("t", "q25", "q50", "q75", "good_fraction", "replicas")
TRACE_SCHEMA = ("replica", "t", "error", "good")
SWEEP_SCHEMA = ("delta", "q25", "q50", "q75")
LIMIT_SCHEMA = ("regime", "graphs", "rejected", "q25", "q50", "q75")
HORIZON_SCHEMA = ("regime", "analytic", "refined", "pilot_mean_count")
TOY_SCHEMA = ("model", "replicas", "empirical_variance", "formula_variance")

Record = Union[Mapping[str, Any], BaseModel]


def format_value(value: Any) -> str:
    """CSV cell text: floats with 17 significant digits, booleans as 1/0."""
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(records: Iterable[Record], schema: Sequence[str], path: str) -> str:
    """Header row, then one row per record in schema order; '\\n' line endings."""
    try:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(schema)
            for record in records:
                row = record.model_dump() if isinstance(record, BaseModel) else record
                missing = [key for key in schema if key not in row]
                if missing:
                    raise ValueError(f"record lacks columns {missing}")
                writer.writerow([format_value(row[key]) for key in schema])
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e
    logger.info(f"Wrote {path}")
    return path


def load_counts(path: str) -> CountsGrid:
    """Read a ``time,individual,count`` file back into a CountsGrid."""
    try:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            if tuple(reader.fieldnames or ()) != COUNTS_SCHEMA:
                raise OutputError(f"{path}: expected header {','.join(COUNTS_SCHEMA)}")
            rows = [
                (float(r["time"]), int(r["individual"]), int(r["count"]))
                for r in reader
            ]
    except OSError as e:
        raise OutputError(f"cannot read {path}: {e}") from e
    except ValueError as e:
        raise OutputError(f"{path}: malformed row ({e})") from e
    if not rows:
        raise OutputError(f"{path}: no rows")
    grid = np.unique([r[0] for r in rows])
    N = max(r[1] for r in rows) + 1
    counts = np.zeros((N, grid.size), dtype=np.int64)
    for t, i, c in rows:
        counts[i, np.searchsorted(grid, t)] = c
    return CountsGrid(grid=grid, counts=counts)


def get_system_info() -> SystemInfo:
    """Static host description; no load figures so reruns stay identical."""
    try:
        memory_total = round(psutil.virtual_memory().total / (1024**3), 2)
    except Exception as e:
        logger.debug(f"memory query failed: {e}")
        memory_total = None
    return SystemInfo(
        platform=platform.platform(),
        processor=platform.processor() or "Unknown",
        python_version=platform.python_version(),
        cpu={
            "physical_cores": psutil.cpu_count(logical=False),
            "total_cores": psutil.cpu_count(logical=True),
        },
        memory_total_gb=memory_total,
    )


def package_versions() -> Dict[str, str]:
    return {
        "hawkes_density": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


class StorageService:
    """Writes the CSV artifacts and the manifest of one run into ``out_dir``."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.outputs: List[str] = []
        logger.info(f"Initializing StorageService with output directory: {out_dir}")
        try:
            os.makedirs(out_dir, exist_ok=True)
        except OSError as e:
            raise OutputError(f"cannot create output directory {out_dir}: {e}") from e
        if not os.access(out_dir, os.W_OK):
            raise OutputError(f"output directory {out_dir} is not writable")

    def _path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def save(self, name: str, records: Iterable[Record], schema: Sequence[str]) -> str:
        path = write_csv(records, schema, self._path(name))
        self.outputs.append(name)
        return path

    def save_events(self, logs: Sequence[EventLog], name: str = "events.csv") -> str:
        rows = (
            {"replica": r, "individual": i, "time": float(s)}
            for r, log in enumerate(logs)
            for i, row in enumerate(log.times)
            for s in row
        )
        return self.save(name, rows, EVENTS_SCHEMA)

    def save_counts(self, counts: CountsGrid, name: str = "counts.csv") -> str:
        rows = (
            {"time": float(t), "individual": i, "count": int(counts.counts[i, k])}
            for k, t in enumerate(counts.grid)
            for i in range(counts.N)
        )
        return self.save(name, rows, COUNTS_SCHEMA)

    def save_manifest(
        self, command: str, seed: int, config: Dict[str, Any], extra: Optional[Dict] = None
    ) -> str:
        manifest = RunManifest(
            command=command,
            seed=seed,
            config={**config, **(extra or {})},
            versions=package_versions(),
            system_info=get_system_info(),
            outputs=list(self.outputs),
        )
        path = self._path("manifest.json")
        try:
            with open(path, "w", newline="\n") as f:
                json.dump(manifest.model_dump(mode="json"), f, indent=2, sort_keys=True)
                f.write("\n")
        except OSError as e:
            raise OutputError(f"cannot write {path}: {e}") from e
        logger.info(f"Wrote manifest {path}")
        return path
