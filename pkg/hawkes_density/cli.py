"""Command-line interface for hawkes-graph-density."""
import functools
import logging
import os
import sys
from typing import Any, Callable, Optional, Tuple

import click
import numpy as np
from dotenv import load_dotenv

from .config import (
    RunConfig,
    experiment_config,
    parse_config,
    parse_overrides,
    toy_config,
)
from .errors import HawkesDensityError
from .services.estimators import estimate_p, estimation_grid
from .services.experiments import (
    default_t_grid,
    delta_sweep,
    gaussian_toy,
    horizon_for_target_count,
    limit_quartiles,
    monte_carlo_traces,
    poisson_toy,
    replica_sim_config,
    summarize_traces,
)
from .services.simulator import counts_on_grid, simulate
from .services.storage import (
    ESTIMATE_SCHEMA,
    HORIZON_SCHEMA,
    LIMIT_SCHEMA,
    SUMMARY_SCHEMA,
    SWEEP_SCHEMA,
    TOY_SCHEMA,
    TRACE_SCHEMA,
    StorageService,
    load_counts,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_LEVEL_ENV = "HAWKES_DENSITY_LOG_LEVEL"


def configure_logging(level: Optional[str]) -> None:
    level = (level or os.getenv(LOG_LEVEL_ENV) or "WARNING").upper()
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def run_options(command: Callable) -> Callable:
    """Options shared by every subcommand; errors become exit codes."""

    @click.option("--config", "config_path", type=click.Path(), help="Key=value config file")
    @click.option("--seed", type=int, default=None, help="Master seed (overrides the file)")
    @click.option(
        "--out", "out_dir", type=click.Path(), default=".", help="Output directory"
    )
    @click.option(
        "--set", "overrides", multiple=True, help="Override one key: --set key=value"
    )
    @functools.wraps(command)
    def wrapper(
        config_path: Optional[str],
        seed: Optional[int],
        out_dir: str,
        overrides: Tuple[str, ...],
        **kwargs: Any,
    ) -> None:
        try:
            values = parse_overrides(overrides)
            if seed is not None:
                values["seed"] = str(seed)
            cfg = parse_config(config_path, values)
            command(cfg, StorageService(out_dir), **kwargs)
        except HawkesDensityError as e:
            message = " ".join(str(e).split())
            click.echo(f"error[{e.reason}]: {message}", err=True)
            sys.exit(e.exit_code)
        except ValueError as e:
            message = " ".join(str(e).split())
            click.echo(f"error[domain]: {message}", err=True)
            sys.exit(2)

    return wrapper


def _horizon(cfg: RunConfig, storage: StorageService) -> Optional[float]:
    """T from the config, or from the target mean count when one is set."""
    if cfg.target_count is None:
        return cfg.T
    seed_T = cfg.T or 1.0
    estimate = horizon_for_target_count(experiment_config(cfg, seed_T), cfg.target_count)
    storage.save("horizon.csv", [estimate], HORIZON_SCHEMA)
    return estimate.refined


@click.group()
@click.option("--log-level", default=None, help=f"Logging level (or ${LOG_LEVEL_ENV})")
def main(log_level: Optional[str]) -> None:
    """Simulate Hawkes systems on Bernoulli graphs and estimate the graph density p."""
    load_dotenv()
    configure_logging(log_level)


@main.command("simulate")
@run_options
def simulate_cmd(cfg: RunConfig, storage: StorageService) -> None:
    """Simulate replicas and dump their events and counts."""
    exp = experiment_config(cfg)
    logs = []
    for replica in range(cfg.dump_replicas):
        logs.append(simulate(replica_sim_config(exp, replica)))
        logger.info(f"replica {replica}: {logs[-1].total_events} events")
    storage.save_events(logs)

    grid = default_t_grid(exp.horizon, cfg.t_points)
    try:
        grid = np.union1d(grid, estimation_grid(exp.horizon, exp.q))
    except HawkesDensityError as e:
        logger.warning(f"counts grid without the estimation lattice: {e}")
    storage.save_counts(counts_on_grid(logs[0], grid))
    storage.save_manifest("simulate", cfg.seed, cfg.echo())


@main.command()
@click.option(
    "--counts", "counts_path", type=click.Path(), help="Counts CSV to estimate from"
)
@run_options
def estimate(cfg: RunConfig, storage: StorageService, counts_path: Optional[str]) -> None:
    """Estimate p from a counts file, or along the t grid of one simulated replica."""
    if counts_path is not None:
        counts = load_counts(counts_path)
        N = cfg.N or counts.N
        K = cfg.K or counts.N
        records = [estimate_p(counts, K, N, cfg.q)]
    else:
        exp = experiment_config(cfg)
        log = simulate(replica_sim_config(exp, 0))
        records = []
        for t in default_t_grid(exp.horizon, cfg.t_points):
            try:
                records.append(estimate_p(log, exp.K, exp.N, exp.q, T=float(t)))
            except HawkesDensityError as e:
                logger.warning(f"t={t:.6g}: no estimate ({e})")
    storage.save("estimates.csv", records, ESTIMATE_SCHEMA)
    storage.save_manifest("estimate", cfg.seed, cfg.echo(), {"counts": counts_path})


@main.command()
@run_options
def mc(cfg: RunConfig, storage: StorageService) -> None:
    """Quartile traces of p_hat_t - p over Monte Carlo replicas."""
    exp = experiment_config(cfg, _horizon(cfg, storage))
    t_grid = default_t_grid(exp.horizon, cfg.t_points)
    errors, good = monte_carlo_traces(exp, t_grid, cfg.replicas)
    summary = summarize_traces(exp.p, t_grid, errors, good)
    storage.save("summary.csv", summary.points, SUMMARY_SCHEMA)
    traces = (
        {"replica": r, "t": float(t), "error": errors[r, k], "good": good[r, k]}
        for r in range(errors.shape[0])
        for k, t in enumerate(t_grid)
    )
    storage.save("traces.csv", traces, TRACE_SCHEMA)
    storage.save_manifest("mc", cfg.seed, cfg.echo(), {"horizon": exp.horizon})


@main.command()
@run_options
def limits(cfg: RunConfig, storage: StorageService) -> None:
    """Quartiles of the graph-only limits minus p over sampled graphs."""
    exp = experiment_config(cfg, cfg.T or 1.0)
    summary = limit_quartiles(exp, cfg.graph_replicas)
    storage.save("limits.csv", [summary], LIMIT_SCHEMA)
    storage.save_manifest("limits", cfg.seed, cfg.echo())


@main.command()
@run_options
def sweep(cfg: RunConfig, storage: StorageService) -> None:
    """Quartiles of the subcritical p_hat - p as a function of the window."""
    exp = experiment_config(cfg, _horizon(cfg, storage))
    deltas = np.arange(cfg.delta_min, cfg.delta_max + cfg.delta_step / 2, cfg.delta_step)
    summary = delta_sweep(exp, [float(d) for d in deltas], cfg.replicas)
    storage.save("sweep.csv", summary.points, SWEEP_SCHEMA)
    snapped = {format(p.requested, ".17g"): p.delta for p in summary.points}
    storage.save_manifest(
        "sweep", cfg.seed, cfg.echo(), {"horizon": exp.horizon, "delta_snapped": snapped}
    )


@main.command()
@run_options
def toy(cfg: RunConfig, storage: StorageService) -> None:
    """Variance of the toy statistic against its closed form."""
    toy_cfg = toy_config(cfg)
    result = gaussian_toy(toy_cfg) if cfg.toy_model == "gaussian" else poisson_toy(toy_cfg)
    row = {"model": cfg.toy_model, **result.model_dump()}
    storage.save("toy.csv", [row], TOY_SCHEMA)
    storage.save_manifest("toy", cfg.seed, cfg.echo())


if __name__ == "__main__":
    main()
