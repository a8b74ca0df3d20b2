"""Monte Carlo harnesses: quartile traces of p_hat - p, graph-only limit
quartiles, horizon search, the Delta sweep and the two toy models.

Replica r always draws its graph and its events from the streams
(seed, r, GRAPH_STREAM) and (seed, r, EVENT_STREAM), so results do not depend
on the number of workers. Parallel runs go through a process pool whose
``map`` returns results in replica order.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from ..errors import (
    DegenerateError,
    DomainError,
    ExperimentError,
    NotIrreducibleError,
    RegimeError,
    SimulationExplosionError,
)
from ..models.estimates import Regime
from ..models.experiment import (
    ExperimentConfig,
    HorizonEstimate,
    LimitSummary,
    MCPoint,
    MCSummary,
    Quartiles,
    SweepPoint,
    SweepSummary,
    ToyConfig,
    ToyResult,
)
from ..models.graph import InteractionGraph
from ..models.simulation import SimConfig
from .estimators import estimate_p, invert_practical, lattice, sub_estimates
from .graph import conjectured_sub_limit, conjectured_sup_limit, sample_graph
from .kernel import growth_exponent, total_mass
from .simulator import counts_on_grid, mean_count_trajectory, simulate
from .streams import (
    EVENT_STREAM,
    GRAPH_STREAM,
    PILOT_STREAM,
    TOY_STREAM,
    derive_seed,
    replica_generator,
)

logger = logging.getLogger(__name__)

R = TypeVar("R")

DEFAULT_T_POINTS = 50
MAX_REJECTION_RATE = 0.05
PILOT_EVENT_FACTOR = 1.5
PILOT_TOLERANCE = 0.2
TOY_MIN_REPLICAS = 1_000
TOY_BATCH = 1_000


def quartiles(values: Iterable[float]) -> Quartiles:
    """Type-7 quartiles (linear interpolation between order statistics), NaN-aware."""
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0 or np.all(np.isnan(arr)):
        return Quartiles(q25=math.nan, q50=math.nan, q75=math.nan)
    q25, q50, q75 = np.nanquantile(arr, [0.25, 0.5, 0.75], method="linear")
    return Quartiles(q25=float(q25), q50=float(q50), q75=float(q75))


def true_regime(config: ExperimentConfig) -> Regime:
    lam_p = total_mass(config.kernel) * config.p
    return Regime.SUBCRITICAL if lam_p < 1 else Regime.SUPERCRITICAL


def replica_graph(config: ExperimentConfig, replica: int) -> InteractionGraph:
    """Graph of a replica; replica 0's graph for every replica in fixed-graph mode."""
    index = 0 if config.fixed_graph else replica
    seed = derive_seed(config.seed, index, GRAPH_STREAM)
    return sample_graph(config.N, config.p, config.mode, seed)


def replica_sim_config(
    config: ExperimentConfig, replica: int, horizon: Optional[float] = None
) -> SimConfig:
    return SimConfig(
        graph=replica_graph(config, replica),
        mu=config.mu,
        kernel=config.kernel,
        horizon=config.horizon if horizon is None else horizon,
        seed=derive_seed(config.seed, replica, EVENT_STREAM),
        max_events=config.max_events,
    )


def default_t_grid(horizon: float, points: int = DEFAULT_T_POINTS) -> np.ndarray:
    """Uniform grid of ``points`` times ending at the horizon."""
    return np.linspace(horizon / points, horizon, points)


def run_replica(
    config: ExperimentConfig, t_grid: Sequence[float], replica: int
) -> Tuple[np.ndarray, np.ndarray]:
    """(p_hat_t - p, good-choice indicator) along the t grid for one replica.

    Points where an estimate is undefined are NaN in both arrays.
    """
    log = simulate(replica_sim_config(config, replica, horizon=float(max(t_grid))))
    expected = true_regime(config)
    errors = np.full(len(t_grid), math.nan)
    good = np.full(len(t_grid), math.nan)
    for k, t in enumerate(t_grid):
        try:
            record = estimate_p(log, config.K, config.N, config.q, T=float(t))
        except DomainError as e:
            logger.warning(f"replica {replica}, t={t:.6g}: no estimate ({e.reason}: {e})")
            continue
        if record.p_hat is None:
            continue
        errors[k] = record.p_hat - config.p
        good[k] = float(record.regime is expected)
    return errors, good


def map_replicas(worker: Callable[[int], R], replicas: int, workers: int) -> List[R]:
    """worker(0), ..., worker(replicas - 1) in replica order.

    Runs on a process pool when workers > 1; ``worker`` must then be picklable.
    """
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(worker, range(replicas)))
    results: List[R] = []
    for replica in range(replicas):
        results.append(worker(replica))
        logger.info(f"replica {replica + 1}/{replicas} done")
    return results


def monte_carlo_traces(
    config: ExperimentConfig, t_grid: Sequence[float], replicas: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Replica x t matrices of errors and good-choice indicators, in replica order."""
    if replicas < 1:
        raise ValueError(f"need at least one replica, got {replicas}")
    worker = partial(run_replica, config, list(t_grid))
    results = map_replicas(worker, replicas, config.workers)
    errors = np.vstack([r[0] for r in results])
    good = np.vstack([r[1] for r in results])
    return errors, good


def summarize_traces(
    p: float, t_grid: Sequence[float], errors: np.ndarray, good: np.ndarray
) -> MCSummary:
    points = []
    for k, t in enumerate(t_grid):
        q = quartiles(errors[:, k])
        column = good[:, k]
        valid = column[~np.isnan(column)]
        fraction = float(valid.mean()) if valid.size else math.nan
        points.append(
            MCPoint(
                t=float(t),
                good_fraction=fraction,
                replicas=errors.shape[0],
                **q.model_dump(),
            )
        )
    return MCSummary(p=p, points=points, replicas=errors.shape[0])


def run_monte_carlo(
    config: ExperimentConfig,
    t_grid: Optional[Sequence[float]] = None,
    replicas: int = 100,
) -> MCSummary:
    """Quartiles of p_hat_t - p over replicas, with a fresh graph per replica."""
    t_grid = default_t_grid(config.horizon) if t_grid is None else np.asarray(t_grid, float)
    if np.any(np.asarray(t_grid) <= 0) or max(t_grid) > config.horizon:
        raise DomainError("t grid must lie in (0, horizon]")
    errors, good = monte_carlo_traces(config, t_grid, replicas)
    return summarize_traces(config.p, t_grid, errors, good)


def horizon_for_target_count(config: ExperimentConfig, target: float) -> HorizonEstimate:
    """T with Zbar_T close to ``target``: closed form, then one capped pilot run."""
    if target <= 0:
        raise DomainError(f"target mean count must be positive, got {target}")
    lam = total_mass(config.kernel)
    regime = true_regime(config)
    if regime is Regime.SUBCRITICAL:
        analytic = target * (1 - lam * config.p) / config.mu
    else:
        if target <= 1:
            raise DomainError("supercritical horizon needs a target above 1")
        analytic = math.log(target) / growth_exponent(config.kernel, config.p)
    logger.info(f"{regime.value} horizon seed T={analytic:.6g} for target {target}")

    cap = max(1, math.ceil(PILOT_EVENT_FACTOR * target * config.N))
    pilot = SimConfig(
        graph=replica_graph(config, 0),
        mu=config.mu,
        kernel=config.kernel,
        horizon=3 * analytic,
        seed=derive_seed(config.seed, 0, PILOT_STREAM),
        max_events=cap,
    )
    try:
        log = simulate(pilot)
    except SimulationExplosionError as e:
        log = e.partial_log
        logger.debug(f"pilot capped at {cap} events, t={log.horizon:.6g}")

    jump_times, values = mean_count_trajectory(log, config.N)
    k = int(np.searchsorted(values, target))
    if k >= values.size:
        raise ExperimentError(
            f"pilot reached Zbar={values[-1] if values.size else 0:.6g} < target {target}"
        )
    refined = float(jump_times[k])
    reached = float(values[k])
    if abs(reached - target) > PILOT_TOLERANCE * target:
        raise ExperimentError(f"pilot Zbar={reached:.6g} is not within 20% of {target}")
    logger.info(f"refined horizon T={refined:.6g} (pilot Zbar={reached:.6g})")
    return HorizonEstimate(
        regime=regime, analytic=analytic, refined=refined, pilot_mean_count=reached
    )


def limit_quartiles(
    config: ExperimentConfig, graphs: int = 100, regime: Optional[Regime] = None
) -> LimitSummary:
    """Quartiles of the conjectured limit minus p over sampled graphs."""
    lam = total_mass(config.kernel)
    regime = true_regime(config) if regime is None else Regime(regime)
    if regime is Regime.SUBCRITICAL and lam * config.p >= 1:
        raise RegimeError(
            f"subcritical limit requested with Lambda p = {lam * config.p:.6g}"
        )
    if regime is Regime.SUPERCRITICAL and lam * config.p <= 1:
        raise RegimeError(
            f"supercritical limit requested with Lambda p = {lam * config.p:.6g}"
        )

    values: List[float] = []
    rejected = 0
    index = 0
    while len(values) < graphs:
        graph = sample_graph(
            config.N, config.p, config.mode, derive_seed(config.seed, index, GRAPH_STREAM)
        )
        index += 1
        try:
            if regime is Regime.SUBCRITICAL:
                value = conjectured_sub_limit(graph, lam, config.mu, config.K)
            else:
                value = conjectured_sup_limit(graph, config.K)
        except (RegimeError, NotIrreducibleError, DegenerateError) as e:
            rejected += 1
            logger.warning(f"graph {index - 1} rejected: {e}")
            if rejected > MAX_REJECTION_RATE * graphs + 1:
                break
            continue
        values.append(value - config.p)
        if len(values) % 100 == 0:
            logger.info(f"{len(values)}/{graphs} graphs evaluated")

    if rejected > MAX_REJECTION_RATE * (len(values) + rejected):
        raise ExperimentError(
            f"{rejected} of {len(values) + rejected} graphs failed the guard "
            f"(limit {MAX_REJECTION_RATE:.0%})"
        )
    return LimitSummary(
        regime=regime,
        graphs=len(values),
        rejected=rejected,
        **quartiles(values).model_dump(),
    )


def snap_delta(t: float, delta: float) -> float:
    """Closest admissible window t / (2m), m a positive integer."""
    if delta <= 0:
        raise DomainError(f"window must be positive, got {delta}")
    m = max(1, round(t / (2 * delta)))
    return t / (2 * m)


def sweep_replica(
    config: ExperimentConfig,
    t: float,
    deltas: Sequence[float],
    grid: np.ndarray,
    replica: int,
) -> np.ndarray:
    """Subcritical p_hat - p at t for each window, NaN where undefined."""
    counts = counts_on_grid(simulate(replica_sim_config(config, replica)), grid)
    errors = np.full(len(deltas), math.nan)
    for k, delta in enumerate(deltas):
        try:
            stats = sub_estimates(counts, t, delta, config.K, config.N)
            p_hat = invert_practical(stats).p_hat
        except DomainError as e:
            logger.warning(f"replica {replica}, window {delta:.6g}: {e}")
            continue
        if p_hat is not None:
            errors[k] = p_hat - config.p
    return errors


def delta_sweep(
    config: ExperimentConfig, deltas: Sequence[float], replicas: int = 100
) -> SweepSummary:
    """Quartiles of the subcritical p_hat - p at t = T/2 for each window.

    One simulation per replica serves every window.
    """
    t = config.horizon / 2
    snapped = [snap_delta(t, d) for d in deltas]
    for requested, used in zip(deltas, snapped):
        if not math.isclose(requested, used, rel_tol=1e-12):
            logger.info(f"window {requested:.6g} snapped to {used:.12g}")
    grid = np.unique(np.concatenate([lattice(t, d) for d in snapped]))

    worker = partial(sweep_replica, config, t, snapped, grid)
    errors = np.vstack(map_replicas(worker, replicas, config.workers))

    points = [
        SweepPoint(delta=used, requested=requested, **quartiles(errors[:, k]).model_dump())
        for k, (requested, used) in enumerate(zip(deltas, snapped))
    ]
    return SweepSummary(t=t, points=points, replicas=replicas)


def effective_mass(alpha0: float, t: float) -> float:
    """m_t = integral over [0, t] of exp(alpha0 s) ds."""
    if alpha0 < 0 or t < 0:
        raise DomainError("effective mass needs alpha0 >= 0 and t >= 0")
    if alpha0 == 0:
        return float(t)
    return float(np.expm1(alpha0 * t) / alpha0)


def toy_formula_variance(cfg: ToyConfig) -> float:
    """2 (Gamma p)^-4 (N^{-1/2} Gamma^2 p (1-p) + N^{1/2} Gamma p / m_t)^2."""
    gp = cfg.gamma * cfg.p
    inner = (
        cfg.gamma**2 * cfg.p * (1 - cfg.p) / math.sqrt(cfg.N)
        + math.sqrt(cfg.N) * gp / cfg.m_t
    )
    return 2.0 * gp**-4 * inner**2


def _toy_statistic(cfg: ToyConfig, samples: np.ndarray) -> np.ndarray:
    gp = cfg.gamma * cfg.p
    spread = np.mean((samples - gp) ** 2, axis=1)
    return cfg.N * gp**-2 * (spread - gp / cfg.m_t)


def _run_toy(
    cfg: ToyConfig, draw: Callable[[np.random.Generator, int], np.ndarray]
) -> ToyResult:
    if cfg.replicas < TOY_MIN_REPLICAS:
        raise DomainError(f"toy models need at least {TOY_MIN_REPLICAS} replicas")
    rng = replica_generator(cfg.seed, 0, TOY_STREAM)
    stats = []
    for start in range(0, cfg.replicas, TOY_BATCH):
        size = min(TOY_BATCH, cfg.replicas - start)
        stats.append(_toy_statistic(cfg, draw(rng, size)))
    values = np.concatenate(stats)
    return ToyResult(
        empirical_variance=float(np.var(values, ddof=1)),
        formula_variance=toy_formula_variance(cfg),
        replicas=cfg.replicas,
    )


def gaussian_toy(cfg: ToyConfig) -> ToyResult:
    """X^i ~ Normal(Gamma p, N^-1 Gamma^2 p (1-p) + Gamma p / m_t), i.i.d."""
    gp = cfg.gamma * cfg.p
    sd = math.sqrt(cfg.gamma**2 * cfg.p * (1 - cfg.p) / cfg.N + gp / cfg.m_t)
    return _run_toy(cfg, lambda rng, size: rng.normal(gp, sd, size=(size, cfg.N)))


def poisson_toy(cfg: ToyConfig) -> ToyResult:
    """X^i = Poisson(Gamma m_t d_i) / m_t with d_i = N^-1 sum_j theta_ij.

    A row sum of Bernoulli(p) entries is Binomial(N, p), so the rows of theta
    are drawn through their sums.
    """

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        degrees = rng.binomial(cfg.N, cfg.p, size=(size, cfg.N)) / cfg.N
        return rng.poisson(cfg.gamma * cfg.m_t * degrees) / cfg.m_t

    return _run_toy(cfg, draw)
