"""Exact event-level simulation of the N-dimensional Hawkes system.

lambda_i(t) = mu + N^-1 sum_j theta_ij sum_{s in events of j, s < t} phi(t - s)

Both simulators use thinning. With a non-increasing kernel the total intensity
can only drop between events, so the total rate just after the last event
bounds it until the next one. Each run consumes its stream in the fixed order
inter-arrival, acceptance, selection.
"""
import logging
import math
from typing import List, Tuple

import numpy as np

from ..errors import (
    ConvergenceError,
    DomainError,
    RangeError,
    RegimeError,
    ScaleError,
    SimulationExplosionError,
    UnsupportedKernelError,
)
from ..models.graph import InteractionGraph
from ..models.kernel import ExponentialKernel, Kernel
from ..models.simulation import CountsGrid, EventLog, SimConfig
from .kernel import SERIES_MAX_TERMS, SERIES_RTOL, delay_integral, total_mass
from .streams import generator

logger = logging.getLogger(__name__)

ORACLE_MAX_N = 50
ORACLE_STEP = 0.005
REBASE_EXPONENT = 200.0
PROGRESS_EVERY = 1_000_000


def _split(horizon: float, N: int, times: List[float], owners: List[int]) -> EventLog:
    times_arr = np.asarray(times, dtype=float)
    owners_arr = np.asarray(owners, dtype=np.int64)
    order = np.argsort(owners_arr, kind="stable")
    bounds = np.cumsum(np.bincount(owners_arr, minlength=N))[:-1]
    return EventLog(horizon=horizon, times=np.split(times_arr[order], bounds))


def _explode(cfg: SimConfig, t: float, times: List[float], owners: List[int]) -> None:
    partial = _split(t, cfg.graph.N, times, owners)
    raise SimulationExplosionError(
        f"more than {cfg.max_events} events before t={t:.6g} (horizon {cfg.horizon})",
        partial_log=partial,
    )


def simulate_exponential(cfg: SimConfig) -> EventLog:
    """Markovian thinning for phi(t) = a exp(-b t).

    D_i(t) = S_i exp(-b (t - t_ref)) is kept at a reference time; only the
    followers of the jumping individual are touched per event. The state is
    rebased at every candidate time with b (t - t_ref) above REBASE_EXPONENT,
    which keeps decay >= exp(-REBASE_EXPONENT).
    """
    kernel = cfg.kernel
    if not isinstance(kernel, ExponentialKernel):
        raise UnsupportedKernelError("simulate_exponential needs an exponential kernel")
    graph = cfg.graph
    N, mu, a, b, T = graph.N, cfg.mu, kernel.a, kernel.b, cfg.horizon
    followers = graph.followers
    rng = generator(cfg.seed)

    base_rates = mu * np.arange(1, N + 1)
    S = np.zeros(N)
    S_total = 0.0
    t = 0.0
    t_ref = 0.0
    times: List[float] = []
    owners: List[int] = []

    while True:
        rate = N * mu + math.exp(-b * (t - t_ref)) * S_total / N
        t_next = t + rng.exponential(1.0 / rate)
        if t_next > T:
            break
        t = t_next
        if b * (t - t_ref) > REBASE_EXPONENT:
            S *= math.exp(-b * (t - t_ref))
            S_total = float(S.sum())
            t_ref = t
        decay = math.exp(-b * (t - t_ref))
        rate_now = N * mu + decay * S_total / N
        if rng.random() * rate > rate_now:
            continue

        cumulative = base_rates + decay * np.cumsum(S) / N
        i = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
        i = min(i, N - 1)
        times.append(t)
        owners.append(i)
        if len(times) > cfg.max_events:
            _explode(cfg, t, times, owners)
        if len(times) % PROGRESS_EVERY == 0:
            logger.info(f"{len(times)} events, t={t:.6g} of {T}")

        boost = a / decay
        hit = followers[i]
        S[hit] += boost
        S_total += boost * hit.size

    logger.debug(f"simulated {len(times)} events on N={N} up to T={T}")
    return _split(T, N, times, owners)


def simulate_thinning_general(cfg: SimConfig) -> EventLog:
    """Thinning from the full history; small N and short horizons only."""
    kernel = cfg.kernel
    if not kernel.non_increasing:
        raise UnsupportedKernelError("thinning needs a non-increasing kernel")
    graph = cfg.graph
    N, mu, T = graph.N, cfg.mu, cfg.horizon
    A = graph.interaction_matrix
    rng = generator(cfg.seed)

    times: List[float] = []
    owners: List[int] = []

    def intensities(s: float) -> np.ndarray:
        if not times:
            return np.full(N, mu)
        past = np.asarray(times)
        excitation = np.bincount(owners, weights=kernel(s - past), minlength=N)
        return mu + A @ excitation

    t = 0.0
    while True:
        rate = float(intensities(t).sum())
        t_next = t + rng.exponential(1.0 / rate)
        if t_next > T:
            break
        t = t_next
        current = intensities(t)
        if rng.random() * rate > current.sum():
            continue
        cumulative = np.cumsum(current)
        i = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
        times.append(t)
        owners.append(min(i, N - 1))
        if len(times) > cfg.max_events:
            _explode(cfg, t, times, owners)

    return _split(T, N, times, owners)


def simulate(cfg: SimConfig) -> EventLog:
    """Pick the fastest exact simulator for the kernel."""
    if isinstance(cfg.kernel, ExponentialKernel):
        return simulate_exponential(cfg)
    return simulate_thinning_general(cfg)


def counts_on_grid(log: EventLog, grid: np.ndarray) -> CountsGrid:
    """counts[i, k] = #{events of i in (0, grid[k]]}."""
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size and (grid[0] < 0 or grid[-1] > log.horizon * (1 + 1e-12)):
        raise RangeError(f"grid [{grid[0]:.6g}, {grid[-1]:.6g}] leaves [0, {log.horizon}]")
    counts = np.array(
        [np.searchsorted(row, grid, side="right") for row in log.times], dtype=np.int64
    ).reshape(log.N, grid.size)
    return CountsGrid(grid=grid, counts=counts)


def _check_oracle(graph: InteractionGraph, grid: np.ndarray) -> np.ndarray:
    if graph.N > ORACLE_MAX_N:
        raise ScaleError(f"mean oracles are limited to N <= {ORACLE_MAX_N}, got {graph.N}")
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise DomainError("oracle grid must be nonnegative and strictly increasing")
    return grid


def conditional_mean_oracle(
    graph: InteractionGraph,
    mu: float,
    kernel: Kernel,
    grid: np.ndarray,
    step: float = ORACLE_STEP,
) -> np.ndarray:
    """E_theta[Z_t] on the grid, N x len(grid), from the linear ODE

    m' = mu + g,  g' = a A (mu + g) - b g,  m(0) = g(0) = 0

    integrated with classical RK4 at a step no larger than ``step``.
    """
    if not isinstance(kernel, ExponentialKernel):
        raise UnsupportedKernelError("the ODE mean oracle needs an exponential kernel")
    grid = _check_oracle(graph, grid)
    N, a, b = graph.N, kernel.a, kernel.b
    A = graph.interaction_matrix
    drift = np.zeros((2 * N, 2 * N))
    drift[:N, N:] = np.eye(N)
    drift[N:, N:] = a * A - b * np.eye(N)
    source = np.concatenate([np.full(N, mu), a * mu * A.sum(axis=1)])

    def f(y: np.ndarray) -> np.ndarray:
        return drift @ y + source

    y = np.zeros(2 * N)
    out = np.empty((N, grid.size))
    t = 0.0
    for k, target in enumerate(grid):
        span = target - t
        n_steps = max(1, math.ceil(span / step - 1e-9)) if span > 0 else 0
        if n_steps:
            h = span / n_steps
            for _ in range(n_steps):
                k1 = f(y)
                k2 = f(y + 0.5 * h * k1)
                k3 = f(y + 0.5 * h * k2)
                k4 = f(y + h * k3)
                y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = target
        out[:, k] = y[:N]
    return out


def conditional_mean_series(
    graph: InteractionGraph, mu: float, kernel: Kernel, grid: np.ndarray
) -> np.ndarray:
    """E_theta[Z_t] = mu sum_n [int_0^t s phi^{*n}(t - s) ds] A^n 1, N x len(grid)."""
    grid = _check_oracle(graph, grid)
    A = graph.interaction_matrix
    rho = float(np.max(np.abs(np.linalg.eigvals(A))))
    if total_mass(kernel) * rho >= 1:
        raise RegimeError(f"Lambda rho(A_N) = {total_mass(kernel) * rho:.6g} >= 1")

    out = np.zeros((graph.N, grid.size))
    for k, t in enumerate(grid):
        if t == 0:
            continue
        power = np.ones(graph.N)
        total = np.zeros(graph.N)
        previous = math.inf
        for n in range(SERIES_MAX_TERMS):
            if n:
                power = A @ power
            term = delay_integral(kernel, n, float(t)) * power
            total += term
            size = float(np.max(np.abs(term)))
            if n and size <= previous and size < SERIES_RTOL * float(np.max(total)):
                break
            previous = size
        else:
            raise ConvergenceError(f"mean series did not settle at t={t}")
        out[:, k] = mu * total
    return out


def mean_count_trajectory(log: EventLog, K: int) -> Tuple[np.ndarray, np.ndarray]:
    """Jump times of Zbar^{N,K} and its value right after each jump."""
    merged = np.sort(np.concatenate(log.times[:K])) if K else np.empty(0)
    return merged, np.arange(1, merged.size + 1) / K
