import math

import numpy as np
import pytest

from hawkes_density.errors import (
    RangeError,
    RegimeError,
    ScaleError,
    SimulationExplosionError,
    UnsupportedKernelError,
)
from hawkes_density.models import EventLog, ExponentialKernel, SimConfig, TabulatedKernel
from hawkes_density.services.graph import resolvent_vectors, sample_graph
from hawkes_density.services.simulator import (
    conditional_mean_oracle,
    conditional_mean_series,
    counts_on_grid,
    mean_count_trajectory,
    simulate,
    simulate_exponential,
    simulate_thinning_general,
)
from hawkes_density.services.streams import derive_seed


@pytest.fixture
def mild_kernel():
    """Lambda = 0.5, so Lambda rho(A_N) <= 0.5 on any graph."""
    return ExponentialKernel(a=0.5, b=1.0)


def _config(graph, kernel, horizon, seed=0, mu=1.0, max_events=10_000_000):
    return SimConfig(
        graph=graph, mu=mu, kernel=kernel, horizon=horizon, seed=seed, max_events=max_events
    )


def test_counts_on_grid():
    log = EventLog(horizon=3.0, times=[[0.5, 1.0, 2.0], [1.5]])
    counts = counts_on_grid(log, [1.0, 2.5])
    assert counts.counts.tolist() == [[2, 3], [0, 1]]
    assert counts.mean.tolist() == [1.0, 2.0]


def test_counts_on_grid_out_of_range():
    log = EventLog(horizon=3.0, times=[[0.5], []])
    with pytest.raises(RangeError):
        counts_on_grid(log, [1.0, 4.0])


def test_event_log_validation():
    with pytest.raises(ValueError):
        EventLog(horizon=1.0, times=[[0.5, 2.0]])
    with pytest.raises(ValueError):
        EventLog(horizon=3.0, times=[[2.0, 1.0]])


def test_mean_count_trajectory():
    log = EventLog(horizon=4.0, times=[[1.0, 3.0], [2.0], [0.5]])
    jumps, values = mean_count_trajectory(log, 2)
    assert jumps.tolist() == [1.0, 2.0, 3.0]
    assert values.tolist() == [0.5, 1.0, 1.5]
    assert log.mean_count(2.5, K=2) == 1.0


def test_simulation_is_deterministic(mild_kernel):
    graph = sample_graph(10, 0.5, "independent", 4)
    first = simulate(_config(graph, mild_kernel, 20.0, seed=42))
    second = simulate(_config(graph, mild_kernel, 20.0, seed=42))
    assert first.total_events > 0
    assert all(np.array_equal(a, b) for a, b in zip(first.times, second.times))
    other = simulate(_config(graph, mild_kernel, 20.0, seed=43))
    assert not all(np.array_equal(a, b) for a, b in zip(first.times, other.times))


def test_simulated_events_are_sorted_and_in_range(mild_kernel):
    graph = sample_graph(5, 1.0, "independent", 0)
    log = simulate_thinning_general(_config(graph, mild_kernel, 10.0, seed=1))
    assert log.N == 5
    for row in log.times:
        assert np.all(np.diff(row) > 0)
        assert row.size == 0 or (row[0] > 0 and row[-1] <= 10.0)


def test_unsupported_kernels(ones_graph):
    hump = TabulatedKernel(grid=[0.0, 1.0, 2.0], values=[0.0, 1.0, 0.0])
    with pytest.raises(UnsupportedKernelError):
        simulate(_config(ones_graph, hump, 5.0))
    with pytest.raises(UnsupportedKernelError):
        table = TabulatedKernel(grid=[0, 1], values=[1, 0])
        simulate_exponential(_config(ones_graph, table, 5.0))


def test_explosion_guard(make_graph):
    """A supercritical single individual hits the event cap and keeps its partial log."""
    graph = make_graph(np.ones((1, 1)))
    cfg = _config(graph, ExponentialKernel(a=2.0, b=1.0), 1000.0, seed=3, max_events=100)
    with pytest.raises(SimulationExplosionError) as info:
        simulate(cfg)
    partial = info.value.partial_log
    assert partial.total_events == 101
    assert partial.horizon == partial.times[0][-1]


def test_long_quiet_gaps_with_a_fast_kernel(make_graph):
    """Gaps of many kernel time scales between events leave the state finite."""
    graph = make_graph(np.ones((1, 1)))
    fast = ExponentialKernel(a=50.0, b=100.0)
    T = 5000.0
    log = simulate_exponential(_config(graph, fast, T, seed=derive_seed(8, 0, 1)))
    # Lambda = 0.5: E Z_T = 2 T, sd about sqrt(8 T)
    assert abs(log.total_events - 2 * T) < 1000
    assert np.all(np.isfinite(log.times[0]))
    assert np.all(np.diff(log.times[0]) > 0)

    quiet = _config(graph, fast, T, seed=derive_seed(8, 1, 1), mu=1e-3)
    sparse = simulate_exponential(quiet)
    assert sparse.total_events < 100
    assert np.all(np.isfinite(sparse.times[0]))


def test_relabelling_individuals_permutes_the_counts(make_graph, mild_kernel):
    """Permuting the graph permutes the law of the per-individual counts."""
    base = sample_graph(4, 0.6, "independent", 21)
    perm = np.array([2, 0, 3, 1])
    theta = np.zeros_like(base.adjacency)
    theta[np.ix_(perm, perm)] = base.adjacency
    relabelled = make_graph(theta, p=0.6)

    T, replicas = 5.0, 400

    def totals(graph, stream):
        rows = []
        for r in range(replicas):
            cfg = _config(graph, mild_kernel, T, seed=derive_seed(stream, r, 1))
            rows.append([row.size for row in simulate(cfg).times])
        return np.array(rows, dtype=float)

    before = totals(base, 30)
    after = totals(relabelled, 31)
    for i in range(4):
        a, b = before[:, i], after[:, perm[i]]
        se = math.sqrt(a.var(ddof=1) / replicas + b.var(ddof=1) / replicas)
        assert abs(a.mean() - b.mean()) < 4 * se
    spread = before.mean(axis=1).var(ddof=1) + after.mean(axis=1).var(ddof=1)
    assert abs(before.mean() - after.mean()) < 4 * math.sqrt(spread / replicas)


def test_zero_graph_is_poisson(mild_kernel):
    graph = sample_graph(50, 0.0, "independent", 0)
    T = 200.0
    log = simulate(_config(graph, mild_kernel, T, seed=derive_seed(1, 0, 1)))
    totals = np.array([row.size for row in log.times], dtype=float)
    se = math.sqrt(T / totals.size)
    assert abs(totals.mean() - T) < 4 * se
    assert abs(totals.var(ddof=1) - T) < 4 * T * math.sqrt(2 / (totals.size - 1))


@pytest.mark.parametrize("simulator", [simulate_exponential, simulate_thinning_general])
def test_simulators_match_mean_oracle(mild_kernel, simulator):
    graph = sample_graph(3, 0.6, "independent", 5)
    T, mu = 5.0, 1.0
    expected = conditional_mean_oracle(graph, mu, mild_kernel, [T])[:, 0].sum()
    totals = np.array(
        [
            simulator(_config(graph, mild_kernel, T, seed=derive_seed(2, r, 1))).total_events
            for r in range(400)
        ],
        dtype=float,
    )
    se = totals.std(ddof=1) / math.sqrt(totals.size)
    assert abs(totals.mean() - expected) < 4 * se


def test_mean_oracle_closed_form(make_graph, mild_kernel):
    """N = 1, theta = 1, a = 0.5, b = 1: m(t) = 2t - 2(1 - exp(-t/2))."""
    grid = np.array([0.0, 0.5, 1.0, 4.0, 10.0])
    m = conditional_mean_oracle(make_graph(np.ones((1, 1))), 1.0, mild_kernel, grid)[0]
    expected = 2 * grid - 2 * (1 - np.exp(-grid / 2))
    assert m == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_mean_oracle_step_halving(mild_kernel):
    graph = sample_graph(4, 0.5, "independent", 9)
    grid = [1.0, 3.0, 7.0]
    coarse = conditional_mean_oracle(graph, 1.0, mild_kernel, grid, step=0.01)
    fine = conditional_mean_oracle(graph, 1.0, mild_kernel, grid, step=0.005)
    assert np.max(np.abs(coarse - fine)) < 1e-8


def test_mean_series_matches_ode(mild_kernel):
    graph = sample_graph(5, 0.5, "independent", 13)
    grid = [0.5, 2.0, 5.0]
    series = conditional_mean_series(graph, 1.5, mild_kernel, grid)
    ode = conditional_mean_oracle(graph, 1.5, mild_kernel, grid)
    assert series == pytest.approx(ode, rel=1e-6)


def test_mean_series_needs_contraction(ones_graph, exp_kernel):
    with pytest.raises(RegimeError):
        conditional_mean_series(ones_graph, 1.0, exp_kernel, [1.0])


def test_mean_oracles_are_small_scale_only(mild_kernel):
    graph = sample_graph(51, 0.1, "independent", 0)
    with pytest.raises(ScaleError):
        conditional_mean_oracle(graph, 1.0, mild_kernel, [1.0])
    with pytest.raises(ScaleError):
        conditional_mean_series(graph, 1.0, mild_kernel, [1.0])


@pytest.mark.slow
def test_subcritical_mean_count_grows_linearly(exp_kernel):
    """Zbar_T / T approaches mu times the mean row sum of Q_N."""
    N, p, T = 200, 0.35, 200.0
    graph = sample_graph(N, p, "independent", derive_seed(3, 0, 0))
    ell = resolvent_vectors(graph, 2.0, p, require_omega1=False).ell
    log = simulate(_config(graph, exp_kernel, T, seed=derive_seed(3, 0, 1)))
    assert log.mean_count() / T == pytest.approx(ell.mean(), rel=0.05)


@pytest.mark.slow
def test_supercritical_growth_rate(exp_kernel):
    """log Zbar_t grows at roughly alpha_0 = p a - b = 0.7."""
    N, p, T = 200, 0.85, 10.0
    graph = sample_graph(N, p, "independent", derive_seed(4, 0, 0))
    log = simulate(_config(graph, exp_kernel, T, seed=derive_seed(4, 0, 1)))
    slope = (math.log(log.mean_count(T)) - math.log(log.mean_count(T / 2))) / (T / 2)
    assert 0.55 <= slope <= 0.85
