import numpy as np
import pytest

from hawkes_density.errors import DegenerateError, NotIrreducibleError, RegimeError, ScaleError
from hawkes_density.models import GraphMode
from hawkes_density.services.graph import (
    check_omega1,
    check_omega2,
    conjectured_sub_limit,
    conjectured_sup_limit,
    dump_adjacency,
    perron,
    resolvent_matrix,
    resolvent_vectors,
    sample_graph,
)
from hawkes_density.services.streams import derive_seed


def test_sample_graph_trivial_densities():
    assert np.array_equal(sample_graph(4, 1.0, "independent", 1).adjacency, np.ones((4, 4)))
    assert not sample_graph(4, 0.0, "symmetric", 1).adjacency.any()


def test_sample_graph_density():
    graph = sample_graph(1000, 0.35, GraphMode.INDEPENDENT, 12345)
    assert abs(graph.adjacency.mean() - 0.35) < 0.003
    assert graph.seed == 12345


def test_sample_graph_symmetric():
    graph = sample_graph(50, 0.4, GraphMode.SYMMETRIC, 7)
    assert np.array_equal(graph.adjacency, graph.adjacency.T)


def test_sample_graph_is_reproducible():
    first = sample_graph(30, 0.5, "independent", 99)
    second = sample_graph(30, 0.5, "independent", 99)
    assert np.array_equal(first.adjacency, second.adjacency)
    other = sample_graph(30, 0.5, "independent", 100)
    assert not np.array_equal(first.adjacency, other.adjacency)


def test_graph_is_read_only():
    graph = sample_graph(5, 0.5, "independent", 3)
    with pytest.raises(ValueError):
        graph.adjacency[0, 0] = 1


def test_check_omega1_examples(make_graph, zero_graph):
    """Test the Omega^1 check on hand-computable graphs."""
    assert not check_omega1(make_graph(np.ones((2, 2)), p=0.35), 2.0, 0.35)
    assert check_omega1(zero_graph, 2.0, 0.35)
    assert check_omega1(make_graph(np.eye(4), p=0.35), 2.0, 0.35)


def test_check_omega1_rejects_supercritical(zero_graph):
    with pytest.raises(RegimeError):
        check_omega1(zero_graph, 2.0, 0.5)


def test_check_omega2_examples(make_graph, zero_graph):
    assert check_omega2(make_graph(np.ones((5, 5))), 1.0)
    assert not check_omega2(zero_graph, 1.0)
    assert not check_omega2(make_graph(np.eye(2)), 1.0)


def test_omega1_frequency():
    """Omega^1 holds for essentially every graph when max row counts stay far from the bound."""
    hits = sum(
        check_omega1(sample_graph(250, 0.35, "independent", derive_seed(5, r, 0)), 1.0, 0.35)
        for r in range(500)
    )
    assert hits / 500 >= 0.99


def test_omega2_frequency_small_sample():
    hits = sum(
        check_omega2(sample_graph(1000, 0.99, "independent", derive_seed(6, r, 0)), 0.99)
        for r in range(10)
    )
    assert hits == 10


@pytest.mark.slow
def test_omega2_frequency():
    hits = sum(
        check_omega2(sample_graph(1000, 0.99, "independent", derive_seed(6, r, 0)), 0.99)
        for r in range(500)
    )
    assert hits / 500 >= 0.99


def test_resolvent_trivial_graphs(zero_graph, ones_graph):
    data = resolvent_vectors(zero_graph, 2.0, 0.35)
    assert data.omega1
    assert np.array_equal(data.ell, np.ones(4))
    assert np.array_equal(data.col, np.ones(4))

    data = resolvent_vectors(ones_graph, 0.5, 1.0)
    assert data.omega1
    assert data.ell == pytest.approx([2.0, 2.0], abs=1e-12)
    assert data.col == pytest.approx([2.0, 2.0], abs=1e-12)
    assert data.residual < 1e-10


def test_resolvent_matches_dense_inverse():
    graph = sample_graph(3, 0.6, "independent", 11)
    data = resolvent_vectors(graph, 0.5, 0.6, require_omega1=False)
    Q = np.linalg.inv(np.eye(3) - 0.5 * graph.interaction_matrix)
    assert np.max(np.abs(data.ell - Q.sum(axis=1))) < 1e-12
    assert np.max(np.abs(data.col - Q.sum(axis=0))) < 1e-12


def test_resolvent_skipped_off_omega1(make_graph):
    data = resolvent_vectors(make_graph(np.ones((2, 2)), p=0.35), 2.0, 0.35)
    assert not data.solved
    assert not data.omega1
    assert data.threshold == pytest.approx(0.85)


def test_resolvent_bounds_on_omega1():
    lam, p = 1.0, 0.2
    graph = sample_graph(50, p, "independent", 21)
    assert check_omega1(graph, lam, p)
    a = (1 + lam * p) / 2
    Q = resolvent_matrix(graph, lam)
    identity = np.eye(50)
    assert np.all(Q >= identity - 1e-12)
    assert np.all(Q <= identity + lam / (1 - a) / 50 + 1e-12)
    ell = resolvent_vectors(graph, lam, p).ell
    assert np.all(ell >= 1) and np.all(ell <= 1 / (1 - a))


def test_resolvent_matrix_scale_cap():
    with pytest.raises(ScaleError):
        resolvent_matrix(sample_graph(60, 0.1, "independent", 0), 1.0)


def test_perron_all_ones():
    graph = sample_graph(5, 1.0, "independent", 0)
    data = perron(graph)
    assert data.rho == pytest.approx(1.0, abs=1e-12)
    assert data.V == pytest.approx(np.ones(5), abs=1e-12)
    assert data.omega2


def test_perron_requires_irreducibility(make_graph):
    with pytest.raises(NotIrreducibleError):
        perron(make_graph(np.eye(2), p=1.0))
    with pytest.raises(NotIrreducibleError):
        perron(make_graph(np.eye(2), p=1.0), require_omega2=False)


def test_perron_dense_graph():
    graph = sample_graph(200, 0.5, "independent", 8)
    data = perron(graph, require_omega2=False)
    assert data.residual < 1e-10
    assert np.linalg.norm(data.V) == pytest.approx(np.sqrt(200), rel=1e-10)
    assert np.all(data.V > 0)
    assert data.rho == pytest.approx(np.max(np.abs(np.linalg.eigvals(graph.interaction_matrix))), rel=1e-9)


@pytest.mark.slow
def test_perron_bracket_large_graphs():
    N, p = 1000, 0.5
    half_width = 1 / (2 * N ** (3 / 8))
    for r in range(50):
        graph = sample_graph(N, p, "independent", derive_seed(9, r, 0))
        data = perron(graph, require_omega2=False)
        assert data.residual < 1e-10
        assert np.all((data.V >= 0.5) & (data.V <= 2.0))
        assert p * (1 - half_width) <= data.rho <= p * (1 + half_width)


def test_conjectured_sub_limit_all_ones(ones_graph):
    assert conjectured_sub_limit(ones_graph, 0.5, 1.0, 2) == pytest.approx(1.0, abs=1e-12)


def test_conjectured_sub_limit_degenerate(zero_graph):
    with pytest.raises(DegenerateError):
        conjectured_sub_limit(zero_graph, 2.0, 1.0, 4)


def test_conjectured_limits_permutation_invariant():
    graph = sample_graph(30, 0.3, "independent", 17)
    perm = np.random.default_rng(0).permutation(30)
    shuffled = graph.permuted(perm)
    assert conjectured_sub_limit(shuffled, 2.0, 1.0, 30) == pytest.approx(
        conjectured_sub_limit(graph, 2.0, 1.0, 30), rel=1e-10
    )

    dense = sample_graph(30, 0.85, "independent", 18)
    assert conjectured_sup_limit(dense.permuted(perm), 30) == pytest.approx(
        conjectured_sup_limit(dense, 30), rel=1e-10
    )


def test_conjectured_sup_limit_all_ones():
    assert conjectured_sup_limit(sample_graph(6, 1.0, "independent", 0), 6) == pytest.approx(1.0)


def test_dump_adjacency(tmp_path, make_graph):
    path = dump_adjacency(make_graph(np.array([[1, 0], [0, 1]])), tmp_path / "theta.txt")
    assert path.read_text() == "10\n01\n"
