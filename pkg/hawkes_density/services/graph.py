"""Interaction graph sampling and the graph-only quantities built on A_N.

Q_N = (I - Lambda A_N)^-1 is never formed for large N: row sums, column sums
and partial column sums come from one LU factorization reused across
right-hand sides.
"""
import logging
from pathlib import Path
from typing import Union

import numpy as np
from scipy import linalg

from ..errors import (
    ConvergenceError,
    DegenerateError,
    InternalError,
    NotIrreducibleError,
    OutputError,
    RegimeError,
    ScaleError,
)
from ..models.graph import GraphMode, InteractionGraph, ResolventData, SpectralData
from .estimators import phi_map
from .streams import generator

logger = logging.getLogger(__name__)

SOLVE_RESIDUAL = 1e-10
PERRON_TOL = 1e-12
PERRON_MAX_ITER = 10_000
DENSE_RESOLVENT_CAP = 50


def sample_graph(
    N: int,
    p: float,
    mode: Union[GraphMode, str] = GraphMode.INDEPENDENT,
    rng: Union[np.random.Generator, int] = 0,
) -> InteractionGraph:
    """Draw theta with i.i.d. Bernoulli(p) entries.

    Symmetric mode draws the upper triangle including the diagonal in
    row-major order, N(N+1)/2 uniforms, and mirrors it.
    """
    if N < 1 or not 0 <= p <= 1:
        raise ValueError(f"need N >= 1 and p in [0, 1], got N={N}, p={p}")
    mode = GraphMode(mode)
    seed = rng if isinstance(rng, int) else None
    rng = generator(rng) if isinstance(rng, int) else rng
    if mode is GraphMode.INDEPENDENT:
        theta = (rng.random((N, N)) < p).astype(np.uint8)
    else:
        rows, cols = np.triu_indices(N)
        upper = (rng.random(rows.size) < p).astype(np.uint8)
        theta = np.zeros((N, N), dtype=np.uint8)
        theta[rows, cols] = upper
        theta[cols, rows] = upper
    return InteractionGraph(N=N, mode=mode, p_nominal=p, adjacency=theta, seed=seed)


def omega1_threshold(lam: float, p: float) -> float:
    return (1.0 + lam * p) / 2.0


def check_omega1(graph: InteractionGraph, lam: float, p: float) -> bool:
    """Lambda |||A_N|||_r <= (1 + Lambda p) / 2 for r = 1 and r = infinity."""
    if lam * p >= 1:
        raise RegimeError(f"Omega^1 is a subcritical event, got Lambda p = {lam * p:.6g}")
    theta = graph.adjacency.astype(np.int64)
    a = omega1_threshold(lam, p)
    max_col = theta.sum(axis=0).max() / graph.N
    max_row = theta.sum(axis=1).max() / graph.N
    return bool(lam * max_col <= a and lam * max_row <= a)


def check_omega2(graph: InteractionGraph, p: float) -> bool:
    """|N A_N^2(i,j) - p^2| < p^2 / (2 N^{3/8}) everywhere, and mean of A_N > p / 2."""
    if not 0 < p <= 1:
        raise ValueError(f"Omega^2 needs p in (0, 1], got {p}")
    N = graph.N
    theta = graph.adjacency.astype(np.float64)
    scaled_square = theta @ theta / N  # N * A_N^2
    bound = p**2 / (2.0 * N ** (3.0 / 8.0))
    mean_ok = theta.sum() / N**2 > p / 2
    return bool(mean_ok and np.all(np.abs(scaled_square - p**2) < bound))


def _factorize(graph: InteractionGraph, lam: float):
    system = np.eye(graph.N) - lam * graph.interaction_matrix
    return system, linalg.lu_factor(system, check_finite=False)


def resolvent_vectors(
    graph: InteractionGraph, lam: float, p: float, require_omega1: bool = True
) -> ResolventData:
    """ell_N (row sums) and c_N (column sums) of Q_N.

    With ``require_omega1`` the vectors are computed only on Omega^1. Without
    it, any solve whose sums are >= 1 with a small residual is accepted; for a
    nonnegative A_N that is the case exactly when Lambda rho(A_N) < 1.
    """
    a = omega1_threshold(lam, p)
    omega1 = check_omega1(graph, lam, p) if lam * p < 1 else False
    if require_omega1 and not omega1:
        logger.debug("Omega^1 fails, resolvent not computed")
        return ResolventData(lambda_used=lam, omega1=False, threshold=a)

    system, factor = _factorize(graph, lam)
    ones = np.ones(graph.N)
    ell = linalg.lu_solve(factor, ones, check_finite=False)
    col = linalg.lu_solve(factor, ones, trans=1, check_finite=False)
    residual = float(
        max(
            np.max(np.abs(system @ ell - ones)),
            np.max(np.abs(system.T @ col - ones)),
        )
    )
    valid = (
        np.all(np.isfinite(ell))
        and residual < SOLVE_RESIDUAL
        and ell.min() >= 1 - 1e-12
        and col.min() >= 1 - 1e-12
    )
    if not valid:
        if omega1:
            raise InternalError(
                f"resolvent solve failed on Omega^1 (residual {residual:.3g})"
            )
        logger.debug(f"resolvent rejected: residual {residual:.3g}, min ell {ell.min():.3g}")
        return ResolventData(lambda_used=lam, omega1=False, threshold=a, residual=residual)
    for v in (ell, col):
        v.flags.writeable = False
    return ResolventData(
        ell=ell,
        col=col,
        lambda_used=lam,
        omega1=omega1,
        threshold=a,
        residual=residual,
        factor=factor,
    )


def resolvent_matrix(graph: InteractionGraph, lam: float) -> np.ndarray:
    """Dense Q_N, for spot checks on small graphs only."""
    if graph.N > DENSE_RESOLVENT_CAP:
        raise ScaleError(f"dense resolvent limited to N <= {DENSE_RESOLVENT_CAP}")
    _, factor = _factorize(graph, lam)
    return linalg.lu_solve(factor, np.eye(graph.N), check_finite=False)


def perron(
    graph: InteractionGraph,
    require_omega2: bool = True,
    tol: float = PERRON_TOL,
    max_iter: int = PERRON_MAX_ITER,
) -> SpectralData:
    """Perron-Frobenius pair of A_N by power iteration on A_N^2.

    ``require_omega2`` demands the good event; otherwise strict positivity of
    A_N^2 is enough for the iteration to converge.
    """
    A = graph.interaction_matrix
    A2 = A @ A
    omega2 = check_omega2(graph, graph.p_nominal) if graph.p_nominal > 0 else False
    if require_omega2 and not omega2:
        raise NotIrreducibleError("Omega^2 fails for this graph")
    if not np.all(A2 > 0):
        raise NotIrreducibleError("A_N^2 has zero entries")

    N = graph.N
    x = np.full(N, 1.0 / np.sqrt(N))
    for iteration in range(1, max_iter + 1):
        y = A2 @ x
        y /= np.linalg.norm(y)
        step = np.linalg.norm(y - x)
        x = y
        if step < tol:
            break
    else:
        raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")

    rho = float(np.sqrt(x @ (A2 @ x)))
    V = x * np.sqrt(N)
    residual = float(np.linalg.norm(A @ V - rho * V) / np.sqrt(N))
    logger.debug(
        f"perron: rho={rho:.12g} after {iteration} iterations, residual {residual:.3g}"
    )
    V.flags.writeable = False
    return SpectralData(rho=rho, V=V, omega2=omega2, residual=residual, iterations=iteration)


def conjectured_sub_limit(
    graph: InteractionGraph, lam: float, mu: float, K: int, strict: bool = False
) -> float:
    """Graph-only limit of the subcritical estimator of p as t grows."""
    N = graph.N
    if not 1 <= K <= N:
        raise ValueError(f"K must be in [1, {N}], got {K}")
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    data = resolvent_vectors(graph, lam, graph.p_nominal, require_omega1=strict)
    if not data.solved:
        raise RegimeError("Lambda A_N is not a contraction for this graph")
    ell = data.ell
    assert ell is not None
    observed = np.zeros(N)
    observed[:K] = 1.0
    partial_cols = linalg.lu_solve(data.factor, observed, trans=1, check_finite=False)

    ell_bar = float(ell[:K].mean())
    E = mu * ell_bar
    V = mu**2 * (N / K) * float(np.sum((ell[:K] - ell_bar) ** 2))
    W = mu * (N / K**2) * float(np.sum(partial_cols**2 * ell))
    try:
        return phi_map(E, V, abs(W - (N - K) / K * E))[2]
    except DegenerateError as e:
        raise DegenerateError(f"degenerate graph: {e}") from e


def conjectured_sup_limit(graph: InteractionGraph, K: int, strict: bool = False) -> float:
    """Graph-only limit of the supercritical estimator of p."""
    if not 1 <= K <= graph.N:
        raise ValueError(f"K must be in [1, {graph.N}], got {K}")
    V = perron(graph, require_omega2=strict).V[:K]
    V_bar = float(V.mean())
    U = graph.N / (K * V_bar**2) * float(np.sum((V - V_bar) ** 2))
    return 1.0 / (1.0 + U)


def dump_adjacency(graph: InteractionGraph, path: Union[str, Path]) -> Path:
    """One line of '0'/'1' characters per row of theta."""
    path = Path(path)
    try:
        with open(path, "w", newline="\n") as f:
            for row in graph.adjacency:
                f.write("".join("1" if v else "0" for v in row) + "\n")
    except OSError as e:
        raise OutputError(f"cannot write adjacency dump {path}: {e}") from e
    return path
