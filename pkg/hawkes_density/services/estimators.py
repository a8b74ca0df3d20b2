"""Statistics computed from observed counts.

Subcritical side: the rate E, the cross-sectional dispersion V, the temporal
dispersions Z_Delta / Z_2Delta and W, inverted through the moment map Phi.
Supercritical side: the normalized dispersion U of the final counts and
P = 1 / (U + 1). ``estimate_p`` switches between the two with the
log-count detector.

All statistics use the first K individuals of an N-dimensional system; the
(N - K) E / K term corrects W for the unobserved part.
"""
import logging
import math
from typing import Optional, Tuple, Union

import numpy as np

from ..errors import DegenerateError, DomainError, ScheduleError
from ..models.estimates import (
    EstimateRecord,
    ParamEstimate,
    Regime,
    RegimeDecision,
    SubEstimates,
    SupEstimates,
)
from ..models.simulation import CountsGrid, EventLog
from .simulator import counts_on_grid

logger = logging.getLogger(__name__)

DEFAULT_Q = 12.0
LOW_COUNT_FLOOR = 10.0
LATTICE_RTOL = 1e-9


def _observed(counts: CountsGrid, K: Optional[int], N: Optional[int]) -> Tuple[int, int]:
    K = counts.N if K is None else K
    N = counts.N if N is None else N
    if not 1 <= K <= counts.N:
        raise ValueError(f"K={K} must be in [1, {counts.N}]")
    if K > N:
        raise ValueError(f"K={K} exceeds N={N}")
    return K, N


def _increments(counts: CountsGrid, t: float, K: int) -> np.ndarray:
    return (counts.at(2 * t, K) - counts.at(t, K)).astype(float)


def estimator_E(
    counts: CountsGrid, t: float, K: Optional[int] = None, N: Optional[int] = None
) -> float:
    """(Zbar^K_{2t} - Zbar^K_t) / t."""
    if t <= 0:
        raise DomainError(f"estimator_E needs t > 0, got {t}")
    K, N = _observed(counts, K, N)
    return float(_increments(counts, t, K).mean() / t)


def estimator_V(
    counts: CountsGrid,
    t: float,
    K: Optional[int] = None,
    N: Optional[int] = None,
    E: Optional[float] = None,
) -> float:
    """(N/K) sum_i ((Z^i_{2t} - Z^i_t)/t - E)^2 - (N/t) E; may be negative."""
    K, N = _observed(counts, K, N)
    E = estimator_E(counts, t, K, N) if E is None else E
    rates = _increments(counts, t, K) / t
    return float(N / K * np.sum((rates - E) ** 2) - N / t * E)


def lattice_size(t: float, delta: float) -> int:
    """m = t / (2 Delta), which must be a positive integer."""
    if delta <= 0:
        raise ScheduleError(f"window must be positive, got {delta}")
    ratio = t / (2 * delta)
    m = round(ratio)
    if m < 1 or abs(ratio - m) > LATTICE_RTOL * max(1.0, ratio):
        raise ScheduleError(f"t/(2 Delta) = {ratio:.12g} is not a positive integer")
    return int(m)


def delta_schedule(t: float, q: float = DEFAULT_Q) -> float:
    """Delta_t = t / (2 floor(t^{1 - 4/(q+1)}))."""
    if q <= 3:
        raise ScheduleError(f"moment order q must exceed 3, got {q}")
    if t < 1:
        raise ScheduleError(f"window schedule needs t >= 1, got {t}")
    m = math.floor(t ** (1.0 - 4.0 / (q + 1.0)))
    if m == 0:
        raise ScheduleError(f"t={t} too small for q={q}")
    return t / (2 * m)


def lattice(t: float, delta: float) -> np.ndarray:
    """The points t, t + Delta, ..., 2t."""
    n = 2 * lattice_size(t, delta)
    return np.linspace(t, 2 * t, n + 1)


def _dispersion(zbar: np.ndarray, t: float, step: float, N: int, E: float) -> float:
    return float(N / t * np.sum((np.diff(zbar) - step * E) ** 2))


def estimator_ZW(
    counts: CountsGrid,
    t: float,
    delta: float,
    K: Optional[int] = None,
    N: Optional[int] = None,
    E: Optional[float] = None,
) -> Tuple[float, float, float]:
    """(Z_Delta, Z_2Delta, W) on the Delta-lattice over (t, 2t]."""
    K, N = _observed(counts, K, N)
    m = lattice_size(t, delta)
    E = estimator_E(counts, t, K, N) if E is None else E
    observed = counts.counts[:K]

    def mean_at(points: np.ndarray) -> np.ndarray:
        idx = [counts.index_of(float(s)) for s in points]
        return observed[:, idx].mean(axis=0)

    z_delta = _dispersion(mean_at(np.linspace(t, 2 * t, 2 * m + 1)), t, delta, N, E)
    z_2delta = _dispersion(mean_at(np.linspace(t, 2 * t, m + 1)), t, 2 * delta, N, E)
    return z_delta, z_2delta, 2 * z_2delta - z_delta


def phi_map(u: float, v: float, w: float) -> Tuple[float, float, float]:
    """Phi(u, v, w) = (mu, Lambda, p) from the limits of (E, V, W)."""
    if u <= 0 or w <= 0:
        raise DegenerateError(f"Phi needs u > 0 and w > 0, got u={u:.6g}, w={w:.6g}")
    phi1 = u * math.sqrt(u / w)
    gap = u - phi1
    if gap == 0:
        raise DegenerateError("u - Phi_1 = 0: Lambda is not identifiable")
    phi2 = (v + gap**2) / (u * gap)
    if phi2 == 0:
        raise DegenerateError("Phi_2 = 0: p is not identifiable")
    phi3 = (1.0 - phi1 / u) / phi2
    return phi1, phi2, phi3


def in_domain(u: float, v: float, w: float) -> bool:
    return w > u > 0 and v >= 0


def invert_phi(u: float, v: float, w: float) -> ParamEstimate:
    """Psi = 1_D Phi: zero estimates outside D = {w > u > 0, v >= 0}."""
    if not in_domain(u, v, w):
        return ParamEstimate(mu_hat=0.0, lambda_hat=0.0, p_hat=0.0, in_domain=False)
    mu_hat, lambda_hat, p_hat = phi_map(u, v, w)
    return ParamEstimate(mu_hat=mu_hat, lambda_hat=lambda_hat, p_hat=p_hat, in_domain=True)


def sub_estimates(
    counts: CountsGrid,
    t: float,
    delta: float,
    K: Optional[int] = None,
    N: Optional[int] = None,
) -> SubEstimates:
    K, N = _observed(counts, K, N)
    E = estimator_E(counts, t, K, N)
    V = estimator_V(counts, t, K, N, E)
    z_delta, z_2delta, W = estimator_ZW(counts, t, delta, K, N, E)
    return SubEstimates(
        t=t, delta=delta, K=K, N=N, E=E, V=V, Z_delta=z_delta, Z_2delta=z_2delta, W=W
    )


def invert_practical(stats: SubEstimates) -> ParamEstimate:
    """Phi_3 at (E, V, |W - (N-K)E/K|); the full triple only inside D."""
    w = abs(stats.w_corrected)
    if in_domain(stats.E, stats.V, w):
        return invert_phi(stats.E, stats.V, w)
    _, _, p_hat = phi_map(stats.E, stats.V, w)
    return ParamEstimate(p_hat=p_hat, in_domain=False)


def estimation_grid(
    T: float, q: float = DEFAULT_Q, delta: Optional[float] = None
) -> np.ndarray:
    """Time points needed by the subcritical statistics at t = T/2."""
    t = T / 2
    return lattice(t, delta_schedule(t, q) if delta is None else delta)


def estimate_subcritical(
    counts: CountsGrid,
    K: Optional[int] = None,
    N: Optional[int] = None,
    q: float = DEFAULT_Q,
    T: Optional[float] = None,
    delta: Optional[float] = None,
) -> ParamEstimate:
    """p_hat (and mu_hat, Lambda_hat inside D) from counts on [0, T]."""
    T = float(counts.grid[-1]) if T is None else T
    t = T / 2
    delta = delta_schedule(t, q) if delta is None else delta
    return invert_practical(sub_estimates(counts, t, delta, K, N))


def estimator_U_and_P(
    counts: CountsGrid,
    T: Optional[float] = None,
    K: Optional[int] = None,
    N: Optional[int] = None,
) -> SupEstimates:
    """U = [(N/K) sum_i ((Z^i_T - Zbar)/Zbar)^2 - N/Zbar] 1{Zbar > 0}.

    P = 1/(U+1) 1{U >= 0}.
    """
    K, N = _observed(counts, K, N)
    T = float(counts.grid[-1]) if T is None else T
    final = counts.at(T, K).astype(float)
    zbar = float(final.mean())
    if zbar > 0:
        U = float(N / K * np.sum(((final - zbar) / zbar) ** 2) - N / zbar)
    else:
        U = 0.0
    P = 1.0 / (U + 1.0) if U >= 0 else 0.0
    return SupEstimates(U=U, P=P, mean_count=zbar, low_count_flag=zbar < LOW_COUNT_FLOOR)


def detect_regime(mean_count: float, T: float) -> RegimeDecision:
    """Supercritical iff log(Zbar_T) > (log T)^2; ties and Zbar_T = 0 are subcritical."""
    if T <= 1:
        raise DomainError(f"regime detector needs T > 1, got {T}")
    if mean_count < 0:
        raise ValueError(f"mean count must be nonnegative, got {mean_count}")
    threshold = math.log(T) ** 2
    log_count = math.log(mean_count) if mean_count > 0 else -math.inf
    regime = Regime.SUPERCRITICAL if log_count > threshold else Regime.SUBCRITICAL
    return RegimeDecision(regime=regime, log_mean_count=log_count, threshold=threshold)


def estimate_p(
    data: Union[CountsGrid, EventLog],
    K: Optional[int] = None,
    N: Optional[int] = None,
    q: float = DEFAULT_Q,
    T: Optional[float] = None,
    delta: Optional[float] = None,
) -> EstimateRecord:
    """Combined estimator of p at time T, with every statistic it looked at."""
    if isinstance(data, EventLog):
        T = data.horizon if T is None else T
        decision_grid = np.array([T])
        if T / 2 >= 1:
            decision_grid = estimation_grid(T, q, delta)
        counts = counts_on_grid(data, decision_grid)
    else:
        counts = data
        T = float(counts.grid[-1]) if T is None else T

    K, N = _observed(counts, K, N)
    sup = estimator_U_and_P(counts, T, K, N)
    decision = detect_regime(sup.mean_count, T)
    if decision.regime is Regime.SUPERCRITICAL:
        return EstimateRecord(
            t=T,
            regime=decision.regime,
            U=sup.U,
            P=sup.P,
            p_hat=sup.P,
            low_count_flag=sup.low_count_flag,
        )

    t = T / 2
    stats = sub_estimates(counts, t, delta_schedule(t, q) if delta is None else delta, K, N)
    params = invert_practical(stats)
    if stats.W < 0:
        logger.debug(f"negative W={stats.W:.6g} at t={t:.6g}, using |W - (N-K)E/K|")
    return EstimateRecord(
        t=T,
        regime=decision.regime,
        E=stats.E,
        V=stats.V,
        W=stats.W,
        U=sup.U,
        P=sup.P,
        mu_hat=params.mu_hat,
        lambda_hat=params.lambda_hat,
        p_hat=params.p_hat,
        low_count_flag=sup.low_count_flag,
        in_domain=params.in_domain,
    )
