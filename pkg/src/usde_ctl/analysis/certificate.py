"""Super-twisting gain certificate, finite-time bound and stability constants.

The certificate checks the two 2x2 matrices of the per-joint
super-twisting Lyapunov function: ``P`` (the quadratic form) and ``Q``
(the negative of its derivative, perturbation bounds included). Both must
be positive definite; the convergence rate ``gamma`` follows from their
eigenvalues.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .lyapunov import st_P

PD_THRESHOLD = 1e-9


def _positive(name, x, allow_zero=False):
    x = float(x)
    ok = x >= 0 if allow_zero else x > 0
    if not (math.isfinite(x) and ok):
        raise ValueError(f"{name} must be {'non-negative' if allow_zero else 'positive'}, got {x}")
    return x


def st_Q(T1: float, T2: float, delta1: float = 0.0, delta2: float = 0.0) -> np.ndarray:
    """Symmetric decay matrix of the super-twisting Lyapunov function.

    The upper-right entry mirrors the lower-left one.
    """
    q11 = 2.0 * T2 + T1**2 - (4.0 * T2 / T1 + T1) * delta1 - 2.0 * delta2
    q21 = -(T1 + 2.0 * delta1 + 2.0 * delta2 / T1)
    return 0.5 * T1 * np.array([[q11, q21], [q21, 1.0]])


@dataclass(frozen=True)
class STGainCertificate:
    T1: float
    T2: float
    delta1: float
    delta2: float
    P: np.ndarray
    Q: np.ndarray
    gamma: float
    pd_ok: bool

    @property
    def eig_P(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.P)

    @property
    def eig_Q(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.Q)


def st_gain_certificate(T1, T2, delta1=0.0, delta2=0.0) -> STGainCertificate:
    """Build P and Q for one joint and test both by eigenvalues.

    ``gamma = sqrt(lmin(P)) lmin(Q) / lmax(P)``; it is reported even when
    the certificate fails (it is then not a valid rate).
    """
    T1 = _positive("T1", T1)
    T2 = _positive("T2", T2)
    delta1 = _positive("delta1", delta1, allow_zero=True)
    delta2 = _positive("delta2", delta2, allow_zero=True)
    P = st_P(T1, T2)
    Q = st_Q(T1, T2, delta1, delta2)
    lp = np.linalg.eigvalsh(P)
    lq = np.linalg.eigvalsh(Q)
    pd_ok = bool(lp[0] > PD_THRESHOLD and lq[0] > PD_THRESHOLD)
    gamma = math.sqrt(max(lp[0], 0.0)) * lq[0] / lp[-1]
    return STGainCertificate(T1, T2, delta1, delta2, P, Q, float(gamma), pd_ok)


def certify_gains(T1, T2, delta1=0.0, delta2=0.0) -> list[STGainCertificate]:
    """Per-joint certificates; scalars broadcast against the gain vectors."""
    T1, T2, delta1, delta2 = np.broadcast_arrays(
        np.atleast_1d(np.asarray(T1, dtype=float)),
        np.atleast_1d(np.asarray(T2, dtype=float)),
        np.atleast_1d(np.asarray(delta1, dtype=float)),
        np.atleast_1d(np.asarray(delta2, dtype=float)),
    )
    return [st_gain_certificate(*args) for args in zip(T1, T2, delta1, delta2)]


# ---------------------------------------------------------------- bounds


def alpha3(gammas, k: float) -> float:
    """``min{gamma_i, sqrt(2)/(2k)}``."""
    return float(min(min(np.atleast_1d(gammas)), math.sqrt(2.0) / (2.0 * k)))


def beta3(k: float, d0: float) -> float:
    return 1.0 / (8.0 * k) + 0.5 * k * d0**2


def finite_time_bound(V3_initial: float, alpha3: float, theta0: float) -> float:
    """``t_f = 2 V3(0)^1/2 / (theta0 alpha3)``."""
    V3_initial = _positive("V3_initial", V3_initial, allow_zero=True)
    if not (math.isfinite(alpha3) and alpha3 > 0):
        raise ValueError(f"alpha3 must be positive (gains fail the certificate), got {alpha3}")
    if not 0.0 < theta0 < 1.0:
        raise ValueError(f"theta0 must lie in (0, 1), got {theta0}")
    return 2.0 * math.sqrt(V3_initial) / (theta0 * alpha3)


def residual_band(alpha3: float, beta3: float, theta0: float) -> float:
    """Level of ``V^1/2`` below which ``dV/dt <= -alpha V^1/2 + beta`` no
    longer guarantees the ``theta0`` fraction of the decay rate."""
    if not 0.0 < theta0 < 1.0:
        raise ValueError(f"theta0 must lie in (0, 1), got {theta0}")
    return beta3 / ((1.0 - theta0) * alpha3)


def alpha1(K, M_max_eig: float, k: float) -> float:
    """``min{gamma1 / lmax(M), 1/k - 1/gamma1}`` with ``gamma1 = lmin(K)``."""
    g1 = float(np.min(K))
    return min(g1 / M_max_eig, 1.0 / k - 1.0 / g1)


def beta1(k: float, d0: float) -> float:
    return 0.5 * k * d0**2


@dataclass(frozen=True)
class StabilityMonitorConfig:
    """Free constants of the stability arguments."""

    d0: float = 1.0
    K0: float = 1.0
    theta0: float = 0.5
    gamma1: float | None = None  # default: lmin(K)
    gamma2: float = 1.0
    gamma3: float = 1.0
    gamma4: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.theta0 < 1.0:
            raise ValueError(f"theta0 must lie in (0, 1), got {self.theta0}")
        for name in ("d0", "K0", "gamma2", "gamma3", "gamma4"):
            _positive(name, getattr(self, name))
        if self.gamma1 is not None:
            _positive("gamma1", self.gamma1)


# ---------------------------------------------------------------- adaptive gain


def ag_margin(sigma, pi, gamma2, gamma3, gamma4) -> np.ndarray:
    """Per-joint ``(2 g4 - 1) sigma / g4 - 1/(pi g3) - 1/g2``."""
    sigma = np.asarray(sigma, dtype=float)
    pi = np.asarray(pi, dtype=float)
    return (2.0 * gamma4 - 1.0) * sigma / gamma4 - 1.0 / (pi * gamma3) - 1.0 / gamma2


@dataclass(frozen=True)
class AGFeasibility:
    feasible: bool
    gamma2: float
    gamma3: float
    gamma4: float
    margin: float
    alpha2: float
    beta2: float


def ag_feasibility(cfg, M_max_eig: float, d0: float, K0: float, grid: int = 25) -> AGFeasibility:
    """Search ``(gamma2, gamma3, gamma4)`` for the largest positive ``alpha2``.

    ``gamma2`` must stay below ``gamma1 = lmin(K)`` and the adaptive margin
    must be positive on every joint. The fixed gain ``cfg.K`` stands in for
    the optimal gain in ``beta2``. Returns ``feasible=False`` with the best
    candidate when no grid point qualifies.
    """
    g1 = float(np.min(cfg.K))
    best = None
    g2s = g1 * np.linspace(0.02, 0.98, grid)
    g34 = np.logspace(-2, 3, grid)
    for g2, g3, g4 in itertools.product(g2s, g34, g34):
        E = ag_margin(cfg.sigma, cfg.pi, g2, g3, g4)
        a2 = min((g1 - g2) / M_max_eig, 1.0 / cfg.k - 1.0 / g1, float(np.min(cfg.pi * E)))
        if best is None or a2 > best[0]:
            best = (a2, g2, g3, g4, float(np.min(E)))
    a2, g2, g3, g4, E = best
    F = float(np.sum(g3 / (2.0 * cfg.pi) * K0**2 + 0.5 * g4 * cfg.sigma * cfg.K**2))
    return AGFeasibility(bool(a2 > 0 and E > 0), float(g2), float(g3), float(g4), E, float(a2), 0.5 * cfg.k * d0**2 + F)


# ---------------------------------------------------------------- perturbation bounds


def perturbation_samples(trace, model, cfg):
    """Per-step ``|rho1_i| / |S_i|^1/2`` and ``|rho2_i|`` along an ST trace.

    ``M rho1 = (M - I) T1 |S|^1/2 sign(S)``, and ``rho2`` is the time
    derivative of ``M^-1 ((I - M) Sigma - d_tilde)`` by central differences.
    Rows with ``S_i = 0`` give NaN in the first array.
    """
    n = trace.dof
    dt = float(trace.t[1] - trace.t[0])
    I = np.eye(n)
    S = np.asarray(trace.S, dtype=float)
    phi = np.sqrt(np.abs(S)) * np.sign(S)
    d_tilde = np.asarray(trace.d_true) - np.asarray(trace.d_hat)
    r1 = np.empty_like(S)
    integ = np.empty_like(S)
    for i in range(len(trace)):
        M = model._M(trace.q[i])
        r1[i] = np.linalg.solve(M, (M - I) @ (cfg.T1 * phi[i]))
        integ[i] = np.linalg.solve(M, (I - M) @ trace.Sigma[i] - d_tilde[i])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio1 = np.where(S != 0, np.abs(r1) / np.sqrt(np.abs(S)), np.nan)
    r2 = np.full_like(S, np.nan)
    r2[1:-1] = (integ[2:] - integ[:-2]) / (2.0 * dt)
    return ratio1, np.abs(r2)


def measure_perturbation_bounds(trace, model, cfg, safety: float = 2.0, t_from: float = 0.0):
    """``(delta1, delta2)`` per joint: sup of the pilot samples times ``safety``."""
    r1, r2 = perturbation_samples(trace, model, cfg)
    m = np.asarray(trace.t) >= t_from
    return safety * np.nanmax(r1[m], axis=0), safety * np.nanmax(r2[m], axis=0)
