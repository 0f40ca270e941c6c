"""Lyapunov functions of the three closed loops, evaluated on recorded states.

These are monitors, not proofs: they take logged ``S``, ``d_true``,
``d_hat`` (and ``K_hat`` / ``Sigma``) and the nominal model.
"""

from __future__ import annotations

import numpy as np

from ..dynamics import ManipulatorModel


def lyapunov_v1(S, M, d_tilde) -> float:
    """0.5 S^T M S + 0.5 |d_tilde|^2."""
    S = np.asarray(S, dtype=float)
    d_tilde = np.asarray(d_tilde, dtype=float)
    return 0.5 * float(S @ M @ S) + 0.5 * float(d_tilde @ d_tilde)


def lyapunov_v2(S, M, d_tilde, K_hat, K_ref, pi) -> float:
    """V1 plus the gain-error term 0.5 sum (K_ref - K_hat)^2 / pi.

    ``K_ref`` stands in for the unknown optimal gain, so V2 is a diagnostic.
    """
    Kt = np.asarray(K_ref, dtype=float) - np.asarray(K_hat, dtype=float)
    return lyapunov_v1(S, M, d_tilde) + 0.5 * float(np.sum(Kt**2 / np.asarray(pi, dtype=float)))


def st_P(T1, T2) -> np.ndarray:
    """Quadratic-form matrix of the super-twisting Lyapunov function (2x2)."""
    return 0.5 * np.array([[4.0 * T2 + T1**2, -T1], [-T1, 2.0]])


def st_state(S, Sigma, M, d_tilde) -> np.ndarray:
    """Per-joint X_i = [|S_i|^1/2 sign(S_i), Sigma'_i] as an (n, 2) array.

    Sigma' = M^-1 (Sigma - d_tilde) is the integrator state of the loop
    written as dS/dt = -T1 |S|^1/2 sign(S) + Sigma' + rho1.
    """
    S = np.asarray(S, dtype=float)
    Sigma_p = np.linalg.solve(M, np.asarray(Sigma, dtype=float) - np.asarray(d_tilde, dtype=float))
    return np.column_stack([np.sqrt(np.abs(S)) * np.sign(S), Sigma_p])


def lyapunov_v3(S, Sigma, M, d_tilde, T1, T2) -> float:
    X = st_state(S, Sigma, M, d_tilde)
    T1 = np.broadcast_to(np.asarray(T1, dtype=float), (len(X),))
    T2 = np.broadcast_to(np.asarray(T2, dtype=float), (len(X),))
    v = sum(float(x @ st_P(a, b) @ x) for x, a, b in zip(X, T1, T2))
    d_tilde = np.asarray(d_tilde, dtype=float)
    return v + 0.5 * float(d_tilde @ d_tilde)


def lyapunov_series(trace, model: ManipulatorModel, cfg, variant: str | None = None) -> np.ndarray:
    """The variant's Lyapunov value at every row: V1 (CTC/FG), V2 (AG), V3 (ST)."""
    variant = (variant or trace.variant).lower()
    out = np.full(len(trace), np.nan)
    with np.errstate(over="ignore", invalid="ignore"):  # diverged runs overflow to inf
        for i in range(len(trace)):
            q = trace.q[i]
            if not np.all(np.isfinite(q)):
                break
            M = model._M(q)
            dt_ = trace.d_true[i] - trace.d_hat[i]
            S = trace.S[i]
            if variant == "ag":
                out[i] = lyapunov_v2(S, M, dt_, trace.K_hat[i], cfg.K, cfg.pi)
            elif variant == "st":
                out[i] = lyapunov_v3(S, trace.Sigma[i], M, dt_, cfg.T1, cfg.T2)
            else:
                out[i] = lyapunov_v1(S, M, dt_)
    return out
