"""Discrete check of ``dV1/dt <= -alpha1 V1 + beta1`` along a recorded run."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .certificate import alpha1, beta1
from .lyapunov import lyapunov_series


@dataclass(frozen=True)
class DecayCheck:
    alpha: float
    beta: float
    eps: float
    d0: float
    checked: int
    passed: int

    @property
    def fraction(self) -> float:
        return self.passed / self.checked if self.checked else float("nan")


def measured_d0(trace) -> float:
    """Sup over steps of ``||d_true[i+1] - d_true[i]|| / dt``."""
    d = np.asarray(trace.d_true, dtype=float)
    dt = float(trace.t[1] - trace.t[0])
    return float(np.max(np.linalg.norm(np.diff(d, axis=0), axis=1)) / dt)


def max_mass_eigenvalue(trace, model) -> float:
    return max(float(np.linalg.eigvalsh(model._M(q))[-1]) for q in trace.q)


def check_v1_decay(trace, model, cfg, d0: float | None = None, t_from: float = 1.0,
                   rel_slack: float = 1e-3) -> DecayCheck:
    """Fraction of steps after ``t_from`` at which the V1 inequality holds.

    ``dV/dt`` is the central difference of the logged V1 series; the slack
    is ``rel_slack * max|V|``. ``d0`` defaults to the sup of the measured
    disturbance rate and ``lmax(M)`` is taken over the visited postures.
    """
    V = np.asarray(trace.V_lyap, dtype=float) if trace.variant in ("ctc", "fg") else None
    if V is None or not np.all(np.isfinite(V)):
        V = lyapunov_series(trace, model, cfg, "fg")
    t = np.asarray(trace.t, dtype=float)
    dt = float(t[1] - t[0])
    if d0 is None:
        d0 = measured_d0(trace)
    a = alpha1(cfg.K, max_mass_eigenvalue(trace, model), cfg.k)
    b = beta1(cfg.k, d0)
    eps = rel_slack * float(np.max(np.abs(V)))
    Vdot = (V[2:] - V[:-2]) / (2.0 * dt)
    mid = slice(1, len(V) - 1)
    ok = Vdot <= -a * V[mid] + b + eps
    m = t[mid] >= t_from
    return DecayCheck(float(a), float(b), eps, float(d0), int(m.sum()), int(ok[m].sum()))
