"""One-joint super-twisting loop for checking the finite-time bound.

The loop is the closed-loop error system of the ST controller with a USDE
on a single joint of inertia ``m``::

    m dS/dt    = -T1 |S|^1/2 sign(S) + Sigma - d_tilde
    dSigma/dt  = -T2 sign(S)
    dd_tilde/dt = -d_tilde / k + d'(t),     d(t) = a sin(w t)

The perturbation bounds (delta1, delta2) are measured on a pilot run,
scaled by a safety factor, and fed to the gain certificate. The check is
that ``V3^1/2`` enters the residual band no later than the bound ``t_f``
and stays there for the remainder of the run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .certificate import alpha3, beta3, finite_time_bound, residual_band, st_gain_certificate
from .lyapunov import st_P


@numba.njit(cache=True)
def _simulate(T1, T2, m, k, a, w, S0, Sigma0, dt, steps, stride):
    """Semi-implicit Euler; returns samples every ``stride`` steps of
    (t, S, Sigma, d_tilde, rho2) and the sup of |rho1|/|S|^1/2 and |rho2|."""
    rows = steps // stride + 1
    out = np.empty((rows, 5))
    S, Sig, dtl = S0, Sigma0, 0.0
    sup1 = 0.0
    sup2 = 0.0
    r = 0
    for i in range(steps + 1):
        t = i * dt
        sg = 0.0
        if S > 0.0:
            sg = 1.0
        elif S < 0.0:
            sg = -1.0
        root = math.sqrt(abs(S))
        ddot = a * w * math.cos(w * t)
        dtl_dot = -dtl / k + ddot
        # rho1 = (1 - 1/m) T1 |S|^1/2 sign(S), rho2 = d/dt [((1 - m) Sigma - d_tilde) / m]
        rho1 = (1.0 - 1.0 / m) * T1 * root
        rho2 = ((1.0 - m) * (-T2 * sg) - dtl_dot) / m
        if root > 0.0 and abs(rho1) > sup1 * root:
            sup1 = abs(rho1) / root
        if abs(rho2) > sup2:
            sup2 = abs(rho2)
        if i % stride == 0:
            out[r, 0] = t
            out[r, 1] = S
            out[r, 2] = Sig
            out[r, 3] = dtl
            out[r, 4] = rho2
            r += 1
        if i == steps:
            break
        Sig = Sig - dt * T2 * sg
        dtl = dtl + dt * dtl_dot
        S = S + dt * (-T1 * root * sg + Sig - dtl) / m
    return out, sup1, sup2


@dataclass(frozen=True)
class ScalarLoop:
    T1: float
    T2: float
    inertia: float = 1.02
    k: float = 0.08
    amplitude: float = 0.2
    omega: float = 1.0
    S0: float = 1.0
    Sigma0: float = 0.0
    dt: float = 1e-4
    duration: float = 60.0
    stride: int = 10

    @property
    def d0(self) -> float:
        """Sup of |d'| for the sinusoidal disturbance."""
        return self.amplitude * self.omega

    def simulate(self):
        steps = int(round(self.duration / self.dt))
        return _simulate(
            float(self.T1), float(self.T2), float(self.inertia), float(self.k), float(self.amplitude),
            float(self.omega), float(self.S0), float(self.Sigma0), float(self.dt), steps, int(self.stride),
        )

    def v3(self, S, Sigma, d_tilde) -> np.ndarray:
        """Lyapunov value ``X^T P X + d_tilde^2 / 2`` of the scalar loop."""
        P = st_P(self.T1, self.T2)
        x1 = np.sqrt(np.abs(S)) * np.sign(S)
        x2 = (np.asarray(Sigma) - d_tilde) / self.inertia
        return P[0, 0] * x1**2 + 2.0 * P[0, 1] * x1 * x2 + P[1, 1] * x2**2 + 0.5 * np.asarray(d_tilde) ** 2


@dataclass(frozen=True)
class BoundCheck:
    T1: float
    T2: float
    delta1: float
    delta2: float
    certified: bool
    gamma: float
    alpha3: float
    beta3: float
    band: float
    V0: float
    t_f: float
    entry_time: float
    horizon: float

    @property
    def violated(self) -> bool:
        """True when the band is entered later than ``t_f``, or not at all
        within a horizon that already extends past ``t_f``."""
        if not self.certified:
            return False
        if math.isnan(self.entry_time):
            return self.horizon >= self.t_f
        return self.entry_time > self.t_f


def start_outside_band(loop: ScalarLoop, band: float, factor: float = 2.0) -> float:
    """``S0`` (with ``Sigma0 = 0``) at which ``V3(0)^1/2 = factor * band``."""
    P11 = st_P(loop.T1, loop.T2)[0, 0]
    return (factor * band) ** 2 / P11


def check_bound(loop: ScalarLoop, theta0: float = 0.5, safety: float = 2.0, start_factor: float = 2.0) -> BoundCheck:
    """Pilot run for the bounds, certificate, then the timed run.

    The pilot uses the loop as given; the timed run starts from a state
    whose ``V3(0)^1/2`` is ``start_factor`` times the residual band, so that
    the band has to be entered rather than already holding at ``t = 0``.
    """
    _, s1, s2 = loop.simulate()
    d1, d2 = safety * s1, safety * s2
    cert = st_gain_certificate(loop.T1, loop.T2, d1, d2)
    if not cert.pd_ok:
        return BoundCheck(loop.T1, loop.T2, d1, d2, False, cert.gamma, math.nan, math.nan,
                          math.nan, math.nan, math.nan, math.nan, loop.duration)
    a3 = alpha3([cert.gamma], loop.k)
    b3 = beta3(loop.k, loop.d0)
    band = residual_band(a3, b3, theta0)
    run = ScalarLoop(**{**loop.__dict__, "S0": start_outside_band(loop, band, start_factor), "Sigma0": 0.0})
    out, r1, r2 = run.simulate()
    if safety * r1 > d1 * (1 + 1e-12) or safety * r2 > d2 * (1 + 1e-12):
        # the timed run left the measured envelope: re-certify on its bounds
        d1, d2 = max(d1, safety * r1), max(d2, safety * r2)
        cert = st_gain_certificate(loop.T1, loop.T2, d1, d2)
        if not cert.pd_ok:
            return BoundCheck(loop.T1, loop.T2, d1, d2, False, cert.gamma, math.nan, math.nan,
                              math.nan, math.nan, math.nan, math.nan, run.duration)
        a3 = alpha3([cert.gamma], loop.k)
        band = residual_band(a3, b3, theta0)
    t, S, Sig, dtl = out[:, 0], out[:, 1], out[:, 2], out[:, 3]
    root_v = np.sqrt(run.v3(S, Sig, dtl))
    V0 = float(root_v[0] ** 2)
    t_f = finite_time_bound(V0, a3, theta0)
    outside = np.nonzero(root_v > band)[0]
    if outside.size == 0:
        entry = 0.0
    elif outside[-1] == len(t) - 1:
        entry = math.nan
    else:
        entry = float(t[outside[-1] + 1])
    return BoundCheck(loop.T1, loop.T2, d1, d2, True, cert.gamma, a3, b3, band, V0, t_f, entry, run.duration)


def gain_sweep(T1_values=(3.0, 3.75, 4.5, 5.25, 6.0), T2_values=(8.0, 12.0, 16.0, 20.0), **loop_kw):
    """Grid of ``ScalarLoop`` cases, 20 by default."""
    return [ScalarLoop(T1=a, T2=b, **loop_kw) for a in T1_values for b in T2_values]
