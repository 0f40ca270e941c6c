"""Fixed-step closed-loop simulation with a zero-order-hold torque.

Per control period ``dt``: sample ``(q, qd)`` (optionally with velocity
noise on the controller's copy), update the USDE, compute the torque, then
hold it while the true plant (true model, payload when attached, friction,
scripted external torques) is integrated by RK4 on ``physics_substeps``
substeps.
"""

from __future__ import annotations

import logging

import numpy as np

from ..analysis.lyapunov import lyapunov_series
from ..controllers import Controller, ControllerConfig, saturate, tracking_errors, sliding_variable
from ..dynamics import ManipulatorModel
from ..estimator import USDE
from ._integrate import pack_disturbances, pack_model, rk4_hold
from .scenario import Scenario
from .trace import Trace, rounded

log = logging.getLogger(__name__)


def true_lumped_disturbance(scenario: Scenario, q, qd, qdd, tau) -> np.ndarray:
    """``M_nom qdd + C_nom qd + g_nom - tau`` with the plant's real acceleration."""
    nom = scenario.model_nominal
    q = np.asarray(q, dtype=float)
    return nom._M(q) @ np.asarray(qdd, dtype=float) + nom._bias(q, np.asarray(qd, dtype=float)) - np.asarray(tau)


class Plant:
    """The simulated robot: true model plus payload, friction and external torques."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        p = scenario.payload
        self._bare = scenario.model_true
        self._loaded = scenario.model_true.with_point_mass(p.mass, p.point) if p.mass > 0 else scenario.model_true
        self._packed_bare = pack_model(self._bare)
        self._packed_loaded = pack_model(self._loaded)
        self._forces = pack_disturbances(scenario)

    def model_at(self, t: float) -> ManipulatorModel:
        return self._loaded if self.scenario.payload.attached(t) else self._bare

    def acceleration(self, model, t, q, qd, tau) -> np.ndarray:
        sc = self.scenario
        u = tau + sc.friction.torque(qd)
        if sc.external:
            u = u + sc.external_torque(t)
        return model._qdd(q, qd, u)

    def advance(self, t, q, qd, tau, dt, substeps):
        """RK4 over one control period with ``tau`` held and the model frozen at ``t``."""
        model = self.model_at(t)
        packed = self._packed_loaded if model is self._loaded else self._packed_bare
        return rk4_hold(*packed, *self._forces, float(t),
                        np.asarray(q, dtype=float), np.asarray(qd, dtype=float), np.asarray(tau, dtype=float),
                        float(dt), int(substeps))


def run_scenario(
    scenario: Scenario,
    variant: str,
    config: ControllerConfig | None = None,
    *,
    quantize: bool = True,
    lyapunov: bool = True,
) -> Trace:
    """Simulate one controller on one scenario and return its trace.

    ``quantize`` rounds the stored trace to the CSV precision so that
    writing and re-reading it is lossless. A non-finite state ends the run
    early with ``trace.diverged = True``.
    """
    cfg = config or scenario.controller
    ctrl = Controller(variant, cfg)
    nom = scenario.model_nominal
    n = nom.dof
    dt = scenario.control_dt
    N = scenario.steps
    plant = Plant(scenario)
    est = USDE(nom, cfg.k) if ctrl.uses_estimator else None
    rng = np.random.default_rng(scenario.seed)
    noise = scenario.velocity_noise_std

    traj0 = scenario.trajectory(0.0)
    q = traj0.q.copy() if scenario.q0 is None else np.asarray(scenario.q0, dtype=float).copy()
    qd = traj0.qd.copy() if scenario.qd0 is None else np.asarray(scenario.qd0, dtype=float).copy()

    tr = Trace.allocate(N, n, ctrl.variant)
    tr.meta.update(scenario=scenario.name, seed=scenario.seed, control_dt=dt)
    tau_prev = np.zeros(n)
    d_hat = np.zeros(n)
    d_interval = None
    rows = 0
    with np.errstate(all="ignore"):
        for i in range(N):
            t = i * dt
            qd_meas = qd + rng.normal(0.0, noise, n) if noise > 0 else qd
            terms = nom.terms(q, qd_meas)
            ref = scenario.trajectory(min(t, scenario.trajectory.duration))
            if est is not None:
                d_hat = est.update(q, qd_meas, tau_prev, dt, terms)
            sigma_used = ctrl.state.Sigma.copy()
            tau_raw = ctrl.step(nom, q, qd_meas, ref, d_hat, dt, terms=terms, saturated=False)
            tau = saturate(tau_raw, cfg.tau_limits)

            model_now = plant.model_at(t)
            qdd_start = plant.acceleration(model_now, t, q, qd, tau)
            d_start = true_lumped_disturbance(scenario, q, qd, qdd_start, tau)

            e, ed = tracking_errors(q, qd_meas, ref)
            tr.t[i] = t
            tr.q[i], tr.qd[i], tr.q_des[i] = q, qd, ref.q
            tr.e[i] = e
            tr.S[i] = sliding_variable(e, ed, cfg.eta)
            tr.tau_cmd[i], tr.tau_applied[i] = tau_raw, tau
            tr.d_hat[i] = d_hat
            tr.d_true[i] = d_start if d_interval is None else d_interval
            # both logged as used in this step's torque (K_hat adapts before use, Sigma after)
            tr.K_hat[i] = ctrl.state.K_hat if ctrl.variant == "ag" else np.nan
            tr.Sigma[i] = sigma_used if ctrl.variant == "st" else np.nan
            rows = i + 1

            finite = all(np.all(np.isfinite(x)) for x in (q, qd, tau, d_hat, d_start))
            if not finite:
                tr.diverged = True
                log.warning("run %s/%s diverged at t=%.4f", scenario.name, ctrl.variant, t)
                break
            if i == N - 1:
                break
            q_new, qd_new = plant.advance(t, q, qd, tau, dt, scenario.physics_substeps)
            qdd_end = plant.acceleration(model_now, t + dt, q_new, qd_new, tau)
            d_end = true_lumped_disturbance(scenario, q_new, qd_new, qdd_end, tau)
            d_interval = 0.5 * (d_start + d_end)
            q, qd, tau_prev = q_new, qd_new, tau
            if not (np.all(np.isfinite(q)) and np.all(np.isfinite(qd))):
                tr.diverged = True
                log.warning("run %s/%s diverged at t=%.4f", scenario.name, ctrl.variant, t + dt)
                break

    if rows < N:
        tr = tr.truncate(rows)
    if lyapunov:
        tr.V_lyap = lyapunov_series(tr, nom, cfg, ctrl.variant)
    return rounded(tr) if quantize else tr

