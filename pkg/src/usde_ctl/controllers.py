"""Torque control laws: CTC, USDE-FG, USDE-AG and USDE-ST.

All four share the sliding variable ``S = e' + eta e`` with
``e = q_des - q`` and the reference ``zeta = qd_des + eta e``. None of them
uses measured acceleration or the inverse of the inertia matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .dynamics import FRANKA_TAU_LIMITS, DimensionError, DynamicsTerms, ManipulatorModel, as_joint_vector

VARIANTS = ("ctc", "fg", "ag", "st")
VARIANT_LABELS = {"ctc": "CTC", "fg": "USDE-FG", "ag": "USDE-AG", "st": "USDE-ST"}


class TrajectoryPoint(NamedTuple):
    t: float
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray


def _diag(x, n, name, allow_zero=False):
    v = np.asarray(x, dtype=float)
    if v.ndim == 2:
        v = np.diag(v)
    v = np.broadcast_to(v, (n,)).astype(float)
    if not np.all(v >= 0 if allow_zero else v > 0):
        raise ValueError(f"{name} must be {'non-negative' if allow_zero else 'strictly positive'}")
    return v


@dataclass
class ControllerConfig:
    """Gains for all four controllers, stored per joint (diagonals)."""

    eta: np.ndarray
    K: np.ndarray
    K_lower: np.ndarray = None
    pi: np.ndarray = None
    sigma: np.ndarray = None
    T1: np.ndarray = None
    T2: np.ndarray = None
    sigma_max: float = 50.0
    tau_limits: np.ndarray = None
    k: float = 0.08
    abs_s: bool = False  # experimental: drive the adaptive law with |S_i|

    def __post_init__(self):
        n = np.atleast_1d(np.asarray(self.K, dtype=float)).shape[0]
        self.eta = _diag(self.eta, n, "eta")
        self.K = _diag(self.K, n, "K")
        self.K_lower = self.K.copy() if self.K_lower is None else _diag(self.K_lower, n, "K_lower")
        # pi = 0 freezes the adaptive gain at its lower bound
        self.pi = _diag(70.0 if self.pi is None else self.pi, n, "pi", allow_zero=True)
        self.sigma = _diag(1.0 if self.sigma is None else self.sigma, n, "sigma")
        self.T1 = _diag(4.0 if self.T1 is None else self.T1, n, "T1")
        self.T2 = _diag(12.0 if self.T2 is None else self.T2, n, "T2")
        lim = np.inf if self.tau_limits is None else self.tau_limits
        self.tau_limits = np.broadcast_to(np.asarray(lim, dtype=float), (n,)).copy()
        if not np.all(self.tau_limits > 0):
            raise ValueError("tau_limits must be positive")
        if not self.sigma_max > 0:
            raise ValueError("sigma_max must be positive")
        if not self.k > 0:
            raise ValueError("k must be positive")
        if np.any(self.K_lower > self.K):
            raise ValueError("K_lower must not exceed K")

    @property
    def dof(self) -> int:
        return self.eta.size

    @classmethod
    def reference_gains(cls, n: int = 7, **overrides) -> "ControllerConfig":
        """Reference 7-joint gain set, truncated to the first ``n`` joints."""
        base = dict(
            eta=[10.0] * 7,
            K=[10, 10, 10, 10, 8, 8, 8],
            pi=[70.0] * 7,
            sigma=[1.0] * 7,
            T1=[4, 4, 4, 4, 2, 2, 2],
            T2=[12, 12, 12, 12, 4, 4, 4],
            tau_limits=list(FRANKA_TAU_LIMITS),
        )
        cfg = {key: np.asarray(v, dtype=float)[:n] for key, v in base.items()}
        cfg["k"] = 0.08
        cfg.update(overrides)
        return cls(**cfg)


@dataclass
class ControllerState:
    variant: str
    K_hat: np.ndarray = None
    Sigma: np.ndarray = None

    @classmethod
    def initial(cls, variant: str, cfg: ControllerConfig) -> "ControllerState":
        variant = variant.lower()
        if variant not in VARIANTS:
            raise ValueError(f"unknown controller {variant!r}; valid: {', '.join(VARIANTS)}")
        n = cfg.dof
        return cls(variant=variant, K_hat=cfg.K_lower.copy(), Sigma=np.zeros(n))


def sign(x) -> np.ndarray:
    """Componentwise sign with sign(0) = 0."""
    return np.sign(x)


def sliding_variable(e, ed, eta) -> np.ndarray:
    e = np.asarray(e, dtype=float)
    ed = np.asarray(ed, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if eta.ndim == 2:
        eta = np.diag(eta)
    if e.shape != ed.shape or (eta.size != 1 and eta.shape != e.shape):
        raise DimensionError("e, ed and eta must agree in length")
    return ed + eta * e


def tracking_errors(q, qd, traj: TrajectoryPoint):
    return traj.q - q, traj.qd - qd


def _prepare(cfg, model, q, qd, traj, d_hat, terms):
    n = model.dof
    if cfg.dof != n:
        raise DimensionError(f"config has {cfg.dof} joints, model has {n}")
    q = as_joint_vector(q, n, "q")
    qd = as_joint_vector(qd, n, "qd")
    d_hat = as_joint_vector(d_hat, n, "d_hat")
    if terms is None:
        terms = model.terms(q, qd)
    e, ed = tracking_errors(q, qd, traj)
    S = sliding_variable(e, ed, cfg.eta)
    zeta = traj.qd + cfg.eta * e
    zeta_dot = traj.qdd + cfg.eta * ed
    return q, qd, d_hat, terms, S, zeta, zeta_dot


def saturate(tau, limits) -> np.ndarray:
    return np.clip(tau, -limits, limits)


def control_fg(
    cfg: ControllerConfig,
    model: ManipulatorModel,
    q,
    qd,
    traj: TrajectoryPoint,
    d_hat,
    K=None,
    terms: DynamicsTerms | None = None,
    saturated: bool = True,
) -> np.ndarray:
    """USDE-FG: ``K S + M zeta' + C zeta + g - d_hat``, saturated.

    ``model`` is the nominal model. Passing ``d_hat = 0`` gives CTC.
    """
    q, qd, d_hat, (M, C, g), S, zeta, zeta_dot = _prepare(cfg, model, q, qd, traj, d_hat, terms)
    gain = cfg.K if K is None else np.asarray(K, dtype=float)
    tau = gain * S + M @ zeta_dot + C @ zeta + g - d_hat
    return saturate(tau, cfg.tau_limits) if saturated else tau


def control_ctc(cfg, model, q, qd, traj, terms=None, saturated=True) -> np.ndarray:
    return control_fg(cfg, model, q, qd, traj, np.zeros(model.dof), terms=terms, saturated=saturated)


def adaptive_gain_step(state: ControllerState, cfg: ControllerConfig, S, dt: float) -> ControllerState:
    """One forward-Euler step of the sigma-modified gain law with lower-bound clamp."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    S = np.asarray(S, dtype=float)
    drive = np.abs(S) if cfg.abs_s else S
    K_hat = state.K_hat
    active = K_hat >= cfg.K_lower
    proposed = K_hat + dt * cfg.pi * (drive - cfg.sigma * K_hat)
    K_hat = np.where(active, proposed, cfg.K_lower)
    state.K_hat = np.maximum(K_hat, cfg.K_lower)
    return state


def control_ag(state, cfg, model, q, qd, traj, d_hat, dt, terms=None, saturated=True):
    e, ed = tracking_errors(np.asarray(q, dtype=float), np.asarray(qd, dtype=float), traj)
    S = sliding_variable(e, ed, cfg.eta)
    adaptive_gain_step(state, cfg, S, dt)
    tau = control_fg(cfg, model, q, qd, traj, d_hat, K=state.K_hat, terms=terms, saturated=saturated)
    return tau, state


def control_st(state, cfg, model, q, qd, traj, d_hat, dt, terms=None, saturated=True):
    """USDE-ST: ``T1 |S|^1/2 sign(S) - Sigma + M zeta' + C qd + g - d_hat``.

    ``Sigma`` then integrates ``-T2 sign(S)`` (forward Euler) and is clipped
    to ``+-sigma_max`` against windup under torque saturation.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    q, qd, d_hat, (M, C, g), S, zeta, zeta_dot = _prepare(cfg, model, q, qd, traj, d_hat, terms)
    sS = sign(S)
    tau = cfg.T1 * np.sqrt(np.abs(S)) * sS - state.Sigma + M @ zeta_dot + C @ qd + g - d_hat
    state.Sigma = np.clip(state.Sigma - dt * cfg.T2 * sS, -cfg.sigma_max, cfg.sigma_max)
    return (saturate(tau, cfg.tau_limits) if saturated else tau), state


@dataclass
class Controller:
    """Uniform per-step interface over the four laws."""

    variant: str
    cfg: ControllerConfig
    state: ControllerState = field(init=False)

    def __post_init__(self):
        self.variant = self.variant.lower()
        self.state = ControllerState.initial(self.variant, self.cfg)

    @property
    def uses_estimator(self) -> bool:
        return self.variant != "ctc"

    def step(self, model, q, qd, traj, d_hat, dt, terms=None, saturated=True) -> np.ndarray:
        kw = dict(terms=terms, saturated=saturated)
        if self.variant == "ctc":
            return control_ctc(self.cfg, model, q, qd, traj, **kw)
        if self.variant == "fg":
            return control_fg(self.cfg, model, q, qd, traj, d_hat, **kw)
        if self.variant == "ag":
            tau, _ = control_ag(self.state, self.cfg, model, q, qd, traj, d_hat, dt, **kw)
            return tau
        tau, _ = control_st(self.state, self.cfg, model, q, qd, traj, d_hat, dt, **kw)
        return tau

    def reset(self):
        self.state = ControllerState.initial(self.variant, self.cfg)


def with_gains(cfg: ControllerConfig, **kw) -> ControllerConfig:
    return replace(cfg, **kw)
