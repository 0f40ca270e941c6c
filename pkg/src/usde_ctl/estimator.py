"""Unknown system dynamics estimator (USDE).

The estimator reconstructs the lumped disturbance ``d`` from measured
``q, qd``, the commanded torque and the *nominal* model only: no joint
acceleration and no inverse of the inertia matrix are used.

With generalized momentum ``P = M qd`` and ``H = -C^T qd + g`` the dynamics
read ``dP/dt + H = tau + d``. Low-pass filtering ``P``, ``H`` and ``tau``
with ``k x_f' + x_f = x`` (zero initial state) gives

    d_hat = (P - P_f) / k + H_f - tau_f,

which is exactly ``d`` passed through the first-order lag ``1/(k s + 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .dynamics import DynamicsTerms, ManipulatorModel, NonFiniteError, as_joint_vector

DEFAULT_K = 0.08


class AuxiliaryVars(NamedTuple):
    P: np.ndarray
    H: np.ndarray


@dataclass
class EstimatorState:
    k: float = DEFAULT_K
    P_f: np.ndarray = None
    H_f: np.ndarray = None
    tau_f: np.ndarray = None
    d_hat: np.ndarray = None
    initialized: bool = False
    dof: int = field(default=0, repr=False)

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"filter constant k must be > 0, got {self.k}")

    @classmethod
    def zeros(cls, n: int, k: float = DEFAULT_K) -> "EstimatorState":
        z = np.zeros(n)
        return cls(k=k, P_f=z.copy(), H_f=z.copy(), tau_f=z.copy(), d_hat=z.copy(), initialized=True, dof=n)


def compute_auxiliary(model: ManipulatorModel, q, qd, terms: DynamicsTerms | None = None) -> AuxiliaryVars:
    """P = M(q) qd and H = -C(q, qd)^T qd + g(q) from the nominal model."""
    n = model.dof
    qd = as_joint_vector(qd, n, "qd")
    if terms is None:
        terms = model.terms(q, qd)
    return AuxiliaryVars(terms.M @ qd, -terms.C.T @ qd + terms.g)


def lag_coefficient(dt: float, k: float) -> float:
    return float(np.exp(-dt / k))


def filter_step(state: EstimatorState, P, H, tau, dt: float) -> EstimatorState:
    """Advance the three filters by one hold interval of length ``dt``.

    ``P``, ``H`` and ``tau`` are the inputs held over the interval; the update
    ``x_f <- a x_f + (1 - a) x`` with ``a = exp(-dt/k)`` is the exact
    solution of ``k x_f' + x_f = x`` for a constant input.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if not state.k > 0:
        raise ValueError("filter constant k must be > 0")
    P, H, tau = (np.asarray(v, dtype=float) for v in (P, H, tau))
    if not (np.all(np.isfinite(P)) and np.all(np.isfinite(H)) and np.all(np.isfinite(tau))):
        raise NonFiniteError("filter inputs must be finite")
    a = lag_coefficient(dt, state.k)
    b = 1.0 - a
    state.P_f = a * state.P_f + b * P
    state.H_f = a * state.H_f + b * H
    state.tau_f = a * state.tau_f + b * tau
    state.initialized = True
    return state


def usde_estimate(state: EstimatorState, P) -> np.ndarray:
    if state.k == 0:
        raise ZeroDivisionError("filter constant k is zero")
    if not state.initialized:
        raise RuntimeError("estimator filters are not initialized")
    d_hat = (np.asarray(P, dtype=float) - state.P_f) / state.k + state.H_f - state.tau_f
    state.d_hat = d_hat
    return d_hat


class USDE:
    """Sampled-data USDE driven once per control period.

    Between two samples the applied torque is held (zero-order hold), while
    ``P`` and ``H`` evolve continuously. The torque filter is therefore fed
    the torque actually applied over the interval, and the ``P``/``H``
    filters are fed the trapezoidal mean of their endpoint samples. The
    latter keeps the discrete estimate within O(dt^2) of the continuous
    one; feeding the end sample alone biases the ``(P - P_f)/k`` term by a
    factor ``1 - dt/(2k)``.

    At the first sample all memories are zero, so ``d_hat = P(0)/k``.
    """

    def __init__(self, model: ManipulatorModel, k: float = DEFAULT_K):
        self.model = model
        self.state = EstimatorState.zeros(model.dof, k)
        self._prev = None

    @property
    def d_hat(self) -> np.ndarray:
        return self.state.d_hat

    def update(self, q, qd, tau_applied, dt: float, terms: DynamicsTerms | None = None) -> np.ndarray:
        """Ingest the sample taken at the end of an interval and return d_hat.

        ``tau_applied`` is the torque held during the interval that just
        ended; it is ignored on the very first sample.
        """
        aux = compute_auxiliary(self.model, q, qd, terms)
        if self._prev is not None:
            P0, H0 = self._prev
            filter_step(self.state, 0.5 * (P0 + aux.P), 0.5 * (H0 + aux.H), tau_applied, dt)
        self._prev = aux
        return usde_estimate(self.state, aux.P)
