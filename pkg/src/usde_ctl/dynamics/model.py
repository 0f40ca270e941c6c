"""Manipulator models and the dynamics evaluators built on them.

Two model kinds share one interface:

* ``"planar2"``: closed-form planar 2R arm (gravity along -y by default).
* ``"chain"``: revolute serial chain evaluated by recursive Newton-Euler
  (gravity along -z by default), with C(q, qd) assembled from Christoffel
  symbols of the mass matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from . import _chain, planar

G0 = 9.81
MODEL_KINDS = ("planar2", "chain")


class DimensionError(ValueError):
    """Raised when a joint-space argument has the wrong length or shape."""


class NonFiniteError(ValueError):
    """Raised on NaN/inf inputs or results (simulation blow-up)."""


def as_joint_vector(x, n: int, name: str = "x") -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (n,):
        raise DimensionError(f"{name} must have shape ({n},), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return v


@dataclass(frozen=True)
class LinkParams:
    """Inertial and geometric description of one link.

    ``inertia`` is the centroidal inertia tensor in the link frame; a scalar
    is read as an isotropic tensor (only the out-of-plane component matters
    for the planar arm). ``dh`` holds the modified DH parameters
    ``(a, alpha, d, theta_offset)`` placing this link's joint in the parent
    frame; it is ignored by the planar model, which uses ``length`` instead.
    """

    mass: float
    length: float = 0.0
    com: tuple = (0.0, 0.0, 0.0)
    inertia: object = 0.0
    dh: tuple = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        com = np.asarray(self.com, dtype=float).reshape(3)
        inertia = np.asarray(self.inertia, dtype=float)
        if inertia.ndim == 0:
            inertia = float(inertia) * np.eye(3)
        inertia = inertia.reshape(3, 3)
        if not self.mass > 0:
            raise ValueError(f"link mass must be > 0, got {self.mass}")
        if self.length < 0:
            raise ValueError(f"link length must be >= 0, got {self.length}")
        if not np.allclose(inertia, inertia.T) or np.linalg.eigvalsh(inertia).min() <= 0:
            raise ValueError("link inertia must be symmetric positive definite")
        object.__setattr__(self, "com", com)
        object.__setattr__(self, "inertia", inertia)
        object.__setattr__(self, "dh", tuple(float(v) for v in self.dh))


class DynamicsTerms(NamedTuple):
    """M(q), C(q, qd) and g(q) evaluated at one state."""

    M: np.ndarray
    C: np.ndarray
    g: np.ndarray


@dataclass(frozen=True)
class ManipulatorModel:
    links: tuple
    kind: str = "chain"
    gravity: np.ndarray = field(default=None)
    ee_offset: tuple = None
    name: str = ""

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}")
        links = tuple(self.links)
        if not links:
            raise ValueError("model needs at least one link")
        if self.kind == "planar2":
            if len(links) != 2:
                raise ValueError("planar2 model needs exactly 2 links")
            for ln in links:
                if abs(ln.com[1]) > 0 or abs(ln.com[2]) > 0:
                    raise ValueError("planar2 links must carry their COM on the link x axis")
        object.__setattr__(self, "links", links)
        if self.gravity is None:
            gvec = [0.0, -G0, 0.0] if self.kind == "planar2" else [0.0, 0.0, -G0]
        else:
            gvec = self.gravity
        gvec = np.asarray(gvec, dtype=float).reshape(3)
        object.__setattr__(self, "gravity", gvec)
        if self.ee_offset is None:
            ee = (links[-1].length, 0.0, 0.0)
        else:
            ee = self.ee_offset
        object.__setattr__(self, "ee_offset", np.asarray(ee, dtype=float).reshape(3))

    @property
    def dof(self) -> int:
        return len(self.links)

    @cached_property
    def _packed(self):
        dh = np.array([ln.dh for ln in self.links], dtype=float)
        mass = np.array([ln.mass for ln in self.links], dtype=float)
        com = np.array([ln.com for ln in self.links], dtype=float)
        inertia = np.array([ln.inertia for ln in self.links], dtype=float)
        return dh, mass, com, inertia

    @cached_property
    def _planar(self):
        return tuple(
            (float(ln.mass), float(ln.length), float(ln.com[0]), float(ln.inertia[2, 2])) for ln in self.links
        )

    # raw evaluators (no validation) used on hot paths

    def _M(self, q):
        if self.kind == "planar2":
            return planar.mass_matrix(self._planar, q)
        return _chain.mass_matrix(q, *self._packed)

    def _C(self, q, qd):
        if self.kind == "planar2":
            return planar.coriolis_matrix(self._planar, q, qd)
        dM = _chain.mass_matrix_derivatives(q, *self._packed)
        return _chain.christoffel_coriolis(dM, qd)

    def _g(self, q):
        if self.kind == "planar2":
            return planar.gravity(self._planar, q, self.gravity)
        dh, mass, com, inertia = self._packed
        z = np.zeros(self.dof)
        return _chain.rnea(q, z, z, self.gravity, dh, mass, com, inertia)

    def _bias(self, q, qd):
        """C(q, qd) qd + g(q)."""
        if self.kind == "planar2":
            return planar.bias(self._planar, q, qd, self.gravity)
        dh, mass, com, inertia = self._packed
        return _chain.rnea(q, qd, np.zeros(self.dof), self.gravity, dh, mass, com, inertia)

    def _qdd(self, q, qd, tau):
        if self.kind == "planar2":
            return planar.accelerations(self._planar, q, qd, tau, self.gravity)
        dh, mass, com, inertia = self._packed
        return _chain.forward_dynamics(q, qd, tau, self.gravity, dh, mass, com, inertia)

    def terms(self, q, qd) -> DynamicsTerms:
        n = self.dof
        q = as_joint_vector(q, n, "q")
        qd = as_joint_vector(qd, n, "qd")
        return DynamicsTerms(self._M(q), self._C(q, qd), self._g(q))

    def with_point_mass(self, mass: float, point=None) -> "ManipulatorModel":
        """Rigidly attach a point mass to the last link (default: at ``ee_offset``)."""
        if mass < 0:
            raise ValueError("payload mass must be >= 0")
        if mass == 0:
            return self
        r = self.ee_offset if point is None else np.asarray(point, dtype=float)
        last = self.links[-1]
        m_tot = last.mass + mass
        c_new = (last.mass * last.com + mass * r) / m_tot

        def shift(m, c):
            d = c - c_new
            return m * (d @ d * np.eye(3) - np.outer(d, d))

        inertia = last.inertia + shift(last.mass, last.com) + shift(mass, r)
        new_last = replace(last, mass=m_tot, com=c_new, inertia=inertia)
        return replace(self, links=self.links[:-1] + (new_last,))

    def scaled(self, mass_scale) -> "ManipulatorModel":
        """Copy with link masses and inertias scaled per link (uniform density change)."""
        s = np.broadcast_to(np.asarray(mass_scale, dtype=float), (self.dof,))
        links = tuple(
            replace(ln, mass=ln.mass * f, inertia=ln.inertia * f) for ln, f in zip(self.links, s)
        )
        return replace(self, links=links)

    def as_chain(self) -> "ManipulatorModel":
        """Recast a planar2 model as the equivalent Newton-Euler chain."""
        if self.kind == "chain":
            return self
        prev = 0.0
        links = []
        for ln in self.links:
            links.append(replace(ln, dh=(prev, 0.0, 0.0, 0.0)))
            prev = ln.length
        return ManipulatorModel(
            links=tuple(links), kind="chain", gravity=self.gravity, ee_offset=self.ee_offset, name=self.name
        )


def eval_mass_matrix(model: ManipulatorModel, q) -> np.ndarray:
    q = as_joint_vector(q, model.dof, "q")
    return model._M(q)


def eval_coriolis_matrix(model: ManipulatorModel, q, qd) -> np.ndarray:
    q = as_joint_vector(q, model.dof, "q")
    qd = as_joint_vector(qd, model.dof, "qd")
    return model._C(q, qd)


def eval_gravity(model: ManipulatorModel, q) -> np.ndarray:
    q = as_joint_vector(q, model.dof, "q")
    return model._g(q)


def forward_dynamics(model: ManipulatorModel, q, qd, tau, d=None) -> np.ndarray:
    """Joint accelerations of the plant, ``M^-1 (tau + d - C qd - g)``.

    Inverts M; meant for the simulated plant only.
    """
    n = model.dof
    q = as_joint_vector(q, n, "q")
    qd = as_joint_vector(qd, n, "qd")
    u = as_joint_vector(tau, n, "tau")
    if d is not None:
        u = u + as_joint_vector(d, n, "d")
    qdd = model._qdd(q, qd, u)
    if not np.all(np.isfinite(qdd)):
        raise NonFiniteError("forward dynamics produced a non-finite acceleration")
    return qdd


def kinetic_energy(model: ManipulatorModel, q, qd) -> float:
    qd = np.asarray(qd, dtype=float)
    return 0.5 * float(qd @ eval_mass_matrix(model, q) @ qd)


def planar_two_link(
    masses: Sequence[float] = (1.0, 1.0),
    lengths: Sequence[float] = (1.0, 1.0),
    com: Sequence[float] | None = None,
    inertias: Sequence[float] = (1.0, 1.0),
    gravity=(0.0, -G0, 0.0),
) -> ManipulatorModel:
    """Planar 2R arm; COM defaults to the link midpoints."""
    if com is None:
        com = [0.5 * ln for ln in lengths]
    links = tuple(
        LinkParams(mass=m, length=ln, com=(c, 0.0, 0.0), inertia=i)
        for m, ln, c, i in zip(masses, lengths, com, inertias)
    )
    return ManipulatorModel(links=links, kind="planar2", gravity=gravity, name="planar2")


# Franka-like 7-DoF chain. Kinematics follow the published modified-DH table;
# inertial values are rounded, plausible numbers and NOT identified ground truth.
_FRANKA_DH = (
    (0.0, 0.0, 0.333, 0.0),
    (0.0, -np.pi / 2, 0.0, 0.0),
    (0.0, np.pi / 2, 0.316, 0.0),
    (0.0825, np.pi / 2, 0.0, 0.0),
    (-0.0825, -np.pi / 2, 0.384, 0.0),
    (0.0, np.pi / 2, 0.0, 0.0),
    (0.088, np.pi / 2, 0.0, 0.0),
)
_FRANKA_MASS = (4.97, 0.65, 3.23, 3.59, 1.23, 1.67, 1.20)
_FRANKA_COM = (
    (0.004, 0.002, -0.175),
    (-0.003, -0.029, 0.003),
    (0.028, 0.039, -0.067),
    (-0.053, 0.104, 0.027),
    (-0.012, 0.041, -0.038),
    (0.060, -0.014, -0.011),
    (0.010, -0.004, 0.120),
)
_FRANKA_INERTIA = (
    (0.050, 0.050, 0.009),
    (0.008, 0.028, 0.026),
    (0.037, 0.036, 0.011),
    (0.026, 0.020, 0.028),
    (0.036, 0.029, 0.009),
    (0.002, 0.004, 0.005),
    (0.012, 0.010, 0.005),
)
FRANKA_EE_OFFSET = (0.0, 0.0, 0.2104)
FRANKA_TAU_LIMITS = (87.0, 87.0, 87.0, 87.0, 12.0, 12.0, 12.0)


def franka_like_chain(gravity=(0.0, 0.0, -G0)) -> ManipulatorModel:
    links = tuple(
        LinkParams(mass=m, com=c, inertia=np.diag(i), dh=dh)
        for m, c, i, dh in zip(_FRANKA_MASS, _FRANKA_COM, _FRANKA_INERTIA, _FRANKA_DH)
    )
    return ManipulatorModel(links=links, kind="chain", gravity=gravity, ee_offset=FRANKA_EE_OFFSET, name="franka_like")
