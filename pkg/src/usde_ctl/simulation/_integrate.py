"""Jitted RK4 hold of one control period for the plant.

Same arithmetic as ``Plant.acceleration`` (model, friction, scripted
external torques), kept in one compiled loop because the plant is
evaluated ``4 * substeps`` times per control step.
"""

import math

import numba as nb
import numpy as np

from ..dynamics import _chain

PLANAR, CHAIN = 0, 1


@nb.njit(cache=True)
def _planar_qdd(p, q, qd, u, gvec):
    m1, l1, lc1, i1 = p[0, 0], p[0, 1], p[0, 2], p[0, 3]
    m2, lc2, i2 = p[1, 0], p[1, 2], p[1, 3]
    c2 = math.cos(q[1])
    m22 = m2 * lc2 * lc2 + i2
    m12 = m22 + m2 * l1 * lc2 * c2
    m11 = m1 * lc1 * lc1 + i1 + m2 * (l1 * l1 + 2.0 * l1 * lc2 * c2) + m22
    h = -m2 * l1 * lc2 * math.sin(q[1])
    s1, c1 = math.sin(q[0]), math.cos(q[0])
    s12, c12 = math.sin(q[0] + q[1]), math.cos(q[0] + q[1])
    gx, gy = gvec[0], gvec[1]
    g2 = -m2 * lc2 * (-gx * s12 + gy * c12)
    g1 = -m1 * lc1 * (-gx * s1 + gy * c1) - m2 * l1 * (-gx * s1 + gy * c1) + g2
    r1 = u[0] - (h * qd[1] * qd[0] + h * (qd[0] + qd[1]) * qd[1] + g1)
    r2 = u[1] - (-h * qd[0] * qd[0] + g2)
    det = m11 * m22 - m12 * m12
    out = np.empty(2)
    out[0] = (m22 * r1 - m12 * r2) / det
    out[1] = (m11 * r2 - m12 * r1) / det
    return out


@nb.njit(cache=True)
def _accel(kind, p, gvec, dh, mass, com, inertia, visc, coul, steep, ext, t, q, qd, tau):
    n = q.shape[0]
    u = tau - visc * qd - coul * np.tanh(steep * qd)
    for r in range(ext.shape[0]):
        if ext[r, 0] <= t < ext[r, 1]:
            s = math.sin(ext[r, 2] * (t - ext[r, 0]))
            for j in range(n):
                u[j] += ext[r, 3 + j] + ext[r, 3 + n + j] * s
    if kind == PLANAR:
        return _planar_qdd(p, q, qd, u, gvec)
    return _chain.forward_dynamics(q, qd, u, gvec, dh, mass, com, inertia)


@nb.njit(cache=True)
def rk4_hold(kind, p, gvec, dh, mass, com, inertia, visc, coul, steep, ext, t, q, qd, tau, dt, substeps):
    h = dt / substeps
    for k in range(substeps):
        ts = t + k * h
        a1 = _accel(kind, p, gvec, dh, mass, com, inertia, visc, coul, steep, ext, ts, q, qd, tau)
        v2 = qd + 0.5 * h * a1
        a2 = _accel(kind, p, gvec, dh, mass, com, inertia, visc, coul, steep, ext, ts + 0.5 * h, q + 0.5 * h * qd, v2, tau)
        v3 = qd + 0.5 * h * a2
        a3 = _accel(kind, p, gvec, dh, mass, com, inertia, visc, coul, steep, ext, ts + 0.5 * h, q + 0.5 * h * v2, v3, tau)
        v4 = qd + h * a3
        a4 = _accel(kind, p, gvec, dh, mass, com, inertia, visc, coul, steep, ext, ts + h, q + h * v3, v4, tau)
        q = q + (h / 6.0) * (qd + 2.0 * v2 + 2.0 * v3 + v4)
        qd = qd + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    return q, qd


def pack_model(model):
    """Kernel arguments ``(kind, p, gvec, dh, mass, com, inertia)`` of a model."""
    if model.kind == "planar2":
        empty = np.zeros((0, 3))
        return PLANAR, np.array(model._planar, dtype=float), model.gravity, np.zeros((0, 4)), np.zeros(0), empty, np.zeros((0, 3, 3))
    dh, mass, com, inertia = model._packed
    return CHAIN, np.zeros((0, 4)), model.gravity, dh, mass, com, inertia


def pack_disturbances(scenario):
    """Kernel arguments ``(visc, coul, steep, ext)`` of a scenario's plant forces."""
    n = scenario.dof
    f = scenario.friction
    visc = np.zeros(n) if f.viscous is None else np.asarray(f.viscous, dtype=float)
    coul = np.zeros(n) if f.coulomb is None else np.asarray(f.coulomb, dtype=float)
    ext = np.zeros((len(scenario.external), 3 + 2 * n))
    for r, e in enumerate(scenario.external):
        ext[r, :3] = e.start, e.end, e.omega
        if e.offset is not None:
            ext[r, 3:3 + n] = e.offset
        if e.amplitude is not None:
            ext[r, 3 + n:] = e.amplitude
    return visc, coul, float(f.steepness), ext
