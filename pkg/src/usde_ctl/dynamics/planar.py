"""Closed-form dynamics of the planar two-link (2R) arm.

Angles are measured from the +x axis, ``q2`` relative to link 1. Each link
carries its COM on the link axis at distance ``lc`` from its joint and a
centroidal inertia ``I`` about the out-of-plane axis. ``links`` is a pair of
``(m, l, lc, I)`` tuples.
"""

from math import cos, sin

import numpy as np


def _inertia_terms(links, q2):
    (m1, l1, lc1, i1), (m2, _, lc2, i2) = links
    c2 = cos(q2)
    m22 = m2 * lc2 * lc2 + i2
    m12 = m22 + m2 * l1 * lc2 * c2
    m11 = m1 * lc1 * lc1 + i1 + m2 * (l1 * l1 + 2.0 * l1 * lc2 * c2) + m22
    return m11, m12, m22


def mass_matrix(links, q):
    m11, m12, m22 = _inertia_terms(links, q[1])
    return np.array([[m11, m12], [m12, m22]])


def coriolis_matrix(links, q, qd):
    # Christoffel form; h = dM12/dq2 = 0.5 dM11/dq2
    h = -links[1][0] * links[0][1] * links[1][2] * sin(q[1])
    return np.array([[h * qd[1], h * (qd[0] + qd[1])], [-h * qd[0], 0.0]])


def _gravity(links, q, gvec):
    (m1, l1, lc1, _), (m2, _, lc2, _) = links
    s1, c1 = sin(q[0]), cos(q[0])
    s12, c12 = sin(q[0] + q[1]), cos(q[0] + q[1])
    gx, gy = gvec[0], gvec[1]
    # g = dV/dq with V = -sum m (gvec . p_com)
    g2 = -m2 * lc2 * (-gx * s12 + gy * c12)
    g1 = -m1 * lc1 * (-gx * s1 + gy * c1) - m2 * l1 * (-gx * s1 + gy * c1) + g2
    return g1, g2


def gravity(links, q, gvec):
    return np.array(_gravity(links, q, gvec))


def bias(links, q, qd, gvec):
    """C(q, qd) qd + g(q)."""
    h = -links[1][0] * links[0][1] * links[1][2] * sin(q[1])
    g1, g2 = _gravity(links, q, gvec)
    b1 = h * qd[1] * qd[0] + h * (qd[0] + qd[1]) * qd[1] + g1
    b2 = -h * qd[0] * qd[0] + g2
    return np.array([b1, b2])


def accelerations(links, q, qd, tau, gvec):
    """Plant accelerations by a closed-form 2x2 solve."""
    m11, m12, m22 = _inertia_terms(links, q[1])
    b = bias(links, q, qd, gvec)
    r1 = tau[0] - b[0]
    r2 = tau[1] - b[1]
    det = m11 * m22 - m12 * m12
    return np.array([(m22 * r1 - m12 * r2) / det, (m11 * r2 - m12 * r1) / det])


def end_effector_jacobian(links, q):
    """Planar linear-velocity Jacobian of the tip of link 2 (2x2)."""
    l1 = links[0][1]
    l2 = links[1][1]
    s1, c1 = sin(q[0]), cos(q[0])
    s12, c12 = sin(q[0] + q[1]), cos(q[0] + q[1])
    return np.array([[-l1 * s1 - l2 * s12, -l2 * s12], [l1 * c1 + l2 * c12, l2 * c12]])
