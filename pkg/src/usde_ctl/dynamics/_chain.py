"""Jitted recursive Newton-Euler kernels for a revolute serial chain.

Joints follow the modified (Craig) Denavit-Hartenberg convention: the
transform from frame i-1 to frame i is ``Rx(alpha) Tx(a) Rz(theta) Tz(d)``
and every joint rotates about its local z axis. Link inertial data are
expressed in the link frame, with inertia tensors taken about the COM.

All kernels allocate with the dtype of ``q`` so they can be fed a complex
configuration for complex-step differentiation of the mass matrix. 3-vectors
travel as tuples to keep the recursion allocation-free.
"""

import numba as nb
import numpy as np

_CSTEP = 1e-20


@nb.njit(cache=True, inline="always")
def _cross(a, b):
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


@nb.njit(cache=True, inline="always")
def _add(a, b):
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


@nb.njit(cache=True, inline="always")
def _scale(s, a):
    return (s * a[0], s * a[1], s * a[2])


@nb.njit(cache=True, inline="always")
def _mv(A, x):
    return (
        A[0, 0] * x[0] + A[0, 1] * x[1] + A[0, 2] * x[2],
        A[1, 0] * x[0] + A[1, 1] * x[1] + A[1, 2] * x[2],
        A[2, 0] * x[0] + A[2, 1] * x[1] + A[2, 2] * x[2],
    )


@nb.njit(cache=True, inline="always")
def _mtv(A, x):
    return (
        A[0, 0] * x[0] + A[1, 0] * x[1] + A[2, 0] * x[2],
        A[0, 1] * x[0] + A[1, 1] * x[1] + A[2, 1] * x[2],
        A[0, 2] * x[0] + A[1, 2] * x[1] + A[2, 2] * x[2],
    )


@nb.njit(cache=True)
def _frames(q, dh):
    n = q.shape[0]
    R = np.zeros((n, 3, 3), dtype=q.dtype)
    p = np.zeros((n, 3))
    for i in range(n):
        ca = np.cos(dh[i, 1])
        sa = np.sin(dh[i, 1])
        d = dh[i, 2]
        ct = np.cos(q[i] + dh[i, 3])
        st = np.sin(q[i] + dh[i, 3])
        R[i, 0, 0] = ct
        R[i, 0, 1] = -st
        R[i, 1, 0] = st * ca
        R[i, 1, 1] = ct * ca
        R[i, 1, 2] = -sa
        R[i, 2, 0] = st * sa
        R[i, 2, 1] = ct * sa
        R[i, 2, 2] = ca
        p[i, 0] = dh[i, 0]
        p[i, 1] = -sa * d
        p[i, 2] = ca * d
    return R, p


@nb.njit(cache=True)
def _rnea_frames(R, p, qd, qdd, gravity, mass, com, inertia, F, N, tau):
    n = qd.shape[0]
    zero = R[0, 0, 0] * 0.0
    w = (zero, zero, zero)
    wd = (zero, zero, zero)
    vd = (-gravity[0] + zero, -gravity[1] + zero, -gravity[2] + zero)
    for i in range(n):
        Ri = R[i]
        pi = (p[i, 0], p[i, 1], p[i, 2])
        w_p = _mtv(Ri, w)
        wd_p = _mtv(Ri, wd)
        vd = _mtv(Ri, _add(_add(_cross(wd, pi), _cross(w, _cross(w, pi))), vd))
        w = (w_p[0], w_p[1], w_p[2] + qd[i])
        wd = (wd_p[0] + w_p[1] * qd[i], wd_p[1] - w_p[0] * qd[i], wd_p[2] + qdd[i])
        ci = (com[i, 0], com[i, 1], com[i, 2])
        vc = _add(_add(_cross(wd, ci), _cross(w, _cross(w, ci))), vd)
        Ii = inertia[i]
        nn = _add(_mv(Ii, wd), _cross(w, _mv(Ii, w)))
        for k in range(3):
            F[i, k] = mass[i] * vc[k]
            N[i, k] = nn[k]
    f = (zero, zero, zero)
    m = (zero, zero, zero)
    for i in range(n - 1, -1, -1):
        Fi = (F[i, 0], F[i, 1], F[i, 2])
        ci = (com[i, 0], com[i, 1], com[i, 2])
        m_new = _add((N[i, 0], N[i, 1], N[i, 2]), _cross(ci, Fi))
        if i < n - 1:
            Rf = _mv(R[i + 1], f)
            Rm = _mv(R[i + 1], m)
            pn = (p[i + 1, 0], p[i + 1, 1], p[i + 1, 2])
            m_new = _add(_add(m_new, Rm), _cross(pn, Rf))
            f = _add(Rf, Fi)
        else:
            f = Fi
        m = m_new
        tau[i] = m[2]


@nb.njit(cache=True)
def rnea(q, qd, qdd, gravity, dh, mass, com, inertia):
    """Inverse dynamics: M(q) qdd + C(q, qd) qd + g(q)."""
    n = q.shape[0]
    R, p = _frames(q, dh)
    F = np.zeros((n, 3), dtype=q.dtype)
    N = np.zeros((n, 3), dtype=q.dtype)
    tau = np.zeros(n, dtype=q.dtype)
    _rnea_frames(R, p, qd, qdd, gravity, mass, com, inertia, F, N, tau)
    return tau


@nb.njit(cache=True)
def mass_matrix(q, dh, mass, com, inertia):
    n = q.shape[0]
    R, p = _frames(q, dh)
    F = np.zeros((n, 3), dtype=q.dtype)
    N = np.zeros((n, 3), dtype=q.dtype)
    col = np.zeros(n, dtype=q.dtype)
    M = np.zeros((n, n), dtype=q.dtype)
    zero = np.zeros(n)
    g0 = np.zeros(3)
    e = np.zeros(n)
    for j in range(n):
        e[:] = 0.0
        e[j] = 1.0
        _rnea_frames(R, p, zero, e, g0, mass, com, inertia, F, N, col)
        for i in range(n):
            M[i, j] = col[i]
    # RNEA columns are symmetric only up to roundoff
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.5 * (M[i, j] + M[j, i])
            M[i, j] = s
            M[j, i] = s
    return M


@nb.njit(cache=True)
def mass_matrix_derivatives(q, dh, mass, com, inertia):
    """dM[k] = dM/dq_k by complex step (exact to machine precision)."""
    n = q.shape[0]
    dM = np.zeros((n, n, n))
    qc = q.astype(np.complex128)
    for k in range(n):
        qc[k] += 1j * _CSTEP
        Mc = mass_matrix(qc, dh, mass, com, inertia)
        qc[k] = q[k]
        for i in range(n):
            for j in range(n):
                dM[k, i, j] = Mc[i, j].imag / _CSTEP
    return dM


@nb.njit(cache=True)
def christoffel_coriolis(dM, qd):
    n = qd.shape[0]
    C = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            s = 0.0
            for k in range(n):
                s += 0.5 * (dM[k, i, j] + dM[j, i, k] - dM[i, j, k]) * qd[k]
            C[i, j] = s
    return C


@nb.njit(cache=True)
def forward_dynamics(q, qd, tau, gravity, dh, mass, com, inertia):
    n = q.shape[0]
    R, p = _frames(q, dh)
    F = np.zeros((n, 3))
    N = np.zeros((n, 3))
    bias = np.zeros(n)
    _rnea_frames(R, p, qd, np.zeros(n), gravity, mass, com, inertia, F, N, bias)
    M = mass_matrix(q, dh, mass, com, inertia)
    # Cholesky solve; M is SPD
    L = np.zeros((n, n))
    for j in range(n):
        s = M[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if not s > 0.0:
            return np.full(n, np.nan)
        L[j, j] = np.sqrt(s)
        for i in range(j + 1, n):
            s = M[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            L[i, j] = s / L[j, j]
    y = tau - bias
    for i in range(n):
        s = y[i]
        for k in range(i):
            s -= L[i, k] * y[k]
        y[i] = s / L[i, i]
    for i in range(n - 1, -1, -1):
        s = y[i]
        for k in range(i + 1, n):
            s -= L[k, i] * y[k]
        y[i] = s / L[i, i]
    return y
