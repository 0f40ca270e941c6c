import copy
import functools
import sys

import numpy as np
import pytest
import sympy as sp
from hypothesis import HealthCheck, settings

from usde_ctl.dynamics import franka_like_chain, planar_two_link
from usde_ctl.simulation import SCENARIO_DIR

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def lagrangian_2r():
    """Symbolic M, C, g of a planar 2R arm from its Lagrangian.

    Angles from +x, gravity along -y, centroidal inertias about z. Returned
    as lambdified functions of (params, q, qd).
    """
    q1, q2, qd1, qd2 = sp.symbols("q1 q2 qd1 qd2", real=True)
    m1, m2, l1, l2, c1, c2, I1, I2, g0 = sp.symbols("m1 m2 l1 l2 c1 c2 I1 I2 g0", positive=True)
    q = sp.Matrix([q1, q2])
    qd = sp.Matrix([qd1, qd2])
    p1 = sp.Matrix([c1 * sp.cos(q1), c1 * sp.sin(q1)])
    p2 = sp.Matrix([l1 * sp.cos(q1) + c2 * sp.cos(q1 + q2), l1 * sp.sin(q1) + c2 * sp.sin(q1 + q2)])
    v1 = p1.jacobian(q) * qd
    v2 = p2.jacobian(q) * qd
    T = (m1 * v1.dot(v1) + m2 * v2.dot(v2) + I1 * qd1**2 + I2 * (qd1 + qd2) ** 2) / 2
    V = g0 * (m1 * p1[1] + m2 * p2[1])
    M = sp.simplify(sp.hessian(T, qd))
    g = sp.Matrix([sp.diff(V, s) for s in q])
    C = sp.zeros(2, 2)
    for i in range(2):
        for j in range(2):
            C[i, j] = sum(
                sp.Rational(1, 2) * (sp.diff(M[i, j], q[k]) + sp.diff(M[i, k], q[j]) - sp.diff(M[j, k], q[i])) * qd[k]
                for k in range(2)
            )
    params = (m1, m2, l1, l2, c1, c2, I1, I2, g0)
    args = (params, (q1, q2), (qd1, qd2))
    return (
        sp.lambdify(args, M, "numpy"),
        sp.lambdify(args, C, "numpy"),
        sp.lambdify(args, g, "numpy"),
    )


def oracle_params(m=(1.0, 1.0), l=(1.0, 1.0), c=None, inertia=(1.0, 1.0), g0=9.81):
    c = c or (l[0] / 2, l[1] / 2)
    return (m[0], m[1], l[0], l[1], c[0], c[1], inertia[0], inertia[1], g0)


@pytest.fixture(scope="session")
def planar():
    return planar_two_link()


@pytest.fixture(scope="session")
def franka():
    return franka_like_chain()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@functools.lru_cache(maxsize=None)
def _scenario_doc(name):
    with open(SCENARIO_DIR / f"{name}.toml", "rb") as fh:
        return tomllib.load(fh)


def scenario_doc(name="planar2dof"):
    """Editable copy of a bundled scenario file as a dict."""
    return copy.deepcopy(_scenario_doc(name))


def clean_planar_doc(duration=None):
    """Planar scenario with the nominal model exact and no disturbances."""
    doc = scenario_doc("planar2dof")
    doc["disturbance"] = {}
    if duration is not None:
        doc["sim"]["duration"] = duration
    return doc
