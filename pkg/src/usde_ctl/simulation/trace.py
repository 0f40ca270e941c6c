"""Per-control-step trace storage and its CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# (csv prefix, attribute) for the joint-vector column groups, in file order
VECTOR_GROUPS = (
    ("q", "q"),
    ("qd", "qd"),
    ("q_des", "q_des"),
    ("e", "e"),
    ("S", "S"),
    ("tau", "tau_cmd"),
    ("tau_applied", "tau_applied"),
    ("d_hat", "d_hat"),
    ("d_true", "d_true"),
    ("K_hat", "K_hat"),
    ("Sigma", "Sigma"),
)
FLOAT_FORMAT = "%.9g"


@dataclass
class Trace:
    """Column store of TraceRecords, one row per control step.

    ``tau_cmd`` is the unsaturated controller output and ``tau_applied`` the
    saturated torque held over ``[t, t + dt)``. ``d_true`` on row ``i > 0``
    is the lumped disturbance averaged (trapezoid) over the interval ending
    at ``t[i]``; row 0 holds its value at ``t = 0``.
    """

    t: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    q_des: np.ndarray
    e: np.ndarray
    S: np.ndarray
    tau_cmd: np.ndarray
    tau_applied: np.ndarray
    d_hat: np.ndarray
    d_true: np.ndarray
    K_hat: np.ndarray
    Sigma: np.ndarray
    V_lyap: np.ndarray
    variant: str = ""
    diverged: bool = False
    meta: dict = field(default_factory=dict)

    @classmethod
    def allocate(cls, rows: int, n: int, variant: str = "") -> "Trace":
        vec = {attr: np.full((rows, n), np.nan) for _, attr in VECTOR_GROUPS}
        return cls(t=np.full(rows, np.nan), V_lyap=np.full(rows, np.nan), variant=variant, **vec)

    @property
    def dof(self) -> int:
        return self.q.shape[1]

    def __len__(self) -> int:
        return len(self.t)

    def truncate(self, rows: int) -> "Trace":
        vec = {attr: getattr(self, attr)[:rows] for _, attr in VECTOR_GROUPS}
        return Trace(
            t=self.t[:rows], V_lyap=self.V_lyap[:rows], variant=self.variant, diverged=self.diverged,
            meta=dict(self.meta), **vec,
        )

    def window(self, t0: float, t1: float) -> np.ndarray:
        """Boolean row mask for ``t0 <= t <= t1`` (with a half-step tolerance)."""
        eps = 1e-9
        return (self.t >= t0 - eps) & (self.t <= t1 + eps)

    def header(self) -> list[str]:
        n = self.dof
        cols = ["t"]
        for prefix, _ in VECTOR_GROUPS:
            cols += [f"{prefix}_{j + 1}" for j in range(n)]
        cols.append("V_lyap")
        return cols

    def as_matrix(self) -> np.ndarray:
        parts = [self.t[:, None]] + [getattr(self, attr) for _, attr in VECTOR_GROUPS] + [self.V_lyap[:, None]]
        return np.hstack(parts)

    def equals(self, other: "Trace") -> bool:
        a, b = self.as_matrix(), other.as_matrix()
        return a.shape == b.shape and bool(np.array_equal(a, b, equal_nan=True))


def write_trace_csv(trace: Trace, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(trace_to_csv(trace))
    return path


def trace_to_csv(trace: Trace) -> str:
    buf = io.StringIO()
    buf.write(",".join(trace.header()) + "\n")
    np.savetxt(buf, trace.as_matrix(), fmt=FLOAT_FORMAT, delimiter=",")
    return buf.getvalue()


def read_trace_csv(path, variant: str = "") -> Trace:
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return _from_columns(header, data, variant)


def _from_columns(header: list[str], data: np.ndarray, variant: str) -> Trace:
    idx = {name: i for i, name in enumerate(header)}
    n = sum(1 for name in header if name.startswith("q_") and name[2:].isdigit())
    cols = {}
    for prefix, attr in VECTOR_GROUPS:
        cols[attr] = data[:, [idx[f"{prefix}_{j + 1}"] for j in range(n)]]
    return Trace(t=data[:, idx["t"]], V_lyap=data[:, idx["V_lyap"]], variant=variant, **cols)


def rounded(trace: Trace) -> Trace:
    """Trace as it reads back from CSV (9 significant digits)."""
    text = trace_to_csv(trace)
    lines = text.splitlines()
    header = lines[0].split(",")
    data = np.loadtxt(io.StringIO("\n".join(lines[1:])), delimiter=",", ndmin=2)
    out = _from_columns(header, data, trace.variant)
    out.diverged = trace.diverged
    out.meta = dict(trace.meta)
    return out


def write_long_csv(traces: dict, path, series=("q", "e", "tau_applied", "d_hat", "K_hat")) -> Path:
    """Plot-ready long format: ``t, series, joint, value`` rows."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "series", "joint", "value"])
        for name, tr in traces.items():
            for attr in series:
                vals = getattr(tr, attr)
                for j in range(tr.dof):
                    label = f"{name}:{attr}"
                    for t, v in zip(tr.t, vals[:, j]):
                        w.writerow([FLOAT_FORMAT % t, label, j + 1, FLOAT_FORMAT % v])
    return path
