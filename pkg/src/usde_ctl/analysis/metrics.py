"""Tracking-error statistics, chattering index and the lag oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ErrorMetrics:
    """Mean, median and RMS of the per-step error norm over one window."""

    mean: float
    median: float
    rms: float
    window: tuple[float, float]
    samples: int
    phases: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        return {"mean": self.mean, "median": self.median, "rms": self.rms}


def error_norms(trace) -> np.ndarray:
    return np.linalg.norm(np.asarray(trace.e, dtype=float), axis=1)


def _stats(norms: np.ndarray, window, samples) -> ErrorMetrics:
    if norms.size == 0:
        raise ValueError(f"no samples in window [{window[0]}, {window[1]}]")
    return ErrorMetrics(
        mean=float(np.mean(norms)),
        median=float(np.median(norms)),
        rms=float(np.sqrt(np.mean(norms**2))),
        window=(float(window[0]), float(window[1])),
        samples=int(samples),
    )


def compute_metrics(trace, window=None, phases=()) -> ErrorMetrics:
    """Statistics of ``||e||_2`` over ``window`` (inclusive), with per-phase splits.

    ``phases`` is a sequence of objects with ``name``, ``start`` and ``end``;
    each split is the intersection of the phase with the window. A phase
    that falls outside the window is left out.
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    t = np.asarray(trace.t, dtype=float)
    if window is None:
        window = (float(t[0]), float(t[-1]))
    t0, t1 = map(float, window)
    if t1 < t0:
        raise ValueError(f"window end {t1} precedes its start {t0}")
    norms = error_norms(trace)
    mask = (t >= t0 - 1e-12) & (t <= t1 + 1e-12) & np.isfinite(norms)
    overall = _stats(norms[mask], (t0, t1), mask.sum())
    splits = {}
    for ph in phases:
        a, b = max(t0, ph.start), min(t1, ph.end)
        m = mask & (t >= a - 1e-12) & (t <= b + 1e-12)
        if b >= a and m.any():
            splits[ph.name] = _stats(norms[m], (a, b), m.sum())
    return ErrorMetrics(overall.mean, overall.median, overall.rms, overall.window, overall.samples, splits)


def window_mean(trace, t0: float, t1: float) -> float:
    """Mean ``||e||`` on ``[t0, t1]``."""
    return compute_metrics(trace, (t0, t1)).mean


def chattering_index(trace, column: str = "tau_applied") -> float:
    """RMS over steps of ``||tau[i] - tau[i-1]||``."""
    tau = np.asarray(getattr(trace, column), dtype=float)
    tau = tau[np.all(np.isfinite(tau), axis=1)]
    if len(tau) < 2:
        return math.nan
    d = np.diff(tau, axis=0)
    return float(np.sqrt(np.mean(np.sum(d * d, axis=1))))


def discrete_lag(x, dt: float, k: float) -> np.ndarray:
    """Exact sampled first-order lag ``k y' + y = x`` with zero initial state.

    Row 0 of the result is zero. Row ``i`` is the state after the interval
    ending at sample ``i``, over which the input is held at ``x[i]``.
    """
    if k <= 0 or dt <= 0:
        raise ValueError("dt and k must be positive")
    x = np.asarray(x, dtype=float)
    a = math.exp(-dt / k)
    y = np.zeros_like(x)
    for i in range(1, len(x)):
        y[i] = a * y[i - 1] + (1.0 - a) * x[i]
    return y


def lag_equivalence_error(trace, dt: float, k: float, skip: int = 0) -> tuple[float, float]:
    """``(max ||d_hat - lag_k(d_true)||, max ||d_true||)`` along a trace.

    ``skip`` drops leading rows from both maxima.
    """
    ref = discrete_lag(trace.d_true, dt, k)
    diff = np.linalg.norm(np.asarray(trace.d_hat) - ref, axis=1)[skip:]
    scale = np.linalg.norm(np.asarray(trace.d_true), axis=1)[skip:]
    return float(np.max(diff)), float(np.max(scale))
