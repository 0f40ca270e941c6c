"""Joint-space reference trajectories built from quintic segments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controllers import TrajectoryPoint


def quintic_blend(tau):
    """Rest-to-rest quintic s(tau) on [0, 1] and its first two derivatives."""
    s = tau**3 * (10.0 - 15.0 * tau + 6.0 * tau**2)
    ds = 30.0 * tau**2 * (1.0 - tau) ** 2
    dds = 60.0 * tau * (1.0 - tau) * (1.0 - 2.0 * tau)
    return s, ds, dds


@dataclass(frozen=True)
class Trajectory:
    """Piecewise quintic path through ``knots`` reached at ``knot_times``.

    Each segment starts and ends at rest (zero velocity and acceleration);
    a segment between identical knots is a hold.
    """

    knot_times: np.ndarray
    knots: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.knot_times, dtype=float)
        knots = np.atleast_2d(np.asarray(self.knots, dtype=float))
        if times.ndim != 1 or len(times) < 1 or len(times) != len(knots):
            raise ValueError("knot_times and knots must have matching lengths")
        if np.any(np.diff(times) <= 0):
            raise ValueError("knot_times must be strictly increasing")
        if not np.all(np.isfinite(knots)):
            raise ValueError("knots must be finite")
        object.__setattr__(self, "knot_times", times)
        object.__setattr__(self, "knots", knots)

    @classmethod
    def hold(cls, q, duration: float) -> "Trajectory":
        q = np.asarray(q, dtype=float)
        return cls(np.array([0.0, duration]), np.vstack([q, q]))

    @property
    def dof(self) -> int:
        return self.knots.shape[1]

    @property
    def duration(self) -> float:
        return float(self.knot_times[-1])

    def __call__(self, t: float) -> TrajectoryPoint:
        return generate_trajectory(self, t)


def generate_trajectory(traj: Trajectory, t: float) -> TrajectoryPoint:
    times = traj.knot_times
    if not (times[0] - 1e-12 <= t <= times[-1] + 1e-9):
        raise ValueError(f"t={t} outside trajectory range [{times[0]}, {times[-1]}]")
    n = traj.dof
    if len(times) == 1:
        return TrajectoryPoint(t, traj.knots[0].copy(), np.zeros(n), np.zeros(n))
    i = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2))
    t0, t1 = times[i], times[i + 1]
    T = t1 - t0
    tau = float(np.clip((t - t0) / T, 0.0, 1.0))
    delta = traj.knots[i + 1] - traj.knots[i]
    s, ds, dds = quintic_blend(tau)
    return TrajectoryPoint(t, traj.knots[i] + delta * s, delta * ds / T, delta * dds / T**2)
