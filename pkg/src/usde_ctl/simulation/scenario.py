"""Scenario description and its TOML file schema.

Sections: ``[model]``, ``[controller]``, ``[trajectory]``, ``[disturbance]``
and ``[sim]``. See ``usde_ctl/scenarios/*.toml`` for complete examples.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..controllers import ControllerConfig
from ..dynamics import LinkParams, ManipulatorModel, franka_like_chain, planar_two_link
from ..trajectory import Trajectory

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


class ScenarioError(ValueError):
    """Schema violation in a scenario file; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class Payload:
    mass: float = 0.0
    attach_time: float = np.inf
    detach_time: float = np.inf
    point: tuple = None  # last-link frame; defaults to the model's end-effector point

    def attached(self, t: float) -> bool:
        eps = 1e-9
        return self.mass > 0 and self.attach_time - eps <= t < self.detach_time - eps


@dataclass(frozen=True)
class Friction:
    viscous: np.ndarray = None
    coulomb: np.ndarray = None
    steepness: float = 100.0

    def torque(self, qd: np.ndarray):
        out = 0.0
        if self.viscous is not None:
            out = -self.viscous * qd
        if self.coulomb is not None:
            out = out - self.coulomb * np.tanh(self.steepness * qd)
        return out


@dataclass(frozen=True)
class ExternalTorque:
    """Scripted torque ``offset + amplitude sin(omega (t - start))`` on ``[start, end)``."""

    start: float = 0.0
    end: float = np.inf
    offset: np.ndarray = None
    amplitude: np.ndarray = None
    omega: float = 0.0

    def __call__(self, t: float, n: int) -> np.ndarray:
        if not (self.start <= t < self.end):
            return np.zeros(n)
        out = np.zeros(n)
        if self.offset is not None:
            out += self.offset
        if self.amplitude is not None:
            out += self.amplitude * np.sin(self.omega * (t - self.start))
        return out


@dataclass(frozen=True)
class Phase:
    name: str
    start: float
    end: float


@dataclass
class Scenario:
    model_nominal: ManipulatorModel
    model_true: ManipulatorModel
    trajectory: Trajectory
    controller: ControllerConfig
    control_dt: float = 1e-3
    physics_substeps: int = 10
    duration: float = None
    payload: Payload = field(default_factory=Payload)
    friction: Friction = field(default_factory=Friction)
    external: tuple = ()
    velocity_noise_std: float = 0.0
    seed: int = 0
    phases: tuple = ()
    variants: tuple = ("ctc", "fg", "ag", "st")
    q0: np.ndarray = None
    qd0: np.ndarray = None
    name: str = ""

    def __post_init__(self):
        if self.duration is None:
            self.duration = self.trajectory.duration
        if not self.control_dt > 0:
            raise ScenarioError("sim.control_dt", "must be > 0")
        if int(self.physics_substeps) < 1:
            raise ScenarioError("sim.physics_substeps", "must be >= 1")
        self.physics_substeps = int(self.physics_substeps)
        if self.duration > self.trajectory.duration + 1e-9:
            raise ScenarioError("sim.duration", "exceeds the trajectory's last knot time")
        n = self.model_nominal.dof
        if self.model_true.dof != n or self.trajectory.dof != n or self.controller.dof != n:
            raise ScenarioError("model", "model, trajectory and controller disagree on the number of joints")
        p = self.payload
        if p.mass < 0:
            raise ScenarioError("disturbance.payload_mass", "must be >= 0")
        if p.mass > 0 and not (p.attach_time < p.detach_time):
            raise ScenarioError("disturbance.attach_time", "must precede detach_time")
        if p.mass > 0 and np.isfinite(p.detach_time) and p.detach_time > self.duration + 1e-9:
            raise ScenarioError("disturbance.detach_time", "must not exceed the duration")

    @property
    def dof(self) -> int:
        return self.model_nominal.dof

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.control_dt))

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=int(seed))

    def external_torque(self, t: float) -> np.ndarray:
        out = np.zeros(self.dof)
        for ext in self.external:
            out += ext(t, self.dof)
        return out


# ---------------------------------------------------------------- loading


def _get(table: dict, key: str, path: str, default=..., kind=None):
    if key not in table:
        if default is ...:
            raise ScenarioError(f"{path}.{key}", "missing required field")
        return default
    val = table[key]
    if kind is not None:
        try:
            val = kind(val)
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"{path}.{key}", f"invalid value {val!r} ({exc})") from None
    return val


def _vec(val, path, n=None):
    try:
        arr = np.asarray(val, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioError(path, f"expected numbers, got {val!r}") from None
    if n is not None and arr.ndim == 0:
        arr = np.full(n, float(arr))
    if n is not None and arr.shape != (n,):
        raise ScenarioError(path, f"expected {n} values, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ScenarioError(path, "values must be finite")
    return arr


def _parse_model(tab: dict) -> ManipulatorModel:
    path = "model"
    preset = tab.get("preset")
    gravity = tab.get("gravity")
    if preset == "planar2":
        base = planar_two_link() if gravity is None else planar_two_link(gravity=_vec(gravity, "model.gravity", 3))
    elif preset == "franka_like":
        base = franka_like_chain() if gravity is None else franka_like_chain(gravity=_vec(gravity, "model.gravity", 3))
    elif preset is None:
        base = None
    else:
        raise ScenarioError("model.preset", f"unknown preset {preset!r} (planar2, franka_like)")
    if "links" in tab:
        kind = _get(tab, "kind", path, "chain" if base is None else base.kind, str)
        links = []
        for i, lt in enumerate(tab["links"]):
            lp = f"model.links[{i}]"
            try:
                links.append(
                    LinkParams(
                        mass=_get(lt, "mass", lp, kind=float),
                        length=_get(lt, "length", lp, 0.0, float),
                        com=tuple(_vec(_get(lt, "com", lp, [0.0, 0.0, 0.0]), f"{lp}.com", 3)),
                        inertia=np.asarray(_get(lt, "inertia", lp), dtype=float),
                        dh=tuple(_vec(_get(lt, "dh", lp, [0.0, 0.0, 0.0, 0.0]), f"{lp}.dh", 4)),
                    )
                )
            except ValueError as exc:
                if isinstance(exc, ScenarioError):
                    raise
                raise ScenarioError(lp, str(exc)) from None
        try:
            base = ManipulatorModel(
                links=tuple(links),
                kind=kind,
                gravity=None if gravity is None else _vec(gravity, "model.gravity", 3),
                ee_offset=None if "ee_offset" not in tab else tuple(_vec(tab["ee_offset"], "model.ee_offset", 3)),
            )
        except ValueError as exc:
            raise ScenarioError("model", str(exc)) from None
    if base is None:
        raise ScenarioError("model", "needs either a preset or a links array")
    if "dof" in tab and int(tab["dof"]) != base.dof:
        raise ScenarioError("model.dof", f"declares {tab['dof']} joints but {base.dof} links are defined")
    return base


def _parse_controller(tab: dict, n: int) -> ControllerConfig:
    path = "controller"
    use_reference = tab.get("gains", "reference") == "reference"
    kw = {}
    for key in ("eta", "K", "K_lower", "pi", "sigma", "T1", "T2", "tau_limits"):
        if key in tab:
            kw[key] = _vec(tab[key], f"{path}.{key}", n)
    for key in ("sigma_max", "k"):
        if key in tab:
            kw[key] = _get(tab, key, path, kind=float)
    if "abs_s" in tab:
        kw["abs_s"] = bool(tab["abs_s"])
    try:
        if use_reference and n <= 7:
            return ControllerConfig.reference_gains(n, **kw)
        if "eta" not in kw or "K" not in kw:
            raise ScenarioError(path, "eta and K are required unless gains = 'reference'")
        return ControllerConfig(**kw)
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(path, str(exc)) from None


def scenario_from_dict(doc: dict, name: str = "") -> Scenario:
    for section in ("model", "trajectory", "sim"):
        if section not in doc:
            raise ScenarioError(section, "missing section")
    nominal = _parse_model(doc["model"])
    n = nominal.dof
    ctrl = _parse_controller(doc.get("controller", {}), n)
    variants = tuple(v.lower() for v in doc.get("controller", {}).get("variants", ("ctc", "fg", "ag", "st")))
    for v in variants:
        if v not in ("ctc", "fg", "ag", "st"):
            raise ScenarioError("controller.variants", f"unknown variant {v!r}")

    tt = doc["trajectory"]
    times = _vec(_get(tt, "knot_times", "trajectory"), "trajectory.knot_times")
    knots = np.asarray(_get(tt, "knots", "trajectory"), dtype=float)
    if knots.ndim != 2 or knots.shape[1] != n:
        raise ScenarioError("trajectory.knots", f"expected rows of {n} joint values")
    try:
        traj = Trajectory(times, knots)
    except ValueError as exc:
        raise ScenarioError("trajectory", str(exc)) from None
    phases = tuple(
        Phase(str(_get(p, "name", f"trajectory.phases[{i}]")), float(p["start"]), float(p["end"]))
        for i, p in enumerate(tt.get("phases", []))
    )

    dt_ = doc.get("disturbance", {})
    true_model = nominal
    if "mass_scale" in dt_:
        true_model = nominal.scaled(_vec(dt_["mass_scale"], "disturbance.mass_scale", n))
    payload = Payload(
        mass=_get(dt_, "payload_mass", "disturbance", 0.0, float),
        attach_time=_get(dt_, "attach_time", "disturbance", np.inf, float),
        detach_time=_get(dt_, "detach_time", "disturbance", np.inf, float),
        point=None if "payload_point" not in dt_ else tuple(_vec(dt_["payload_point"], "disturbance.payload_point", 3)),
    )
    friction = Friction(
        viscous=None if "viscous" not in dt_ else _vec(dt_["viscous"], "disturbance.viscous", n),
        coulomb=None if "coulomb" not in dt_ else _vec(dt_["coulomb"], "disturbance.coulomb", n),
        steepness=_get(dt_, "tanh_steepness", "disturbance", 100.0, float),
    )
    external = []
    for i, et in enumerate(dt_.get("external", [])):
        ep = f"disturbance.external[{i}]"
        external.append(
            ExternalTorque(
                start=_get(et, "start", ep, 0.0, float),
                end=_get(et, "end", ep, np.inf, float),
                offset=None if "torque" not in et else _vec(et["torque"], f"{ep}.torque", n),
                amplitude=None if "amplitude" not in et else _vec(et["amplitude"], f"{ep}.amplitude", n),
                omega=_get(et, "omega", ep, 0.0, float),
            )
        )

    st = doc["sim"]
    return Scenario(
        model_nominal=nominal,
        model_true=true_model,
        trajectory=traj,
        controller=ctrl,
        control_dt=_get(st, "control_dt", "sim", 1e-3, float),
        physics_substeps=_get(st, "physics_substeps", "sim", 10, int),
        duration=_get(st, "duration", "sim", traj.duration, float),
        payload=payload,
        friction=friction,
        external=tuple(external),
        velocity_noise_std=_get(st, "velocity_noise_std", "sim", 0.0, float),
        seed=_get(st, "seed", "sim", 0, int),
        phases=phases,
        variants=variants,
        name=name,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    if not path.exists() and not path.is_absolute() and (SCENARIO_DIR / path).exists():
        path = SCENARIO_DIR / path
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ScenarioError("<file>", f"not valid TOML: {exc}") from None
    return scenario_from_dict(doc, name=path.stem)


def builtin_scenario(name: str) -> Scenario:
    return load_scenario(SCENARIO_DIR / f"{name}.toml")
