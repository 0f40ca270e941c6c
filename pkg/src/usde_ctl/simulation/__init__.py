from .runner import Plant, run_scenario, true_lumped_disturbance
from .scenario import (
    SCENARIO_DIR,
    ExternalTorque,
    Friction,
    Payload,
    Phase,
    Scenario,
    ScenarioError,
    builtin_scenario,
    load_scenario,
    scenario_from_dict,
)
from .trace import Trace, read_trace_csv, rounded, trace_to_csv, write_long_csv, write_trace_csv

__all__ = [
    "SCENARIO_DIR",
    "ExternalTorque",
    "Friction",
    "Payload",
    "Phase",
    "Plant",
    "Scenario",
    "ScenarioError",
    "Trace",
    "builtin_scenario",
    "load_scenario",
    "read_trace_csv",
    "rounded",
    "run_scenario",
    "scenario_from_dict",
    "trace_to_csv",
    "true_lumped_disturbance",
    "write_long_csv",
    "write_trace_csv",
]
