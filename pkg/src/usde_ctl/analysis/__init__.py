"""Post-processing: error metrics, Lyapunov monitors, gain certificate, comparisons."""

from .certificate import (
    AGFeasibility,
    STGainCertificate,
    StabilityMonitorConfig,
    ag_feasibility,
    ag_margin,
    alpha1,
    alpha3,
    beta1,
    beta3,
    certify_gains,
    finite_time_bound,
    measure_perturbation_bounds,
    residual_band,
    st_gain_certificate,
    st_Q,
)
from .compare import ComparisonReport, compare_controllers, metrics_csv, render_markdown, write_report
from .lyapunov import lyapunov_series, lyapunov_v1, lyapunov_v2, lyapunov_v3, st_P, st_state
from .metrics import (
    ErrorMetrics,
    chattering_index,
    compute_metrics,
    discrete_lag,
    error_norms,
    lag_equivalence_error,
    window_mean,
)
from .monitor import DecayCheck, check_v1_decay, measured_d0
from .scalar_st import BoundCheck, ScalarLoop, check_bound, gain_sweep

__all__ = [name for name in dir() if not name.startswith("_")]
