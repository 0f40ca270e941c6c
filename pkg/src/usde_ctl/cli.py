"""Command-line front end: ``usde-ctl run | compare | certify``.

Exit codes:
  0  success
  1  certify: at least one joint failed the gain certificate
  2  usage or configuration error (missing file, schema violation,
     unknown controller, malformed number, theta0 outside (0, 1))
  3  a simulation diverged (its trace is still written)

Log verbosity comes from the ``USDE_CTL_LOG`` environment variable
(``DEBUG``, ``INFO``, ``WARNING``, ``ERROR`` or a number; default WARNING).
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

from .controllers import VARIANTS

EXIT_OK, EXIT_CERT_FAIL, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3

log = logging.getLogger("usde_ctl")


class UsageError(Exception):
    pass


def _configure_logging():
    level = os.environ.get("USDE_CTL_LOG", "WARNING").strip()
    value = int(level) if level.isdigit() else getattr(logging, level.upper(), None)
    if not isinstance(value, int):
        value = logging.WARNING
    logging.basicConfig(level=value, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


# ---------------------------------------------------------------- argument types


def _controllers(text: str) -> tuple[str, ...]:
    names = [s.strip().lower() for s in text.split(",") if s.strip()]
    if names == ["all"]:
        return VARIANTS
    bad = [s for s in names if s not in VARIANTS]
    if bad or not names:
        raise argparse.ArgumentTypeError(
            f"unknown controller {', '.join(bad) or repr(text)}; valid: {', '.join(VARIANTS)}, all"
        )
    return tuple(dict.fromkeys(names))


def _seed(text: str) -> int:
    try:
        v = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _finite(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"not a finite number: {text!r}")
    return v


def _floats(text: str) -> tuple[float, ...]:
    parts = [p for p in text.split(",")]
    if not parts or any(not p.strip() for p in parts):
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    return tuple(_finite(p) for p in parts)


def _window(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2 or not vals[0] < vals[1]:
        raise argparse.ArgumentTypeError(f"window must be 't0,t1' with t0 < t1, got {text!r}")
    return vals


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="usde-ctl",
        description="Simulate, compare and certify USDE-based manipulator controllers.",
        epilog="Exit codes: 0 ok, 1 certificate failed, 2 usage/config error, 3 diverged. "
               "Set USDE_CTL_LOG=DEBUG|INFO|WARNING|ERROR for log verbosity.",
    )
    sub = p.add_subparsers(dest="command", required=True, metavar="{run,compare,certify}")

    def sim_flags(sp, default_ctrl):
        sp.add_argument("--scenario", required=True,
                        help="scenario TOML file (bundled names such as paper7dof.toml also resolve)")
        sp.add_argument("--controller", type=_controllers, default=_controllers(default_ctrl),
                        help=f"one of {', '.join(VARIANTS)}, a comma-separated list, or all (default: {default_ctrl})")
        sp.add_argument("--out", "-o", default="out", help="output directory (default: out)")
        sp.add_argument("--seed", type=_seed, help="override the scenario's noise seed (unsigned 64-bit)")
        sp.add_argument("--jobs", type=_positive_int, default=1, help="parallel simulation processes (default: 1)")
        sp.add_argument("--window", type=_window, help="metrics window 't0,t1' in seconds (default: whole run)")

    run = sub.add_parser("run", help="simulate and write <variant>_trace.csv per controller")
    sim_flags(run, "all")
    run.add_argument("--long", action="store_true", help="also write long.csv (t, series, joint, value)")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="run controllers and write metrics.csv and report.md")
    sim_flags(cmp_, "all")
    cmp_.add_argument("--traces", action="store_true", help="also write the per-controller trace CSVs")
    cmp_.set_defaults(func=cmd_compare)

    cert = sub.add_parser("certify", help="check super-twisting gains against perturbation bounds")
    cert.add_argument("--T1", type=_floats, default=(4, 4, 4, 4, 2, 2, 2), help="per-joint T1 (default: 7-joint reference set)")
    cert.add_argument("--T2", type=_floats, default=(12, 12, 12, 12, 4, 4, 4), help="per-joint T2 (default: 7-joint reference set)")
    cert.add_argument("--delta1", type=_floats, default=(0.0,), help="rho1 bound(s), scalar or per joint (default 0)")
    cert.add_argument("--delta2", type=_floats, default=(0.0,), help="rho2 bound(s), scalar or per joint (default 0)")
    cert.add_argument("--V0", type=_finite, default=1.0, help="initial V3 for the finite-time bound (default 1)")
    cert.add_argument("--theta0", type=_finite, default=0.5, help="constant in (0, 1) of the bound (default 0.5)")
    cert.add_argument("--k", type=_finite, default=0.08, help="estimator filter constant in s (default 0.08)")
    cert.add_argument("--d0", type=_finite, default=0.0, help="bound on the disturbance rate (default 0)")
    cert.set_defaults(func=cmd_certify)
    return p


# ---------------------------------------------------------------- commands


def _load(args):
    from .simulation import ScenarioError, load_scenario

    path = Path(args.scenario)
    try:
        sc = load_scenario(path)
    except FileNotFoundError:
        raise UsageError(f"scenario file not found: {path}") from None
    except ScenarioError as exc:
        raise UsageError(f"scenario {path}: schema error at {exc}") from None
    if args.seed is not None:
        sc = sc.with_seed(args.seed)
    if args.window is not None and args.window[1] > sc.duration + 1e-9:
        raise UsageError(f"window end {args.window[1]} exceeds the scenario duration {sc.duration}")
    return sc


def _outdir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise UsageError(f"output directory {out} is not writable")
    return out


def cmd_run(args) -> int:
    from .analysis import compare_controllers
    from .simulation import write_long_csv, write_trace_csv

    sc = _load(args)
    out = _outdir(args.out)
    report = compare_controllers(sc, variants=args.controller, jobs=args.jobs, window=args.window)
    diverged = []
    for v, r in report.results.items():
        path = write_trace_csv(r.trace, out / f"{v}_trace.csv")
        status = "DIVERGED" if r.diverged else f"rms|e|={r.metrics.rms:.6g} rad"
        print(f"{v}: {path} ({len(r.trace)} rows, {status})")
        if r.diverged:
            diverged.append(v)
    if args.long:
        write_long_csv({v: r.trace for v, r in report.results.items()}, out / "long.csv")
    if diverged:
        print(f"error: diverged: {', '.join(diverged)}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_compare(args) -> int:
    from .analysis import compare_controllers, write_report
    from .simulation import write_long_csv, write_trace_csv

    sc = _load(args)
    out = _outdir(args.out)
    report = compare_controllers(sc, variants=args.controller, jobs=args.jobs, window=args.window)
    csv_path, md_path = write_report(report, out)
    write_long_csv({v: r.trace for v, r in report.results.items()}, out / "long.csv")
    if args.traces:
        for v, r in report.results.items():
            write_trace_csv(r.trace, out / f"{v}_trace.csv")
    print(md_path.read_text(), end="")
    print(f"wrote {csv_path} and {md_path}")
    diverged = [v for v, r in report.results.items() if r.diverged]
    if diverged:
        print(f"error: diverged: {', '.join(diverged)}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_certify(args) -> int:
    import numpy as np

    from .analysis import alpha3, beta3, certify_gains, finite_time_bound

    if not 0.0 < args.theta0 < 1.0:
        raise UsageError(f"theta0 must lie in (0, 1), got {args.theta0}")
    if args.V0 < 0 or args.k <= 0 or args.d0 < 0:
        raise UsageError("V0 and d0 must be >= 0 and k must be > 0")
    try:
        T1, T2, d1, d2 = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (args.T1, args.T2, args.delta1, args.delta2)))
        certs = certify_gains(T1, T2, d1, d2)
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    print(f"{'joint':>5} {'T1':>8} {'T2':>8} {'delta1':>9} {'delta2':>9} {'lmin(P)':>10} {'lmin(Q)':>10} {'gamma':>10}  ok")
    for i, c in enumerate(certs, 1):
        print(f"{i:>5} {c.T1:>8.4g} {c.T2:>8.4g} {c.delta1:>9.4g} {c.delta2:>9.4g} "
              f"{c.eig_P[0]:>10.4g} {c.eig_Q[0]:>10.4g} {c.gamma:>10.4g}  {'yes' if c.pd_ok else 'NO'}")
    failed = [i for i, c in enumerate(certs, 1) if not c.pd_ok]
    if failed:
        print(f"certificate failed for joint(s): {', '.join(map(str, failed))}")
        return EXIT_CERT_FAIL
    a3 = alpha3([c.gamma for c in certs], args.k)
    b3 = beta3(args.k, args.d0)
    t_f = finite_time_bound(args.V0, a3, args.theta0)
    print(f"alpha3 = {a3:.6g}  beta3 = {b3:.6g}  t_f = {t_f:.6g} s for V3(0) = {args.V0:g}, theta0 = {args.theta0:g}")
    return EXIT_OK


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
