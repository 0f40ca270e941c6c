"""Run several controllers on one scenario and tabulate the results."""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..controllers import VARIANT_LABELS, VARIANTS
from .metrics import ErrorMetrics, chattering_index, compute_metrics

log = logging.getLogger(__name__)

# expected accuracy order, worst first
EXPECTED_ORDER = ("ctc", "fg", "ag", "st")
MIN_GAP = 0.05


@dataclass
class VariantResult:
    variant: str
    metrics: ErrorMetrics | None
    chattering: float
    diverged: bool
    trace: object = field(default=None, repr=False)


@dataclass
class ComparisonReport:
    scenario: str
    window: tuple[float, float]
    results: dict  # variant -> VariantResult, in run order

    @property
    def ranking(self) -> list[str]:
        """Non-diverged variants, most accurate (lowest RMS) first."""
        ok = [r for r in self.results.values() if not r.diverged and r.metrics is not None]
        return [r.variant for r in sorted(ok, key=lambda r: r.metrics.rms)]

    @property
    def chattering_ranking(self) -> list[str]:
        """Non-diverged variants, smoothest torque first."""
        ok = [r for r in self.results.values() if not r.diverged]
        return [r.variant for r in sorted(ok, key=lambda r: r.chattering)]

    def ordering_gaps(self, order=EXPECTED_ORDER) -> list[tuple[str, str, float]]:
        """Relative RMS gaps ``(rms_a - rms_b) / rms_b`` for consecutive pairs
        of ``order`` present in the report."""
        present = [v for v in order if v in self.results and not self.results[v].diverged]
        out = []
        for a, b in zip(present, present[1:]):
            ra, rb = self.results[a].metrics.rms, self.results[b].metrics.rms
            out.append((a, b, (ra - rb) / rb))
        return out

    def ordering_holds(self, order=EXPECTED_ORDER, min_gap: float = MIN_GAP) -> bool:
        gaps = self.ordering_gaps(order)
        return bool(gaps) and all(g >= min_gap for _, _, g in gaps)

    def st_chatters_most(self) -> bool | None:
        if "st" not in self.results or self.results["st"].diverged:
            return None
        others = [r.chattering for v, r in self.results.items() if v != "st" and not r.diverged]
        return all(self.results["st"].chattering > c for c in others)


def _run_one(args):
    from ..simulation import run_scenario

    scenario, variant, cfg = args
    return run_scenario(scenario, variant, cfg)


def _config_for(configs, variant, scenario):
    if configs is None:
        return scenario.controller
    if isinstance(configs, dict):
        return configs.get(variant, scenario.controller)
    return configs


def compare_controllers(scenario, configs=None, variants=None, jobs: int = 1, window=None,
                        keep_traces: bool = True) -> ComparisonReport:
    """Run each variant on ``scenario`` and collect metrics.

    ``configs`` is one ``ControllerConfig`` for all variants, a dict keyed
    by variant, or None for the scenario's own. Runs are independent, so
    ``jobs > 1`` fans them out over processes without changing any result.
    """
    variants = tuple(variants or scenario.variants)
    for v in variants:
        if v not in VARIANTS:
            raise ValueError(f"unknown controller {v!r}; valid: {', '.join(VARIANTS)}")
    work = [(scenario, v, _config_for(configs, v, scenario)) for v in variants]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(work))) as pool:
            traces = list(pool.map(_run_one, work))
    else:
        traces = [_run_one(w) for w in work]

    if window is None:
        window = (0.0, scenario.duration)
    results = {}
    for v, tr in zip(variants, traces):
        metrics = None
        if not tr.diverged:
            metrics = compute_metrics(tr, window, scenario.phases)
        else:
            log.warning("%s diverged; excluded from rankings", v)
        results[v] = VariantResult(v, metrics, chattering_index(tr), tr.diverged, tr if keep_traces else None)
    return ComparisonReport(scenario.name, tuple(map(float, window)), results)


# ---------------------------------------------------------------- output

METRIC_COLUMNS = ("variant", "phase", "t0", "t1", "samples", "mean", "median", "rms", "chattering", "diverged")


def metrics_csv(report: ComparisonReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRIC_COLUMNS)
    for v, r in report.results.items():
        if r.metrics is None:
            w.writerow([v, "all", *report.window, 0, "", "", "", f"{r.chattering:.9g}", 1])
            continue
        rows = [("all", r.metrics)] + list(r.metrics.phases.items())
        for name, m in rows:
            w.writerow([v, name, f"{m.window[0]:.9g}", f"{m.window[1]:.9g}", m.samples,
                        f"{m.mean:.9g}", f"{m.median:.9g}", f"{m.rms:.9g}",
                        f"{r.chattering:.9g}", int(r.diverged)])
    return buf.getvalue()


def _fmt(x: float) -> str:
    return f"{x:.4g}"


def render_markdown(report: ComparisonReport) -> str:
    lines = [f"# Controller comparison: {report.scenario}", ""]
    lines.append(f"Window: t in [{report.window[0]:g}, {report.window[1]:g}] s. Error norm ||e||_2 in rad.")
    lines += ["", "| controller | mean | median | RMS | chattering (RMS dtau) | status |", "|---|---|---|---|---|---|"]
    for v, r in report.results.items():
        label = VARIANT_LABELS[v]
        if r.metrics is None:
            lines.append(f"| {label} | - | - | - | {_fmt(r.chattering)} | diverged |")
        else:
            m = r.metrics
            lines.append(f"| {label} | {_fmt(m.mean)} | {_fmt(m.median)} | {_fmt(m.rms)} | {_fmt(r.chattering)} | ok |")

    phase_names = []
    for r in report.results.values():
        if r.metrics is not None:
            phase_names += [p for p in r.metrics.phases if p not in phase_names]
    if phase_names:
        lines += ["", "## Mean ||e|| per phase", ""]
        lines.append("| controller | " + " | ".join(phase_names) + " |")
        lines.append("|---" * (len(phase_names) + 1) + "|")
        for v, r in report.results.items():
            if r.metrics is None:
                continue
            cells = [_fmt(r.metrics.phases[p].mean) if p in r.metrics.phases else "-" for p in phase_names]
            lines.append(f"| {VARIANT_LABELS[v]} | " + " | ".join(cells) + " |")

    lines += ["", "## Qualitative indices", ""]
    rank = report.ranking
    lines.append("Accuracy (best first, by RMS): " + (", ".join(VARIANT_LABELS[v] for v in rank) or "none"))
    chat = report.chattering_ranking
    lines.append("")
    lines.append("Torque smoothness (smoothest first): " + (", ".join(VARIANT_LABELS[v] for v in chat) or "none"))
    excluded = [VARIANT_LABELS[v] for v, r in report.results.items() if r.diverged]
    if excluded:
        lines += ["", "Excluded (diverged): " + ", ".join(excluded)]

    gaps = report.ordering_gaps()
    if gaps:
        lines += ["", "## Expected RMS ordering", ""]
        names = " > ".join(VARIANT_LABELS[v] for v in EXPECTED_ORDER if v in report.results)
        verdict = "holds" if report.ordering_holds() else "does not hold"
        lines.append(f"{names} with every gap >= {MIN_GAP:.0%}: {verdict}")
        lines.append("")
        for a, b, g in gaps:
            lines.append(f"- {VARIANT_LABELS[a]} vs {VARIANT_LABELS[b]}: {g:+.2%}")
    st = report.st_chatters_most()
    if st is not None and len(report.results) > 1:
        lines += ["", f"USDE-ST has the largest chattering index: {'yes' if st else 'no'}"]
    return "\n".join(lines) + "\n"


def write_report(report: ComparisonReport, out_dir) -> tuple[Path, Path]:
    """Write ``metrics.csv`` and ``report.md`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "metrics.csv"
    md_path = out / "report.md"
    csv_path.write_text(metrics_csv(report))
    md_path.write_text(render_markdown(report))
    return csv_path, md_path
