"""Figure analogues: one subject's traces and error distributions, cohort before/after plots."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import PursuitError
from .features import METRIC_NAMES, FeatureRow, decompose_errors
from .preprocess import mask_blinks
from .stats import subject_means
from .svg import POST_COLOR, PRE_COLOR, TARGET_COLOR, Chart, side_by_side
from .trace import GazeRun, atomic_write_text, target_angle

N_BINS = 40
COHORT_PLOTS = (
    ("cohort_blink_loss.svg", "blink_loss_pct", "Blink loss", "blink loss (%)"),
    ("cohort_kurtosis.svg", "kurt_phase", "Kurtosis (phase error)", "excess kurtosis"),
    ("cohort_skew.svg", "skew_phase", "Skew (phase error)", "skewness"),
)


class SubjectMissing(PursuitError):
    pass


def trace_figure(run: GazeRun, title: str, color: str) -> str:
    """Left: gaze minus target.  Right: gaze and target path about the display center."""
    spec = run.stimulus
    theta = target_angle(spec, run.t)
    tx = spec.center_deg[0] + spec.radius_deg * np.cos(theta)
    ty = spec.center_deg[1] + spec.radius_deg * np.sin(theta)
    ok = run.valid
    gx = np.where(ok, run.x, np.nan)
    gy = np.where(ok, run.y, np.nan)
    rel = Chart(f"{title}: relative to target", "dx (deg)", "dy (deg)", equal_aspect=True)
    rel.line(gx - tx, gy - ty, color, width=0.8)
    ring = np.linspace(0, 2 * math.pi, 181)
    cen = Chart(f"{title}: relative to center", "x (deg)", "y (deg)", equal_aspect=True)
    cen.line(spec.center_deg[0] + spec.radius_deg * np.cos(ring),
             spec.center_deg[1] + spec.radius_deg * np.sin(ring), TARGET_COLOR, "target path", dash="4 3")
    cen.line(gx, gy, color, "gaze", width=0.8)
    return side_by_side([rel, cen])


def _pooled_errors(runs: Sequence[GazeRun]):
    phase, radial = [], []
    for run in runs:
        try:
            series = decompose_errors(run, mask_blinks(run))
        except PursuitError:
            continue
        phase.append(np.degrees(series.phase_usable()))
        radial.append(series.radial_usable())
    if not phase:
        return None
    return np.concatenate(phase), np.concatenate(radial)


def distribution_figure(pre: np.ndarray, post: np.ndarray, title: str, xlabel: str) -> str:
    lo = float(min(pre.min(), post.min()))
    hi = float(max(pre.max(), post.max()))
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    # shared bin edges so the two curves are comparable
    chart = Chart(title, xlabel, "fraction of samples")
    for vals, color, label in ((pre, PRE_COLOR, "pre-impairment"), (post, POST_COLOR, "post-impairment")):
        edges = np.linspace(lo, hi, N_BINS + 1)
        counts, _ = np.histogram(vals, bins=edges)
        chart.step_hist(edges, counts / max(vals.size, 1), color, label)
    return chart.render()


def paired_figure(baseline: np.ndarray, impaired: np.ndarray, title: str, ylabel: str) -> str:
    chart = Chart(title, "", ylabel, width=360).categorical_x(["baseline", "impaired"])
    for b, i in zip(baseline, impaired):
        chart.line([0.0, 1.0], [b, i], "#999999", width=1.0)
    chart.points(np.zeros(len(baseline)), baseline, PRE_COLOR, "baseline")
    chart.points(np.ones(len(impaired)), impaired, POST_COLOR, "impaired")
    return chart.render()


def build_report(runs: Sequence[GazeRun], rows: Sequence[FeatureRow], subject_id: str, out: Path) -> list[Path]:
    """Write SVG figures and index.md into ``out``; return the written paths."""
    out = Path(out)
    mine = [r for r in runs if r.subject_id == subject_id]
    if not mine:
        raise SubjectMissing(f"subject {subject_id} not found in traces")
    written: list[Path] = []
    notes: list[str] = []

    def emit(name: str, text: str) -> None:
        path = out / name
        atomic_write_text(path, text)
        written.append(path)

    bad = {(r.subject_id, r.session, r.run_index) for r in rows if r.metrics is None}
    pre = sorted((r for r in mine if r.session == "baseline" and (r.subject_id, r.session, r.run_index) not in bad),
                 key=lambda r: r.run_index)
    post = sorted((r for r in mine if r.session == "impaired" and (r.subject_id, r.session, r.run_index) not in bad),
                  key=lambda r: r.run_index)
    individual = []
    if pre and post:
        emit("trace_pre.svg", trace_figure(pre[0], "Pre-impaired", PRE_COLOR))
        emit("trace_post.svg", trace_figure(post[0], "Post-impaired", POST_COLOR))
        a, b = _pooled_errors(pre), _pooled_errors(post)
        if a is not None and b is not None:
            emit("phase_error_hist.svg", distribution_figure(a[0], b[0], "Phase error distribution", "phase error (deg)"))
            emit("radial_error_hist.svg", distribution_figure(a[1], b[1], "Radial error distribution", "radial error (deg)"))
        individual = [p.name for p in written]
    else:
        notes.append(f"Subject {subject_id} has no usable run in one session; individual figures omitted.")

    triples = [(r.subject_id, r.session, r.metrics) for r in rows if r.metrics is not None]
    complete = {}
    for sid, session, _ in triples:
        complete.setdefault(sid, set()).add(session)
    keep = {sid for sid, s in complete.items() if s == {"baseline", "impaired"}}
    excluded = sorted(set(complete) - keep)
    if excluded:
        notes.append("Excluded from cohort plots (missing a usable session): " + ", ".join(excluded))
    means = subject_means([t for t in triples if t[0] in keep]) if keep else {}
    cohort = []
    for fname, metric, title, ylabel in COHORT_PLOTS:
        k = METRIC_NAMES.index(metric)
        b = np.array([means[s]["baseline"][k] for s in means])
        i = np.array([means[s]["impaired"][k] for s in means])
        emit(fname, paired_figure(b, i, title, ylabel))
        cohort.append(fname)

    lines = [f"# Pursuit report: subject {subject_id}", ""]
    if individual:
        lines += ["## Individual", ""] + [f"![{n}]({n})" for n in individual] + [""]
    lines += ["## Cohort (per-subject means, baseline vs impaired)", ""] + [f"![{n}]({n})" for n in cohort] + [""]
    if notes:
        lines += ["## Notes", ""] + [f"- {n}" for n in notes] + [""]
    emit("index.md", "\n".join(lines))
    return written
