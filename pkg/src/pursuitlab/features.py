"""Phase/radial error decomposition and the six per-run oculomotor metrics."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateRun, NoUsableSamples, TooFewSamples, ZeroVariance
from .preprocess import DEFAULT_PAD, ValidityMask, blink_loss_percent, invalid_segments, mask_blinks
from .trace import GazeRun, target_angle

MIN_USABLE = 10
CENTER_EXCLUSION = 0.1  # fraction of stimulus radius
SACCADE_GAIN_LIMIT = 3.0
# error spreads below this fraction of the stimulus radius are floating-point residue
NUMERIC_FLOOR = 1e-9

METRIC_NAMES = ("mean_radius_deg", "v_gain", "skew_radial", "skew_phase", "kurt_phase", "blink_loss_pct")
FEATURES_HEADER = ("subject_id", "session", "run_index") + METRIC_NAMES


@dataclass(frozen=True, eq=False)
class ErrorSeries:
    phase_err_rad: np.ndarray
    radial_err_deg: np.ndarray
    gaze_radius_deg: np.ndarray
    usable: np.ndarray

    def phase_usable(self) -> np.ndarray:
        return self.phase_err_rad[self.usable]

    def radial_usable(self) -> np.ndarray:
        return self.radial_err_deg[self.usable]


@dataclass(frozen=True)
class MetricVector:
    mean_radius_deg: float
    v_gain: float
    skew_radial: float
    skew_phase: float
    kurt_phase: float
    blink_loss_pct: float

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, k) for k in METRIC_NAMES)

    def to_dict(self) -> dict:
        return asdict(self)


def wrap_angle(a):
    """Wrap radians into (-pi, pi]."""
    return math.pi - np.mod(math.pi - np.asarray(a, dtype=float), 2.0 * math.pi)


def _gaze_polar(run: GazeRun) -> tuple[np.ndarray, np.ndarray]:
    cx, cy = run.stimulus.center_deg
    dx = run.x - cx
    dy = run.y - cy
    return np.hypot(dx, dy), np.arctan2(dy, dx)


def _usable(run: GazeRun, mask: ValidityMask, radius: np.ndarray) -> np.ndarray:
    if len(mask.flags) != len(run):
        raise ValueError("mask length does not match run")
    with np.errstate(invalid="ignore"):
        far_enough = radius >= CENTER_EXCLUSION * run.stimulus.radius_deg
    return np.asarray(mask.flags, dtype=bool) & far_enough & np.isfinite(radius)


def decompose_errors(run: GazeRun, mask: ValidityMask) -> ErrorSeries:
    radius, angle = _gaze_polar(run)
    usable = _usable(run, mask, radius)
    if np.count_nonzero(usable) < MIN_USABLE:
        raise DegenerateRun(f"only {np.count_nonzero(usable)} usable samples (< {MIN_USABLE})")
    phase = wrap_angle(angle - target_angle(run.stimulus, run.t))
    radial = radius - run.stimulus.radius_deg
    return ErrorSeries(phase, radial, radius, usable)


def sample_skewness(xs: Sequence[float]) -> float:
    """Moment estimator g1 = m3 / m2**1.5 (no bias correction)."""
    a = np.asarray(xs, dtype=float)
    if a.size < 3:
        raise TooFewSamples("skewness needs at least 3 values")
    d = a - a.mean()
    m2 = np.mean(d * d)
    if m2 <= 0.0:
        raise ZeroVariance()
    return float(np.mean(d ** 3) / m2 ** 1.5)


def excess_kurtosis(xs: Sequence[float]) -> float:
    """Moment estimator g2 = m4 / m2**2 - 3 (no bias correction)."""
    a = np.asarray(xs, dtype=float)
    if a.size < 4:
        raise TooFewSamples("kurtosis needs at least 4 values")
    d = a - a.mean()
    m2 = np.mean(d * d)
    if m2 <= 0.0:
        raise ZeroVariance()
    return float(np.mean(d ** 4) / (m2 * m2) - 3.0)


def gain_samples(run: GazeRun, mask: ValidityMask) -> np.ndarray:
    """Per-sample angular velocity gain on contiguous usable spans.

    Central differences of the unwrapped gaze angle, divided by the signed
    target angular velocity.  Saccade-like samples are not removed here.
    """
    radius, angle = _gaze_polar(run)
    usable = _usable(run, mask, radius)
    omega = run.stimulus.angular_velocity
    out = []
    for s, e in invalid_segments(~usable):  # spans where usable is True
        if e - s < 3:
            continue
        phi = np.unwrap(angle[s:e])
        t = run.t[s:e]
        vel = (phi[2:] - phi[:-2]) / (t[2:] - t[:-2])
        out.append(vel / omega)
    return np.concatenate(out) if out else np.empty(0)


def v_gain(run: GazeRun, mask: ValidityMask) -> float:
    g = gain_samples(run, mask)
    g = g[np.abs(g) <= SACCADE_GAIN_LIMIT]
    if g.size == 0:
        raise DegenerateRun("no pursuit samples survive the saccade threshold", "v_gain")
    return float(np.median(g))


def metric_vector(run: GazeRun, pad_samples: int = DEFAULT_PAD) -> MetricVector:
    """Mask, decompose and summarize one run.

    Raises DegenerateRun or ZeroVariance tagged with the failing metric.
    """
    mask = mask_blinks(run, pad_samples)
    try:
        series = decompose_errors(run, mask)
    except DegenerateRun as exc:
        raise DegenerateRun(str(exc), "decompose_errors") from None
    radial = series.radial_usable()
    phase = series.phase_usable()

    floor = NUMERIC_FLOOR * run.stimulus.radius_deg

    def moment(fn, xs, name):
        try:
            if np.ptp(xs) <= floor:
                raise ZeroVariance()
            return fn(xs)
        except ZeroVariance:
            raise ZeroVariance("error distribution has zero spread", name) from None

    return MetricVector(
        mean_radius_deg=float(np.mean(series.gaze_radius_deg[series.usable])),
        v_gain=v_gain(run, mask),
        skew_radial=moment(sample_skewness, radial, "skew_radial"),
        skew_phase=moment(sample_skewness, phase, "skew_phase"),
        kurt_phase=moment(excess_kurtosis, phase, "kurt_phase"),
        blink_loss_pct=blink_loss_percent(mask),
    )


def error_histogram(series, usable, n_bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Equal-width histogram over [min, max] of the usable values.

    A zero-width range is widened to [v - 0.5, v + 0.5].
    """
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    vals = np.asarray(series, dtype=float)[np.asarray(usable, dtype=bool)]
    if vals.size == 0:
        raise NoUsableSamples("no usable samples to histogram")
    lo, hi = float(vals.min()), float(vals.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(vals, bins=n_bins, range=(lo, hi))
    return edges, counts


# --------------------------------------------------------------------------
# features CSV

@dataclass(frozen=True)
class FeatureRow:
    subject_id: str
    session: str
    run_index: int
    metrics: MetricVector | None
    error: str | None = None


def extract_row(run: GazeRun, pad_samples: int = DEFAULT_PAD) -> FeatureRow:
    try:
        mv = metric_vector(run, pad_samples)
    except (DegenerateRun, ZeroVariance, TooFewSamples) as exc:
        return FeatureRow(run.subject_id, run.session, run.run_index, None, f"{type(exc).__name__}: {exc}")
    return FeatureRow(run.subject_id, run.session, run.run_index, mv)


def features_csv_text(rows: Sequence[FeatureRow]) -> str:
    """Features CSV; an ``error`` column is appended only if some run failed."""
    with_error = any(r.error for r in rows)
    header = FEATURES_HEADER + (("error",) if with_error else ())
    lines = [",".join(header)]
    for r in rows:
        if r.metrics is None:
            cells = [""] * len(METRIC_NAMES)
        else:
            cells = [f"{v:.10g}" for v in r.metrics.as_tuple()]
        line = [r.subject_id, r.session, str(r.run_index)] + cells
        if with_error:
            line.append((r.error or "").replace(",", ";"))
        lines.append(",".join(line))
    return "\n".join(lines) + "\n"


def read_features_csv(path) -> list[FeatureRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header[:len(FEATURES_HEADER)] != FEATURES_HEADER or len(header) > len(FEATURES_HEADER) + 1:
            raise ValueError(f"{path}: unexpected features header {','.join(header)}")
        rows = []
        for lineno, cells in enumerate(reader, start=2):
            if len(cells) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields")
            error = cells[len(FEATURES_HEADER)] if len(header) > len(FEATURES_HEADER) else ""
            vals = cells[3:3 + len(METRIC_NAMES)]
            try:
                mv = None if error or any(v == "" for v in vals) else MetricVector(*map(float, vals))
                rows.append(FeatureRow(cells[0], cells[1], int(cells[2]), mv, error or None))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric metric") from None
    return rows


def usable_triples(rows: Sequence[FeatureRow]) -> list[tuple[str, str, MetricVector]]:
    """(subject_id, session, MetricVector) for every run that produced metrics."""
    return [(r.subject_id, r.session, r.metrics) for r in rows if r.metrics is not None]
