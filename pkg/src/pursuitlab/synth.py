"""Synthetic sober/impaired gaze cohorts for the circular pursuit task.

The oculomotor model is a pursuit loop with reduced velocity gain and a
fixed lag, plus a fluctuating first-order low-pass stage ("lapses"):

* gaze angle follows the target delayed by ``phase_lag_s`` and scaled so the
  angular velocity is ``pursuit_gain`` times the target's; the position
  deficit this accumulates is repaid by catch-up saccades whenever it reaches
  ``catchup_threshold_rad``;
* a lapse process sets the instantaneous low-pass product w*tau to
  ``lapse_lag_rad * z(t)**2`` (z is a unit AR(1) process), which adds a phase
  lag atan(w*tau) and shrinks the radius by cos(atan(w*tau));
* the radius carries exponentially correlated wobble, each axis white jitter;
* blinks arrive as a Poisson process and invalidate the samples they cover.

Impairment is a shift of these parameters.
"""

from __future__ import annotations

import logging
import math
import zlib
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import kernels
from .trace import (
    SESSIONS,
    GazeRun,
    Manifest,
    StimulusSpec,
    SubjectRecord,
    write_manifest,
    write_run,
)

log = logging.getLogger(__name__)

GAIN_MAX = 1.5


@dataclass(frozen=True)
class OculomotorParams:
    pursuit_gain: float = 1.0
    phase_lag_s: float = 0.0
    radial_noise_sd_deg: float = 0.0
    radial_noise_corr_time_s: float = 0.0
    jitter_sd_deg: float = 0.0
    blink_rate_hz: float = 0.0
    blink_duration_mean_s: float = 0.0
    blink_duration_sd_s: float = 0.0
    catchup_threshold_rad: float = 0.15
    lapse_lag_rad: float = 0.0

    def __post_init__(self) -> None:
        problems = self.violations()
        if problems:
            raise ValueError("invalid OculomotorParams: " + ", ".join(problems))

    def violations(self) -> list[str]:
        out = []
        if not 0.0 <= self.pursuit_gain <= GAIN_MAX:
            out.append(f"pursuit_gain={self.pursuit_gain} outside [0, {GAIN_MAX}]")
        for f in fields(self):
            if f.name != "pursuit_gain" and getattr(self, f.name) < 0:
                out.append(f"{f.name}={getattr(self, f.name)} < 0")
        return out

    def to_dict(self) -> dict:
        return asdict(self)


def _as_delta(**kw) -> dict:
    return {f.name: float(kw.get(f.name, 0.0)) for f in fields(OculomotorParams)}


# Defaults calibrated so the cohort reproduces the expected direction of every
# metric under diff = impaired - baseline (see tests/test_synth.py).
SOBER_POPULATION = OculomotorParams(
    pursuit_gain=0.97,
    phase_lag_s=0.05,
    radial_noise_sd_deg=0.35,
    radial_noise_corr_time_s=0.25,
    jitter_sd_deg=0.12,
    blink_rate_hz=0.25,
    blink_duration_mean_s=0.25,
    blink_duration_sd_s=0.08,
    catchup_threshold_rad=0.15,
    lapse_lag_rad=0.04,
)
IMPAIRED_SHIFT = _as_delta(
    pursuit_gain=-0.0015,
    phase_lag_s=0.02,
    radial_noise_sd_deg=0.02,
    blink_rate_hz=-0.07,
    lapse_lag_rad=0.022,
)
BETWEEN_SUBJECT_SD = _as_delta(
    pursuit_gain=0.02,
    phase_lag_s=0.015,
    radial_noise_sd_deg=0.15,
    radial_noise_corr_time_s=0.05,
    jitter_sd_deg=0.06,
    blink_rate_hz=0.12,
    blink_duration_mean_s=0.05,
    lapse_lag_rad=0.03,
)


@dataclass(frozen=True)
class CohortSpec:
    seed: int = 42
    n_subjects: int = 19
    runs_per_session: int = 3
    sober_population: OculomotorParams = SOBER_POPULATION
    impaired_shift: dict = field(default_factory=lambda: dict(IMPAIRED_SHIFT))
    between_subject_sd: dict = field(default_factory=lambda: dict(BETWEEN_SUBJECT_SD))

    def __post_init__(self) -> None:
        if self.n_subjects < 1:
            raise ValueError("n_subjects must be >= 1")
        if not 1 <= self.runs_per_session <= 3:
            raise ValueError("runs_per_session must be 1, 2 or 3")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")
        names = {f.name for f in fields(OculomotorParams)}
        for label, d in (("impaired_shift", self.impaired_shift), ("between_subject_sd", self.between_subject_sd)):
            unknown = set(d) - names
            if unknown:
                raise ValueError(f"{label} has unknown parameters: {sorted(unknown)}")
        object.__setattr__(self, "impaired_shift", _as_delta(**self.impaired_shift))
        object.__setattr__(self, "between_subject_sd", _as_delta(**self.between_subject_sd))

    def generator_params(self, stimulus: StimulusSpec) -> dict:
        return {
            "n_subjects": self.n_subjects,
            "runs_per_session": self.runs_per_session,
            "sober_population": self.sober_population.to_dict(),
            "impaired_shift": self.impaired_shift,
            "between_subject_sd": self.between_subject_sd,
            "stimulus": stimulus.to_dict(),
        }


@dataclass
class Cohort:
    runs: list[GazeRun]
    subjects: list[SubjectRecord]
    subject_params: dict[str, dict[str, OculomotorParams]]


# --------------------------------------------------------------------------
# single run

def _unit_ar1(rng: np.random.Generator, n: int, dt: float, corr_time: float) -> np.ndarray:
    """Stationary AR(1) with unit variance and correlation time ``corr_time``."""
    e = rng.standard_normal(n)
    if corr_time <= 0.0:
        return e
    rho = math.exp(-dt / corr_time)
    innov = e * math.sqrt(1.0 - rho * rho)
    return kernels.ar1_filter(innov, rho, float(e[0]))


def _catchup(deficit: np.ndarray, threshold: float) -> np.ndarray:
    if threshold <= 0.0:
        return deficit
    return np.mod(deficit, threshold)


def _blink_flags(rng: np.random.Generator, t: np.ndarray, duration: float, dt: float,
                 rate: float, mean_s: float, sd_s: float) -> np.ndarray:
    valid = np.ones(len(t), dtype=bool)
    n_blinks = rng.poisson(rate * duration) if rate > 0 else 0
    if n_blinks == 0:
        return valid
    onsets = rng.uniform(0.0, duration, n_blinks)
    lengths = np.maximum(rng.normal(mean_s, sd_s, n_blinks), dt)
    for on, ln in zip(onsets, lengths):
        valid[(t >= on) & (t < on + ln)] = False
    return valid


def simulate_run(params: OculomotorParams, spec: StimulusSpec, seed,
                 subject_id: str = "00", session: str = "baseline", run_index: int = 0) -> GazeRun:
    """Generate one trace.  ``seed`` may be an int or a numpy SeedSequence."""
    rng = np.random.default_rng(seed)
    n = spec.n_samples
    dt = 1.0 / spec.sample_rate_hz
    t = np.arange(n) * dt
    omega = 2.0 * math.pi * spec.frequency_hz
    s = spec.sign
    g = params.pursuit_gain

    wobble = params.radial_noise_sd_deg * _unit_ar1(rng, n, dt, params.radial_noise_corr_time_s)
    z = _unit_ar1(rng, n, dt, params.radial_noise_corr_time_s)
    jx = params.jitter_sd_deg * rng.standard_normal(n)
    jy = params.jitter_sd_deg * rng.standard_normal(n)
    valid = _blink_flags(rng, t, spec.duration_s, dt, params.blink_rate_hz,
                         params.blink_duration_mean_s, params.blink_duration_sd_s)

    wtau = params.lapse_lag_rad * z * z
    lapse_lag = np.arctan(wtau)
    attenuation = 1.0 / np.sqrt(1.0 + wtau * wtau)

    # lag behind the target, measured along the direction of motion
    behind = omega * g * params.phase_lag_s + _catchup(omega * (1.0 - g) * t, params.catchup_threshold_rad) + lapse_lag
    theta = spec.start_phase_rad + s * omega * t
    phi = theta - s * behind
    r = (spec.radius_deg + wobble) * attenuation
    cx, cy = spec.center_deg
    x = cx + r * np.cos(phi) + jx
    y = cy + r * np.sin(phi) + jy
    x[~valid] = np.nan
    y[~valid] = np.nan
    return GazeRun(subject_id, session, run_index, spec, t, x, y, valid)


# --------------------------------------------------------------------------
# cohort

def subject_ids(n: int) -> list[str]:
    width = max(2, len(str(n)))
    return [str(i + 1).zfill(width) for i in range(n)]


def _key(subject_id: str) -> int:
    return zlib.crc32(subject_id.encode("utf-8"))


def run_seed(seed: int, subject_id: str, session: str, run_index: int) -> np.random.SeedSequence:
    """Child seed owned by one run; independent of generation order."""
    return np.random.SeedSequence(seed, spawn_key=(_key(subject_id), SESSIONS.index(session), run_index))


def clamp_params(values: dict, context: str) -> OculomotorParams:
    out = dict(values)
    for name, v in values.items():
        lo, hi = (0.0, GAIN_MAX) if name == "pursuit_gain" else (0.0, math.inf)
        c = min(max(v, lo), hi)
        if c != v:
            log.info("clamped %s.%s from %.6g to %.6g", context, name, v, c)
            out[name] = c
    return OculomotorParams(**out)


def draw_subject_params(cohort: CohortSpec, subject_id: str) -> dict[str, OculomotorParams]:
    rng = np.random.default_rng(np.random.SeedSequence(cohort.seed, spawn_key=(_key(subject_id), 1000)))
    mean = cohort.sober_population.to_dict()
    names = list(mean)
    dev = rng.standard_normal(len(names))
    sober = {k: mean[k] + cohort.between_subject_sd[k] * d for k, d in zip(names, dev)}
    sober_p = clamp_params(sober, f"{subject_id}.baseline")
    impaired = {k: getattr(sober_p, k) + cohort.impaired_shift[k] for k in names}
    return {"baseline": sober_p, "impaired": clamp_params(impaired, f"{subject_id}.impaired")}


def simulate_cohort(cohort: CohortSpec, spec: StimulusSpec) -> Cohort:
    runs, subjects, params = [], [], {}
    for sid in subject_ids(cohort.n_subjects):
        subjects.append(SubjectRecord(sid, notes="synthetic"))
        params[sid] = draw_subject_params(cohort, sid)
        for session in SESSIONS:
            for k in range(cohort.runs_per_session):
                runs.append(simulate_run(params[sid][session], spec, run_seed(cohort.seed, sid, session, k),
                                         subject_id=sid, session=session, run_index=k))
    return Cohort(runs, subjects, params)


def write_cohort(out: Path, cohort_spec: CohortSpec, spec: StimulusSpec) -> Cohort:
    cohort = simulate_cohort(cohort_spec, spec)
    for run in cohort.runs:
        write_run(out, run)
    write_manifest(out, Manifest(cohort.subjects, cohort_spec.seed, cohort_spec.generator_params(spec)))
    return cohort


def with_overrides(cohort: CohortSpec, overrides: dict[str, float]) -> CohortSpec:
    """Apply ``{"sober.pursuit_gain": 0.9, "shift.blink_rate_hz": 0}``-style keys."""
    sober = cohort.sober_population.to_dict()
    shift = dict(cohort.impaired_shift)
    spread = dict(cohort.between_subject_sd)
    targets = {"sober": sober, "shift": shift, "sd": spread}
    for key, value in overrides.items():
        group, _, name = key.partition(".")
        if group not in targets or name not in sober:
            raise KeyError(key)
        targets[group][name] = float(value)
    return replace(cohort, sober_population=OculomotorParams(**sober),
                   impaired_shift=shift, between_subject_sd=spread)
