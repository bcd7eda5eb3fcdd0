import math

import numpy as np
import pytest

from pursuitlab.features import metric_vector
from pursuitlab.synth import CohortSpec, OculomotorParams, simulate_cohort
from pursuitlab.trace import GazeRun, StimulusSpec, target_angle

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def stimulus():
    return StimulusSpec()


@pytest.fixture(scope="session")
def default_cohort(stimulus):
    return simulate_cohort(CohortSpec(seed=42), stimulus)


@pytest.fixture(scope="session")
def default_features(default_cohort):
    return [(r.subject_id, r.session, metric_vector(r)) for r in default_cohort.runs]


def make_run(spec: StimulusSpec, gaze_angle, gaze_radius, valid=None, session="baseline",
             subject_id="01", run_index=0) -> GazeRun:
    """Construct a run from polar gaze arrays (or callables of t)."""
    n = spec.n_samples
    t = np.arange(n) / spec.sample_rate_hz
    ang = gaze_angle(t) if callable(gaze_angle) else np.broadcast_to(gaze_angle, (n,)).astype(float)
    rad = gaze_radius(t) if callable(gaze_radius) else np.broadcast_to(gaze_radius, (n,)).astype(float)
    cx, cy = spec.center_deg
    x = cx + rad * np.cos(ang)
    y = cy + rad * np.sin(ang)
    v = np.ones(n, bool) if valid is None else np.asarray(valid, bool)
    return GazeRun(subject_id, session, run_index, spec, t, x, y, v)


def perfect_run(spec: StimulusSpec, **kw) -> GazeRun:
    return make_run(spec, lambda t: target_angle(spec, t), spec.radius_deg, **kw)


NOISELESS = OculomotorParams(pursuit_gain=1.0, phase_lag_s=0.0)
