import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pursuitlab.errors import EmptyRun, InvalidRun, IrregularSampling, NonMonotoneTime, TraceFormatError
from pursuitlab.trace import (
    TRACE_HEADER,
    GazeRun,
    GazeSample,
    Manifest,
    StimulusSpec,
    SubjectRecord,
    find_runs,
    read_manifest,
    read_run,
    target_position,
    validate_run,
    write_manifest,
    write_run,
)

from conftest import perfect_run


def test_target_start_position():
    assert target_position(StimulusSpec(), 0.0) == pytest.approx((10.0, 0.0), abs=1e-12)


def test_target_quarter_period_clockwise():
    assert target_position(StimulusSpec(), 0.625) == pytest.approx((0.0, -10.0), abs=1e-12)


def test_target_full_period():
    assert target_position(StimulusSpec(), 2.5) == pytest.approx((10.0, 0.0), abs=1e-12)


def test_reversing_direction_negates_quarter_y():
    cw = target_position(StimulusSpec(), 0.625)
    ccw = target_position(StimulusSpec(direction="counterclockwise"), 0.625)
    assert ccw[1] == pytest.approx(-cw[1], abs=1e-12)
    assert ccw[0] == pytest.approx(cw[0], abs=1e-12)


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        target_position(StimulusSpec(), -0.1)


@pytest.mark.parametrize("kwargs", [
    {"frequency_hz": 0.0}, {"radius_deg": -1.0}, {"duration_s": 0.0},
    {"sample_rate_hz": 7.9}, {"direction": "sideways"},
])
def test_stimulus_invariants(kwargs):
    with pytest.raises(ValueError):
        StimulusSpec(**kwargs)


stimuli = st.builds(
    StimulusSpec,
    frequency_hz=st.floats(0.05, 2.0),
    radius_deg=st.floats(0.5, 30.0),
    center_deg=st.tuples(st.floats(-20, 20), st.floats(-20, 20)),
    direction=st.sampled_from(["clockwise", "counterclockwise"]),
)


@given(stimuli, st.floats(0.0, 100.0), st.integers(0, 20))
def test_target_periodic(spec, t, k):
    a = target_position(spec, t)
    b = target_position(spec, t + k / spec.frequency_hz)
    assert a == pytest.approx(b, abs=1e-9 * max(1.0, k * spec.radius_deg))


@given(stimuli, st.floats(0.0, 100.0))
def test_target_on_circle(spec, t):
    x, y = target_position(spec, t)
    assert math.hypot(x - spec.center_deg[0], y - spec.center_deg[1]) == pytest.approx(spec.radius_deg, abs=1e-9)


def test_validate_well_formed_run_unchanged():
    spec = StimulusSpec(duration_s=20.0)
    run = perfect_run(spec)
    assert len(run) == 1200
    assert validate_run(run) is run


def test_validate_repeated_timestamp():
    run = perfect_run(StimulusSpec(duration_s=2.0))
    t = run.t.copy()
    t[5] = t[4]
    with pytest.raises(InvalidRun) as exc:
        validate_run(run.replace(t=t))
    kinds = [(type(v), v.index) for v in exc.value.violations]
    assert (NonMonotoneTime, 5) in kinds


def test_validate_empty_run():
    spec = StimulusSpec()
    run = GazeRun("01", "baseline", 0, spec, [], [], [], [])
    with pytest.raises(InvalidRun) as exc:
        validate_run(run)
    assert isinstance(exc.value.violations[0], EmptyRun)


def test_validate_irregular_sampling_reports_all():
    run = perfect_run(StimulusSpec(duration_s=2.0))
    t = run.t.copy()
    t[10:] += 0.005   # one 30% long gap at index 10
    t[50:] += 0.005   # and another at 50
    with pytest.raises(InvalidRun) as exc:
        validate_run(run.replace(t=t))
    v = exc.value.violations
    assert [type(x) for x in v] == [IrregularSampling, IrregularSampling]
    assert [x.index for x in v] == [10, 50]
    assert v[0].observed_dt == pytest.approx(1 / 60 + 0.005)


def test_small_jitter_tolerated():
    run = perfect_run(StimulusSpec(duration_s=2.0))
    t = run.t + np.tile([0.0, 0.0005], len(run) // 2)
    validate_run(run.replace(t=t))


def test_run_index_range():
    with pytest.raises(ValueError):
        GazeRun("01", "baseline", 3, StimulusSpec(), [0.0], [0.0], [0.0], [True])


def test_from_samples_roundtrip():
    samples = [GazeSample(0.0, 1.0, 2.0, True), GazeSample(1 / 60, 1.5, 2.5, False)]
    run = GazeRun.from_samples("01", "impaired", 1, StimulusSpec(), samples)
    assert run.samples == samples


def test_csv_roundtrip(tmp_path):
    spec = StimulusSpec(duration_s=2.0, center_deg=(1.0, -2.0))
    run = perfect_run(spec, session="impaired", run_index=2)
    valid = np.ones(len(run), bool)
    valid[10:20] = False
    x = run.x.copy()
    x[~valid] = np.nan
    run = run.replace(valid=valid, x=x)
    path = write_run(tmp_path, run)
    assert path == tmp_path / "01" / "impaired" / "run2.csv"
    assert path.read_text().splitlines()[0] == ",".join(TRACE_HEADER)
    back = read_run(path)
    assert back.stimulus == spec
    assert (back.subject_id, back.session, back.run_index) == ("01", "impaired", 2)
    np.testing.assert_allclose(back.t, run.t, atol=1e-6)
    np.testing.assert_array_equal(back.valid, valid)
    np.testing.assert_allclose(back.y[valid], run.y[valid], atol=1e-6)
    meta = json.loads(path.with_suffix(".json").read_text())
    assert set(meta) == {"subject_id", "session", "run_index", "stimulus"}
    assert set(meta["stimulus"]) == {"frequency_hz", "radius_deg", "center_deg", "direction",
                                      "duration_s", "sample_rate_hz"}
    assert find_runs(tmp_path) == [path]


@pytest.mark.parametrize("body, line", [
    ("t_s,x,y,valid\n", 1),
    ("t_s,gaze_x_deg,gaze_y_deg,valid\n0.0,1.0,2.0,1\n0.1,abc,2.0,1\n", 3),
    ("t_s,gaze_x_deg,gaze_y_deg,valid\n0.0,1.0,2.0,2\n", 2),
    ("t_s,gaze_x_deg,gaze_y_deg,valid\n0.0,1.0,2.0\n", 2),
])
def test_malformed_csv_names_line(tmp_path, body, line):
    run = perfect_run(StimulusSpec(duration_s=1.0))
    path = write_run(tmp_path, run)
    path.write_text(body)
    with pytest.raises(TraceFormatError) as exc:
        read_run(path)
    assert exc.value.line == line
    assert str(path) in str(exc.value)


def test_missing_sidecar(tmp_path):
    path = write_run(tmp_path, perfect_run(StimulusSpec(duration_s=1.0)))
    path.with_suffix(".json").unlink()
    with pytest.raises(TraceFormatError):
        read_run(path)


def test_manifest_roundtrip(tmp_path):
    m = Manifest([SubjectRecord("01", sex="F", adhd=False, last_use_days=3)], 7, {"n_subjects": 1})
    write_manifest(tmp_path, m)
    back = read_manifest(tmp_path)
    assert back.subjects == m.subjects and back.seed == 7 and back.generator_params == {"n_subjects": 1}
