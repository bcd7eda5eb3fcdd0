import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pursuitlab.errors import EmptyMask, EmptyRun
from pursuitlab.preprocess import ValidityMask, blink_loss_percent, invalid_segments, mask_blinks
from pursuitlab.trace import GazeRun, StimulusSpec

SPEC = StimulusSpec(duration_s=2.0)


def run_with(valid) -> GazeRun:
    n = len(valid)
    t = np.arange(n) / 60.0
    return GazeRun("01", "baseline", 0, SPEC, t, np.ones(n), np.ones(n), valid)


def test_all_valid_no_segments():
    m = mask_blinks(run_with(np.ones(120, bool)), 2)
    assert m.blink_segments == ()
    assert m.flags.all()


def test_single_segment_padded():
    v = np.ones(120, bool)
    v[10:20] = False
    m = mask_blinks(run_with(v), 2)
    assert m.blink_segments == ((8, 22),)
    expect = np.ones(120, bool)
    expect[8:22] = False
    np.testing.assert_array_equal(m.flags, expect)


def test_close_segments_merge():
    v = np.ones(120, bool)
    v[10:15] = False
    v[16:20] = False
    m = mask_blinks(run_with(v), 1)
    assert m.blink_segments == ((9, 21),)


def test_padding_clamped_to_bounds():
    v = np.ones(50, bool)
    v[0:2] = False
    v[49] = False
    m = mask_blinks(run_with(v), 3)
    assert m.blink_segments == ((0, 5), (46, 50))


def test_negative_pad_rejected():
    with pytest.raises(ValueError):
        mask_blinks(run_with(np.ones(10, bool)), -1)


def test_empty_run():
    with pytest.raises(EmptyRun):
        mask_blinks(run_with(np.ones(0, bool)), 2)


@pytest.mark.parametrize("n_false, expect", [(7, 7.0), (0, 0.0), (100, 100.0)])
def test_blink_loss_examples(n_false, expect):
    flags = np.ones(100, bool)
    flags[:n_false] = False
    assert blink_loss_percent(ValidityMask(flags, ())) == expect


def test_blink_loss_empty():
    with pytest.raises(EmptyMask):
        blink_loss_percent(ValidityMask(np.ones(0, bool), ()))


valid_arrays = st.lists(st.booleans(), min_size=1, max_size=200).map(lambda v: np.array(v, bool))


@given(valid_arrays, st.integers(0, 10))
def test_mask_properties(valid, pad):
    m = mask_blinks(run_with(valid), pad)
    assert len(m) == len(valid)
    assert 0.0 <= blink_loss_percent(m) <= 100.0
    for s, e in m.blink_segments:
        assert not m.flags[s:e].any()
    # padding only ever removes samples
    assert not (m.flags & ~valid).any()


@given(valid_arrays, st.integers(0, 10))
def test_pad_monotone(valid, pad):
    a = blink_loss_percent(mask_blinks(run_with(valid), pad))
    b = blink_loss_percent(mask_blinks(run_with(valid), pad + 1))
    assert b >= a


@given(valid_arrays)
def test_pad_zero_is_identity(valid):
    m = mask_blinks(run_with(valid), 0)
    np.testing.assert_array_equal(m.flags, valid)
    assert list(m.blink_segments) == invalid_segments(valid)
