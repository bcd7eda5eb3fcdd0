"""Blink segmentation and data-loss accounting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyMask, EmptyRun
from .trace import GazeRun

DEFAULT_PAD = 2


@dataclass(frozen=True, eq=False)
class ValidityMask:
    flags: np.ndarray
    blink_segments: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.flags)


def invalid_segments(valid: np.ndarray) -> list[tuple[int, int]]:
    """Half-open (start, end) ranges of consecutive False entries."""
    bad = ~np.asarray(valid, dtype=bool)
    if not bad.any():
        return []
    edges = np.diff(np.concatenate(([0], bad.astype(np.int8), [0])))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    return [(int(s), int(e)) for s, e in zip(starts, ends)]


def mask_blinks(run: GazeRun, pad_samples: int = DEFAULT_PAD) -> ValidityMask:
    """Pad every invalid stretch by ``pad_samples`` on each side.

    Padded segments that touch or overlap are merged.
    """
    if pad_samples < 0:
        raise ValueError("pad_samples must be >= 0")
    n = len(run)
    if n == 0:
        raise EmptyRun()
    merged: list[list[int]] = []
    for s, e in invalid_segments(run.valid):
        s, e = max(0, s - pad_samples), min(n, e + pad_samples)
        if merged and s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    flags = np.array(run.valid, dtype=bool)
    for s, e in merged:
        flags[s:e] = False
    flags.setflags(write=False)
    return ValidityMask(flags, tuple((s, e) for s, e in merged))


def blink_loss_percent(mask: ValidityMask) -> float:
    n = len(mask.flags)
    if n == 0:
        raise EmptyMask("mask has no samples")
    return 100.0 * float(np.count_nonzero(~mask.flags)) / n
