"""Gaze traces for the circular pursuit task, and their on-disk layout.

Coordinates are visual degrees, y-up, origin at display center.  A run
directory looks like::

    <root>/<subject_id>/<session>/run<k>.csv   t_s,gaze_x_deg,gaze_y_deg,valid
    <root>/<subject_id>/<session>/run<k>.json  sidecar metadata
    <root>/manifest.json                       cohort manifest
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import (
    EmptyRun,
    InvalidRun,
    IrregularSampling,
    NonMonotoneTime,
    TraceFormatError,
)

SESSIONS = ("baseline", "impaired")
DIRECTIONS = ("clockwise", "counterclockwise")
TRACE_HEADER = ("t_s", "gaze_x_deg", "gaze_y_deg", "valid")
SAMPLING_TOLERANCE = 0.10


@dataclass(frozen=True)
class StimulusSpec:
    frequency_hz: float = 0.4
    radius_deg: float = 10.0
    center_deg: tuple[float, float] = (0.0, 0.0)
    direction: str = "clockwise"
    duration_s: float = 30.0
    sample_rate_hz: float = 60.0
    # Only used to test rotation invariance; every real stimulus starts at 3 o'clock.
    start_phase_rad: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "center_deg", (float(self.center_deg[0]), float(self.center_deg[1])))
        if self.frequency_hz <= 0:
            raise ValueError("frequency_hz must be > 0")
        if self.radius_deg <= 0:
            raise ValueError("radius_deg must be > 0")
        if self.duration_s <= 0:
            raise ValueError("duration_s must be > 0")
        if self.sample_rate_hz < 20 * self.frequency_hz:
            raise ValueError("sample_rate_hz must be at least 20 x frequency_hz")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")

    @property
    def sign(self) -> int:
        """-1 for clockwise (angle decreases with time), +1 otherwise."""
        return -1 if self.direction == "clockwise" else 1

    @property
    def angular_velocity(self) -> float:
        """Signed target angular velocity in rad/s."""
        return self.sign * 2.0 * math.pi * self.frequency_hz

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate_hz))

    def to_dict(self) -> dict:
        d = {
            "frequency_hz": self.frequency_hz,
            "radius_deg": self.radius_deg,
            "center_deg": list(self.center_deg),
            "direction": self.direction,
            "duration_s": self.duration_s,
            "sample_rate_hz": self.sample_rate_hz,
        }
        if self.start_phase_rad:
            d["start_phase_rad"] = self.start_phase_rad
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StimulusSpec":
        return cls(
            frequency_hz=float(d["frequency_hz"]),
            radius_deg=float(d["radius_deg"]),
            center_deg=tuple(d["center_deg"]),
            direction=str(d["direction"]),
            duration_s=float(d["duration_s"]),
            sample_rate_hz=float(d["sample_rate_hz"]),
            start_phase_rad=float(d.get("start_phase_rad", 0.0)),
        )


class GazeSample(NamedTuple):
    t_s: float
    x_deg: float
    y_deg: float
    valid: bool


@dataclass(frozen=True, eq=False)
class GazeRun:
    """One trace: column arrays rather than a list of sample objects.

    Positions at invalid samples carry no meaning (they may be NaN).
    """

    subject_id: str
    session: str
    run_index: int
    stimulus: StimulusSpec
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    valid: np.ndarray

    def __post_init__(self) -> None:
        if self.session not in SESSIONS:
            raise ValueError(f"session must be one of {SESSIONS}, got {self.session!r}")
        if self.run_index not in (0, 1, 2):
            raise ValueError("run_index must be 0, 1 or 2")
        t = np.asarray(self.t, dtype=float)
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        valid = np.asarray(self.valid, dtype=bool)
        if not (len(t) == len(x) == len(y) == len(valid)):
            raise ValueError("column lengths differ")
        for name, arr in (("t", t), ("x", x), ("y", y), ("valid", valid)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def samples(self) -> list[GazeSample]:
        return [GazeSample(float(a), float(b), float(c), bool(d))
                for a, b, c, d in zip(self.t, self.x, self.y, self.valid)]

    @classmethod
    def from_samples(cls, subject_id: str, session: str, run_index: int,
                     stimulus: StimulusSpec, samples: Sequence[GazeSample]) -> "GazeRun":
        cols = list(zip(*samples)) if samples else [(), (), (), ()]
        return cls(subject_id, session, run_index, stimulus, *[np.array(c) for c in cols])

    def replace(self, **changes) -> "GazeRun":
        fields = dict(subject_id=self.subject_id, session=self.session, run_index=self.run_index,
                      stimulus=self.stimulus, t=self.t, x=self.x, y=self.y, valid=self.valid)
        fields.update(changes)
        return GazeRun(**fields)


@dataclass(frozen=True)
class SubjectRecord:
    subject_id: str
    sex: str | None = None
    vision_correction: str | None = None
    adhd: bool | None = None
    use_cadence: str | None = None
    last_use_days: int | None = None
    notes: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SubjectRecord":
        return cls(**{k: d.get(k) for k in cls.__dataclass_fields__})


def target_angle(spec: StimulusSpec, t):
    """Target polar angle in radians (unwrapped) at time(s) t."""
    return spec.start_phase_rad + spec.angular_velocity * np.asarray(t, dtype=float)


def target_position(spec: StimulusSpec, t: float) -> tuple[float, float]:
    if t < 0:
        raise ValueError("t must be >= 0")
    theta = spec.start_phase_rad + spec.angular_velocity * t
    cx, cy = spec.center_deg
    return (cx + spec.radius_deg * math.cos(theta), cy + spec.radius_deg * math.sin(theta))


def validate_run(run: GazeRun) -> GazeRun:
    """Return ``run`` unchanged, or raise InvalidRun listing every violation."""
    if len(run) == 0:
        raise InvalidRun([EmptyRun()])
    violations = []
    dt = np.diff(run.t)
    nominal = 1.0 / run.stimulus.sample_rate_hz
    for i in np.flatnonzero(dt <= 0):
        violations.append(NonMonotoneTime(int(i) + 1))
    off = np.abs(dt - nominal) > SAMPLING_TOLERANCE * nominal
    for i in np.flatnonzero(off & (dt > 0)):
        violations.append(IrregularSampling(int(i) + 1, float(dt[i])))
    if violations:
        violations.sort(key=lambda v: v.index)
        raise InvalidRun(violations)
    return run


# --------------------------------------------------------------------------
# file formats

def atomic_write_text(path: Path, text: str) -> None:
    """Write via temp file + rename so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v: float) -> str:
    return "nan" if math.isnan(v) else f"{v:.6f}"


def trace_csv_text(run: GazeRun) -> str:
    buf = io.StringIO()
    buf.write(",".join(TRACE_HEADER) + "\n")
    for t, x, y, ok in zip(run.t, run.x, run.y, run.valid):
        buf.write(f"{t:.6f},{_fmt(x)},{_fmt(y)},{int(ok)}\n")
    return buf.getvalue()


def sidecar_dict(run: GazeRun) -> dict:
    return {
        "subject_id": run.subject_id,
        "session": run.session,
        "run_index": run.run_index,
        "stimulus": run.stimulus.to_dict(),
    }


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def run_paths(root: Path, subject_id: str, session: str, run_index: int) -> tuple[Path, Path]:
    base = Path(root) / subject_id / session
    return base / f"run{run_index}.csv", base / f"run{run_index}.json"


def write_run(root: Path, run: GazeRun) -> Path:
    csv_path, meta_path = run_paths(root, run.subject_id, run.session, run.run_index)
    atomic_write_text(csv_path, trace_csv_text(run))
    atomic_write_text(meta_path, dump_json(sidecar_dict(run)))
    return csv_path


def read_run(csv_path: Path) -> GazeRun:
    """Load one run from its CSV and sidecar JSON; raises TraceFormatError."""
    csv_path = Path(csv_path)
    meta_path = csv_path.with_suffix(".json")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        stimulus = StimulusSpec.from_dict(meta["stimulus"])
        subject_id, session, run_index = str(meta["subject_id"]), meta["session"], int(meta["run_index"])
    except FileNotFoundError:
        raise TraceFormatError(meta_path, None, "missing sidecar JSON") from None
    except (KeyError, TypeError, ValueError) as exc:
        raise TraceFormatError(meta_path, None, f"bad sidecar: {exc}") from None

    ts, xs, ys, vs = [], [], [], []
    try:
        with open(csv_path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != TRACE_HEADER:
                raise TraceFormatError(csv_path, 1, f"header must be {','.join(TRACE_HEADER)}")
            for lineno, row in enumerate(reader, start=2):
                if len(row) != 4:
                    raise TraceFormatError(csv_path, lineno, f"expected 4 fields, got {len(row)}")
                try:
                    t, x, y = float(row[0]), float(row[1]), float(row[2])
                except ValueError:
                    raise TraceFormatError(csv_path, lineno, "non-numeric field") from None
                if row[3] not in ("0", "1"):
                    raise TraceFormatError(csv_path, lineno, "valid must be 0 or 1")
                ts.append(t)
                xs.append(x)
                ys.append(y)
                vs.append(row[3] == "1")
    except UnicodeDecodeError:
        raise TraceFormatError(csv_path, None, "not UTF-8") from None
    try:
        return GazeRun(subject_id, session, run_index, stimulus,
                       np.array(ts), np.array(xs), np.array(ys), np.array(vs, dtype=bool))
    except ValueError as exc:
        raise TraceFormatError(meta_path, None, str(exc)) from None


def find_runs(root: Path) -> list[Path]:
    """All run CSVs under ``root`` in a stable order."""
    root = Path(root)
    return sorted(root.glob("*/*/run*.csv"), key=lambda p: (p.parts[-3], p.parts[-2], p.name))


def iter_runs(root: Path) -> Iterator[GazeRun]:
    for p in find_runs(root):
        yield read_run(p)


@dataclass
class Manifest:
    subjects: list[SubjectRecord]
    seed: int
    generator_params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "subjects": [s.to_dict() for s in self.subjects],
            "seed": int(self.seed),
            "generator_params": self.generator_params,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Manifest":
        return cls([SubjectRecord.from_dict(s) for s in d["subjects"]], int(d["seed"]),
                   dict(d.get("generator_params", {})))


def write_manifest(root: Path, manifest: Manifest) -> Path:
    path = Path(root) / "manifest.json"
    atomic_write_text(path, dump_json(manifest.to_dict()))
    return path


def read_manifest(root: Path) -> Manifest:
    return Manifest.from_dict(json.loads((Path(root) / "manifest.json").read_text(encoding="utf-8")))
