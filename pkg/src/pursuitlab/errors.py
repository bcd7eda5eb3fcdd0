"""Exception hierarchy shared by all pursuitlab modules."""

from __future__ import annotations


class PursuitError(Exception):
    """Base class; the CLI maps any subclass to exit code 2."""


# trace validation -----------------------------------------------------------

class RunViolation(PursuitError):
    pass


class EmptyRun(RunViolation):
    def __init__(self) -> None:
        super().__init__("run has no samples")


class NonMonotoneTime(RunViolation):
    def __init__(self, index: int) -> None:
        self.index = index
        super().__init__(f"timestamp at sample {index} does not increase")


class IrregularSampling(RunViolation):
    def __init__(self, index: int, observed_dt: float) -> None:
        self.index = index
        self.observed_dt = observed_dt
        super().__init__(f"sample interval {observed_dt:.6g} s at sample {index} is off-rate")


class InvalidRun(PursuitError):
    """Raised by validate_run; carries every violation found."""

    def __init__(self, violations: list[RunViolation]) -> None:
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class TraceFormatError(PursuitError):
    def __init__(self, path, line: int | None, reason: str) -> None:
        self.path = path
        self.line = line
        where = f"{path}" if line is None else f"{path}:{line}"
        super().__init__(f"{where}: {reason}")


# features / preprocessing ---------------------------------------------------

class EmptyMask(PursuitError):
    pass


class DegenerateRun(PursuitError):
    def __init__(self, reason: str, metric: str | None = None) -> None:
        self.metric = metric
        super().__init__(reason if metric is None else f"{metric}: {reason}")


class TooFewSamples(PursuitError):
    pass


class ZeroVariance(PursuitError):
    def __init__(self, reason: str = "zero variance", metric: str | None = None) -> None:
        self.metric = metric
        super().__init__(reason if metric is None else f"{metric}: {reason}")


class NoUsableSamples(PursuitError):
    pass


# stats ----------------------------------------------------------------------

class LengthMismatch(PursuitError):
    pass


class TooFewSubjects(PursuitError):
    pass


class InvalidDf(PursuitError):
    pass


class ZeroEffect(PursuitError):
    pass


class Unattainable(PursuitError):
    pass


class InvalidParams(PursuitError):
    pass


class MissingSession(PursuitError):
    def __init__(self, subject_id: str, session: str) -> None:
        self.subject_id = subject_id
        self.session = session
        super().__init__(f"subject {subject_id} has no usable {session} runs")


# classify -------------------------------------------------------------------

class MissingBaseline(PursuitError):
    def __init__(self, subject_id: str) -> None:
        self.subject_id = subject_id
        super().__init__(f"subject {subject_id} has no baseline observations")


class DegenerateSplit(PursuitError):
    pass


class ZeroVarianceFeature(PursuitError):
    def __init__(self, index: int) -> None:
        self.index = index
        super().__init__(f"feature {index} is constant on the training set")


class SingleClass(PursuitError):
    pass
