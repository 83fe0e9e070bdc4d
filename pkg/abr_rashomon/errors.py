"""Exceptions raised by abr_rashomon.

The CLI maps `ValidationFailure` subclasses to exit code 1, `ExternalServiceError` subclasses to exit code 3 and
everything else derived from `AbrRashomonError` to exit code 2.
"""

from __future__ import annotations

from pathlib import Path


class AbrRashomonError(Exception):
    """Base class for every error raised deliberately by this package."""


class ValidationFailure(AbrRashomonError):
    """Input data or configuration failed validation."""


class ExternalServiceError(AbrRashomonError):
    """A remote service (LLM provider) could not be reached or misbehaved."""


class UnsupportedConfigFormat(ValidationFailure):
    """The config file format is not supported."""

    def __init__(self, file_path: str | Path, file_format: str) -> None:
        """Initialise the exception."""
        super().__init__(f"Unsupported config file format: {file_format} ({file_path})")


class TraceFormatError(ValidationFailure):
    """A trace file could not be parsed."""

    def __init__(self, message: str, line_number: int | None = None) -> None:
        """Initialise the exception, prefixing the line number when known."""
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class UnknownProfileError(ValidationFailure):
    """`synth_trace` was asked for a profile it does not know."""


class PolicyError(AbrRashomonError):
    """A policy returned an invalid decision or could not be constructed."""


class QoeError(AbrRashomonError):
    """A QoE computation received values outside its domain."""


class BinarizationError(ValidationFailure):
    """A dataset could not be binarized."""


class DistillError(AbrRashomonError):
    """The teacher-student loop failed; the message carries the iteration."""


class MalformedTreeError(ValidationFailure):
    """A decision tree (in memory or on disk) is structurally invalid."""


class SolverInputError(ValidationFailure):
    """The sparse tree solver received invalid inputs."""


class RashomonSetTooLarge(AbrRashomonError):
    """Rashomon enumeration exceeded its configured size cap."""

    def __init__(self, cap: int) -> None:
        """Initialise the exception."""
        self.cap = cap
        super().__init__(f"Rashomon set exceeds the configured cap of {cap} trees; raise the cap or lower epsilon")


class JudgeError(AbrRashomonError):
    """Base class for judge failures."""


class BinarizerMismatchError(JudgeError):
    """Two trees compared by the heuristic judge do not share a binarizer."""


class JudgeParseError(JudgeError):
    """A judge reply did not start with TREEONE or TREETWO."""

    def __init__(self, raw_reply: str) -> None:
        """Initialise the exception, keeping the raw reply for auditing."""
        self.raw_reply = raw_reply
        super().__init__(f"Could not parse judge reply: {raw_reply[:200]!r}")


class JudgeTransportError(ExternalServiceError):
    """An LLM request failed after all retries."""


class MissingCredentialsError(ExternalServiceError):
    """The environment variable holding a provider API key is not set."""


class TournamentAborted(JudgeError):
    """A tournament round failed; `log` holds every completed record so the run can resume."""

    def __init__(self, message: str, log: object) -> None:
        """Initialise the exception."""
        self.log = log
        super().__init__(message)


class TreeValidationError(ValidationFailure):
    """A tree returned by an LLM adjustment failed validation."""

    def __init__(self, problems: list[str]) -> None:
        """Initialise the exception with every problem found."""
        self.problems = problems
        super().__init__("; ".join(problems))


class PipelineError(AbrRashomonError):
    """A pipeline stage failed; completed stages stay recorded in the manifest."""
