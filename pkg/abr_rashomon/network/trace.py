"""Network bandwidth traces: parsing, serialization, statistics and synthetic generation."""

from __future__ import annotations

import math
from collections.abc import Iterable
from enum import auto
from pathlib import Path

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator
from strenum import StrEnum

from abr_rashomon.errors import TraceFormatError, UnknownProfileError


class TraceProfile(StrEnum):
    """The synthetic bandwidth regimes `synth_trace` can produce."""

    low = auto()
    """Broadband-like, around 1.3 Mbps."""
    high = auto()
    """5G-like, hundreds of Mbps."""
    markov = auto()
    """A few discrete bandwidth levels with sticky random switching."""


class NetworkTrace(BaseModel):
    """A piecewise-constant bandwidth series.

    The bandwidth at `timestamps[i]` holds until `timestamps[i + 1]`. The final sample holds for the same length as
    the interval before it, which fixes the trace period used when a session wraps around.
    """

    model_config = ConfigDict(frozen=True)

    trace_id: str
    """A human-readable label, usually the file stem."""
    timestamps: tuple[float, ...] = Field(min_length=2)
    """Seconds, strictly increasing."""
    bandwidths_mbps: tuple[float, ...] = Field(min_length=2)
    """Mbps, one per timestamp, all > 0."""

    @model_validator(mode="after")
    def validate_points(self) -> NetworkTrace:
        """Check lengths, ordering and positivity."""
        if len(self.timestamps) != len(self.bandwidths_mbps):
            raise ValueError("timestamps and bandwidths_mbps must have the same length")
        for index in range(1, len(self.timestamps)):
            if not self.timestamps[index] > self.timestamps[index - 1]:
                raise ValueError(f"timestamps must be strictly increasing (point {index})")
        for index, bandwidth in enumerate(self.bandwidths_mbps):
            if not (bandwidth > 0 and math.isfinite(bandwidth)):
                raise ValueError(f"bandwidth must be positive (point {index})")
        return self

    @property
    def points(self) -> list[tuple[float, float]]:
        """The (timestamp, bandwidth) pairs in order."""
        return list(zip(self.timestamps, self.bandwidths_mbps, strict=True))

    _segment_durations: tuple[float, ...] = PrivateAttr(default=())
    _period_s: float = PrivateAttr(default=0.0)

    def model_post_init(self, __context: object) -> None:
        """Precompute the segment lengths the simulator walks over."""
        gaps = [later - earlier for earlier, later in zip(self.timestamps, self.timestamps[1:], strict=False)]
        self._segment_durations = (*gaps, gaps[-1])
        self._period_s = math.fsum(self._segment_durations)

    @property
    def segment_durations(self) -> tuple[float, ...]:
        """How long each sample's bandwidth holds, in seconds."""
        return self._segment_durations

    @property
    def period_s(self) -> float:
        """The length of one pass over the trace, in seconds."""
        return self._period_s


class TraceStats(BaseModel):
    """Unweighted summary statistics over a trace's bandwidth samples."""

    mean_mbps: float
    std_mbps: float = Field(ge=0)
    min_mbps: float
    max_mbps: float
    duration_s: float

    def describe(self) -> str:
        """Render the stats the way the adjustment prompt quotes them."""
        return (
            f"{self.mean_mbps:.2f} ± {self.std_mbps:.2f}Mbps, range [{self.min_mbps:.2f}, {self.max_mbps:.2f}]Mbps"
        )


def parse_trace(text: str | Iterable[str], trace_id: str) -> NetworkTrace:
    """Parse whitespace-separated `seconds bandwidth_mbps` lines into a trace.

    Blank lines and lines starting with `#` are skipped but still counted for error reporting.

    Args:
        text (str | Iterable[str]): The trace text, or an iterable of its lines (e.g. an open file).
        trace_id (str): The label to give the trace.

    Returns:
        NetworkTrace: The validated trace.

    Raises:
        TraceFormatError: On a malformed line, a non-increasing timestamp, a non-positive bandwidth, or fewer than
            two points.
    """
    lines = text.splitlines() if isinstance(text, str) else text

    timestamps: list[float] = []
    bandwidths: list[float] = []
    for line_number, raw_line in enumerate(lines, start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue

        fields = line.split()
        if len(fields) != 2:
            raise TraceFormatError(f"expected 2 columns, found {len(fields)}", line_number)
        try:
            timestamp, bandwidth = float(fields[0]), float(fields[1])
        except ValueError as e:
            raise TraceFormatError(f"not a number: {line!r}", line_number) from e

        if not (math.isfinite(timestamp) and math.isfinite(bandwidth)):
            raise TraceFormatError("non-finite value", line_number)
        if timestamps and timestamp <= timestamps[-1]:
            raise TraceFormatError(f"non-increasing timestamp {timestamp}", line_number)
        if bandwidth <= 0:
            raise TraceFormatError(f"non-positive bandwidth {bandwidth}", line_number)

        timestamps.append(timestamp)
        bandwidths.append(bandwidth)

    if len(timestamps) < 2:
        raise TraceFormatError(f"a trace needs at least 2 points, found {len(timestamps)}")

    return NetworkTrace(trace_id=trace_id, timestamps=tuple(timestamps), bandwidths_mbps=tuple(bandwidths))


def serialize_trace(trace: NetworkTrace) -> str:
    """Render a trace in the file format `parse_trace` reads; floats use `repr` so parsing is exact."""
    return "".join(f"{timestamp!r} {bandwidth!r}\n" for timestamp, bandwidth in trace.points)


def load_trace(file_path: str | Path) -> NetworkTrace:
    """Load a trace file, using the file stem as the trace id."""
    file_path = Path(file_path)
    with open(file_path, encoding="utf-8") as f:
        return parse_trace(f, trace_id=file_path.stem)


def save_trace(trace: NetworkTrace, file_path: str | Path) -> None:
    """Write a trace file."""
    Path(file_path).write_text(serialize_trace(trace), encoding="utf-8")


def load_trace_dir(directory: str | Path) -> list[NetworkTrace]:
    """Load every regular file in `directory` as a trace, sorted by file name."""
    directory = Path(directory)
    files = sorted(path for path in directory.iterdir() if path.is_file() and not path.name.startswith("."))
    traces = [load_trace(path) for path in files]
    logger.debug(f"Loaded {len(traces)} traces from {directory}")
    return traces


def trace_stats(trace: NetworkTrace) -> TraceStats:
    """Population statistics over the bandwidth samples, not weighted by interval length."""
    samples = np.asarray(trace.bandwidths_mbps, dtype=float)
    return TraceStats(
        mean_mbps=float(samples.mean()),
        std_mbps=float(samples.std()),
        min_mbps=float(samples.min()),
        max_mbps=float(samples.max()),
        duration_s=trace.period_s,
    )


def pooled_trace_stats(traces: list[NetworkTrace]) -> TraceStats:
    """Statistics over the samples of several traces taken together."""
    if not traces:
        raise ValueError("pooled_trace_stats needs at least one trace")
    samples = np.concatenate([np.asarray(trace.bandwidths_mbps, dtype=float) for trace in traces])
    return TraceStats(
        mean_mbps=float(samples.mean()),
        std_mbps=float(samples.std()),
        min_mbps=float(samples.min()),
        max_mbps=float(samples.max()),
        duration_s=math.fsum(trace.period_s for trace in traces),
    )


_LOW_MEAN_MBPS = 1.31
_LOW_CLIP_MBPS = (0.13, 3.4)
_HIGH_MEAN_MBPS = 347.46
_HIGH_STD_MBPS = 128.0
_HIGH_CLIP_MBPS = (64.1, 564.12)
_MARKOV_LEVELS_MBPS = (0.6, 1.5, 3.0, 6.0)
_MARKOV_STAY_PROBABILITY = 0.85


def synth_trace(profile: TraceProfile | str, seed: int, duration: float) -> NetworkTrace:
    """Generate a deterministic synthetic trace sampled once per second.

    Args:
        profile (TraceProfile | str): `low`, `high` or `markov`.
        seed (int): The RNG seed. The same arguments always give the same trace.
        duration (float): The trace period in seconds, at least 10.

    Returns:
        NetworkTrace: The generated trace, with id `<profile>-<seed>`.

    Raises:
        UnknownProfileError: If `profile` is not one of the known profiles.
        ValueError: If `duration` is below 10 seconds.
    """
    try:
        profile = TraceProfile(profile)
    except ValueError as e:
        raise UnknownProfileError(f"Unknown trace profile: {profile!r}") from e
    if duration < 10:
        raise ValueError(f"duration must be at least 10 s, got {duration}")

    n_points = int(math.ceil(duration))
    rng = np.random.default_rng(seed)

    if profile == TraceProfile.low:
        # AR(1) in log space, rescaled to the target mean before clipping
        log_samples = np.empty(n_points)
        log_samples[0] = rng.normal(0.0, 0.5)
        for index in range(1, n_points):
            log_samples[index] = 0.8 * log_samples[index - 1] + rng.normal(0.0, 0.3)
        samples = np.exp(log_samples)
        samples *= _LOW_MEAN_MBPS / samples.mean()
        samples = np.clip(samples, *_LOW_CLIP_MBPS)
    elif profile == TraceProfile.high:
        noise = np.empty(n_points)
        noise[0] = rng.normal()
        for index in range(1, n_points):
            noise[index] = 0.7 * noise[index - 1] + math.sqrt(1 - 0.7**2) * rng.normal()
        samples = np.clip(_HIGH_MEAN_MBPS + _HIGH_STD_MBPS * noise, *_HIGH_CLIP_MBPS)
    else:
        max_dwell = max(2, n_points // 4)
        state = int(rng.integers(len(_MARKOV_LEVELS_MBPS)))
        dwell = 0
        samples = np.empty(n_points)
        for index in range(n_points):
            samples[index] = _MARKOV_LEVELS_MBPS[state]
            dwell += 1
            if dwell >= max_dwell or rng.random() > _MARKOV_STAY_PROBABILITY:
                step = 1 if state == 0 else -1 if state == len(_MARKOV_LEVELS_MBPS) - 1 else int(rng.choice((-1, 1)))
                state += step
                dwell = 0

    timestamps = tuple(float(index) * duration / n_points for index in range(n_points))
    bandwidths = tuple(round(float(sample), 6) for sample in samples)
    return NetworkTrace(trace_id=f"{profile}-{seed}", timestamps=timestamps, bandwidths_mbps=bandwidths)
