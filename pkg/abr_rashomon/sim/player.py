"""Chunk-level virtual player: state, observation, download arithmetic and the per-chunk step."""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from abr_rashomon.consts import BUFFER_NORM_S, DEFAULT_BUFFER_CAP_S, DELAY_NORM_S, HISTORY_LENGTH
from abr_rashomon.media.manifest import VideoManifest
from abr_rashomon.network.trace import NetworkTrace

_BYTES_PER_MEGABYTE = 1_000_000.0
_BITS_PER_MEGABIT = 1_000_000.0


class TraceCursor(BaseModel):
    """A position inside a looping trace."""

    model_config = ConfigDict(frozen=True)

    point_index: int = 0
    offset_s: float = 0.0
    """Seconds already spent inside the segment starting at `point_index`."""
    laps: int = 0
    """Completed passes over the whole trace."""

    def position_s(self, trace: NetworkTrace) -> float:
        """Unwrapped seconds elapsed since the start of the first lap."""
        return self.laps * trace.period_s + sum(trace.segment_durations[: self.point_index]) + self.offset_s


class PlayerState(BaseModel):
    """The raw player state that observations derive from."""

    model_config = ConfigDict(frozen=True)

    buffer_s: float = Field(default=0.0, ge=0)
    chunk_index: int = 0
    last_level: int = 0
    trace_cursor: TraceCursor = TraceCursor()
    tput_hist_mbps: tuple[float, ...] = (0.0,) * HISTORY_LENGTH
    """Oldest first; zero-padded at session start."""
    delay_hist_s: tuple[float, ...] = (0.0,) * HISTORY_LENGTH
    """Oldest first; zero-padded at session start."""
    elapsed_s: float = 0.0
    """Trace time consumed so far, downloads plus sleeps."""


def initial_state() -> PlayerState:
    """Empty buffer, lowest level, zero histories, cursor at the trace start."""
    return PlayerState()


def feature_names(n_levels: int = 6) -> list[str]:
    """Names of the flattened observation vector, in `Observation.as_vector` order."""
    return [
        "last_quality",
        "buffer",
        *[f"tput_{index}" for index in range(HISTORY_LENGTH)],
        *[f"delay_{index}" for index in range(HISTORY_LENGTH)],
        *[f"size_{level}" for level in range(n_levels)],
        "chunks_remaining",
    ]


class Observation(BaseModel):
    """The normalized features a policy decides from."""

    model_config = ConfigDict(frozen=True)

    last_quality: float
    """Last bitrate divided by the top bitrate, in [0, 1]."""
    buffer: float
    """Buffer seconds / 10."""
    tput_hist: tuple[float, ...]
    """MByte/s, oldest first."""
    delay_hist: tuple[float, ...]
    """Download seconds / 10, oldest first."""
    next_sizes: tuple[float, ...]
    """MByte of the next chunk at each ladder level."""
    chunks_remaining: float
    """Remaining chunks / total chunks."""

    def as_vector(self) -> np.ndarray:
        """The flat float vector, ordered like `feature_names`."""
        return np.array(
            [
                self.last_quality,
                self.buffer,
                *self.tput_hist,
                *self.delay_hist,
                *self.next_sizes,
                self.chunks_remaining,
            ],
            dtype=float,
        )

    @classmethod
    def from_vector(cls, vector: np.ndarray | list[float], n_levels: int = 6) -> Observation:
        """Rebuild an observation from `as_vector` output."""
        values = [float(value) for value in vector]
        expected = 3 + 2 * HISTORY_LENGTH + n_levels
        if len(values) != expected:
            raise ValueError(f"expected {expected} values for {n_levels} levels, got {len(values)}")
        sizes_start = 2 + 2 * HISTORY_LENGTH
        return cls(
            last_quality=values[0],
            buffer=values[1],
            tput_hist=tuple(values[2 : 2 + HISTORY_LENGTH]),
            delay_hist=tuple(values[2 + HISTORY_LENGTH : sizes_start]),
            next_sizes=tuple(values[sizes_start : sizes_start + n_levels]),
            chunks_remaining=values[-1],
        )

    @property
    def buffer_s(self) -> float:
        """The buffer level in seconds."""
        return self.buffer * BUFFER_NORM_S

    @property
    def tput_hist_mbps(self) -> tuple[float, ...]:
        """The throughput history converted back to Mbps."""
        return tuple(value * 8.0 for value in self.tput_hist)

    def chunk_index(self, manifest: VideoManifest) -> int:
        """Recover the index of the chunk about to be downloaded."""
        return manifest.n_chunks - round(self.chunks_remaining * manifest.n_chunks)

    def last_level(self, manifest: VideoManifest) -> int:
        """Recover the ladder index of the previous chunk."""
        last_kbps = self.last_quality * manifest.top_kbps
        return int(np.argmin([abs(kbps - last_kbps) for kbps in manifest.ladder_kbps]))


class SessionRow(BaseModel):
    """One downloaded chunk."""

    model_config = ConfigDict(frozen=True)

    chunk_index: int
    level: int
    bitrate_kbps: int
    rebuffer_s: float = Field(ge=0)
    download_time_s: float
    sleep_s: float = 0.0
    buffer_after_s: float


def observe(state: PlayerState, manifest: VideoManifest) -> Observation:
    """Normalize the raw player state into an observation."""
    if state.chunk_index < manifest.n_chunks:
        next_sizes = tuple(
            manifest.chunk_size(level, state.chunk_index) / _BYTES_PER_MEGABYTE for level in range(manifest.n_levels)
        )
    else:
        next_sizes = (0.0,) * manifest.n_levels

    return Observation(
        last_quality=manifest.ladder_kbps[state.last_level] / manifest.top_kbps,
        buffer=state.buffer_s / BUFFER_NORM_S,
        tput_hist=tuple(mbps / 8.0 for mbps in state.tput_hist_mbps),
        delay_hist=tuple(delay / DELAY_NORM_S for delay in state.delay_hist_s),
        next_sizes=next_sizes,
        chunks_remaining=(manifest.n_chunks - state.chunk_index) / manifest.n_chunks,
    )


def _wrap(point_index: int, laps: int, trace: NetworkTrace) -> tuple[int, int]:
    point_index += 1
    if point_index == len(trace.timestamps):
        return 0, laps + 1
    return point_index, laps


def advance_cursor(cursor: TraceCursor, seconds: float, trace: NetworkTrace) -> TraceCursor:
    """Move the cursor forward by `seconds` of trace time, looping at the end."""
    point_index, offset, laps = cursor.point_index, cursor.offset_s, cursor.laps
    remaining = seconds
    while remaining > 0:
        left_in_segment = trace.segment_durations[point_index] - offset
        if remaining < left_in_segment:
            offset += remaining
            break
        remaining -= left_in_segment
        point_index, laps = _wrap(point_index, laps, trace)
        offset = 0.0
    return TraceCursor(point_index=point_index, offset_s=offset, laps=laps)


def transfer(cursor: TraceCursor, size_bytes: float, trace: NetworkTrace) -> tuple[float, TraceCursor]:
    """Time to move `size_bytes` through the trace starting at `cursor`, and where the cursor ends up."""
    if size_bytes <= 0:
        raise ValueError(f"size must be positive, got {size_bytes}")

    point_index, offset, laps = cursor.point_index, cursor.offset_s, cursor.laps
    remaining_mbit = size_bytes * 8.0 / _BITS_PER_MEGABIT
    elapsed = 0.0
    while True:
        bandwidth = trace.bandwidths_mbps[point_index]
        left_in_segment = trace.segment_durations[point_index] - offset
        capacity = bandwidth * left_in_segment
        if remaining_mbit < capacity:
            needed = remaining_mbit / bandwidth
            return elapsed + needed, TraceCursor(point_index=point_index, offset_s=offset + needed, laps=laps)
        elapsed += left_in_segment
        remaining_mbit -= capacity
        point_index, laps = _wrap(point_index, laps, trace)
        offset = 0.0
        if remaining_mbit <= 0:
            return elapsed, TraceCursor(point_index=point_index, offset_s=0.0, laps=laps)


def download_chunk(state: PlayerState, size_bytes: float, trace: NetworkTrace) -> tuple[float, TraceCursor]:
    """Download time for a chunk of `size_bytes` from the state's trace position, plus the advanced cursor."""
    return transfer(state.trace_cursor, size_bytes, trace)


def step(
    state: PlayerState,
    level: int,
    trace: NetworkTrace,
    manifest: VideoManifest,
    buffer_cap_s: float = DEFAULT_BUFFER_CAP_S,
) -> tuple[SessionRow, PlayerState]:
    """Download the next chunk at `level` and update the buffer, histories and trace position.

    Args:
        state (PlayerState): The state before the download.
        level (int): The ladder index to fetch.
        trace (NetworkTrace): The bandwidth trace.
        manifest (VideoManifest): The video being played.
        buffer_cap_s (float): The buffer ceiling; the player sleeps off any excess.

    Returns:
        tuple[SessionRow, PlayerState]: The log row for this chunk and the next state.
    """
    if not 0 <= level < manifest.n_levels:
        raise ValueError(f"level {level} outside the ladder [0, {manifest.n_levels})")
    if state.chunk_index >= manifest.n_chunks:
        raise ValueError("the session has already downloaded every chunk")

    size_bytes = manifest.chunk_size(level, state.chunk_index)
    download_time, cursor = download_chunk(state, size_bytes, trace)

    # startup delay is not a stall
    rebuffer = max(download_time - state.buffer_s, 0.0) if state.chunk_index > 0 else 0.0
    buffer_after = max(state.buffer_s - download_time, 0.0) + manifest.chunk_duration_s

    sleep = 0.0
    if buffer_after > buffer_cap_s:
        sleep = buffer_after - buffer_cap_s
        cursor = advance_cursor(cursor, sleep, trace)
        buffer_after = buffer_cap_s

    throughput_mbps = size_bytes * 8.0 / _BITS_PER_MEGABIT / download_time

    row = SessionRow(
        chunk_index=state.chunk_index,
        level=level,
        bitrate_kbps=manifest.ladder_kbps[level],
        rebuffer_s=rebuffer,
        download_time_s=download_time,
        sleep_s=sleep,
        buffer_after_s=buffer_after,
    )
    next_state = PlayerState(
        buffer_s=buffer_after,
        chunk_index=state.chunk_index + 1,
        last_level=level,
        trace_cursor=cursor,
        tput_hist_mbps=(*state.tput_hist_mbps[1:], throughput_mbps),
        delay_hist_s=(*state.delay_hist_s[1:], download_time),
        elapsed_s=state.elapsed_s + download_time + sleep,
    )
    return row, next_state
