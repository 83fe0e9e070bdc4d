"""Video manifest model and its JSON file format."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from abr_rashomon.consts import DEFAULT_CHUNK_DURATION_S, DEFAULT_LADDER_KBPS, DEFAULT_N_CHUNKS

_JITTER_RANGE = (0.85, 1.15)


class VideoManifest(BaseModel):
    """A bitrate ladder with the byte size of every chunk at every level."""

    model_config = ConfigDict(frozen=True)

    manifest_id: str = "default"
    ladder_kbps: tuple[int, ...] = Field(min_length=1)
    """Available bitrates, strictly ascending."""
    chunk_duration_s: float = Field(gt=0)
    chunk_sizes_bytes: tuple[tuple[int, ...], ...]
    """Indexed `[level][chunk_index]`."""

    @model_validator(mode="after")
    def validate_ladder_and_sizes(self) -> VideoManifest:
        """Enforce ladder order, table shape, positive sizes and size monotonicity in level."""
        for lower, higher in zip(self.ladder_kbps, self.ladder_kbps[1:], strict=False):
            if not higher > lower:
                raise ValueError(f"ladder_kbps must be strictly ascending, got {list(self.ladder_kbps)}")

        if len(self.chunk_sizes_bytes) != len(self.ladder_kbps):
            raise ValueError(
                f"chunk_sizes_bytes has {len(self.chunk_sizes_bytes)} rows but the ladder has "
                f"{len(self.ladder_kbps)} levels",
            )

        n_chunks = len(self.chunk_sizes_bytes[0])
        if n_chunks == 0:
            raise ValueError("chunk_sizes_bytes rows must not be empty")
        for level, row in enumerate(self.chunk_sizes_bytes):
            if len(row) != n_chunks:
                raise ValueError(f"chunk_sizes_bytes row {level} has {len(row)} chunks, expected {n_chunks}")
            if any(size <= 0 for size in row):
                raise ValueError(f"chunk_sizes_bytes row {level} contains a size <= 0")

        for chunk_index in range(n_chunks):
            column = [row[chunk_index] for row in self.chunk_sizes_bytes]
            if any(higher < lower for lower, higher in zip(column, column[1:], strict=False)):
                raise ValueError(f"chunk {chunk_index} sizes decrease with level")

        return self

    @property
    def n_chunks(self) -> int:
        """The number of chunks in the video."""
        return len(self.chunk_sizes_bytes[0])

    @property
    def n_levels(self) -> int:
        """The number of ladder levels."""
        return len(self.ladder_kbps)

    @property
    def top_kbps(self) -> int:
        """The highest bitrate on the ladder."""
        return self.ladder_kbps[-1]

    def chunk_size(self, level: int, chunk_index: int) -> int:
        """The size in bytes of `chunk_index` encoded at `level`."""
        return self.chunk_sizes_bytes[level][chunk_index]

    def level_of(self, bitrate_kbps: float) -> int:
        """The ladder index of `bitrate_kbps`.

        Raises:
            ValueError: If the bitrate is not on the ladder.
        """
        for level, kbps in enumerate(self.ladder_kbps):
            if kbps == bitrate_kbps:
                return level
        raise ValueError(f"{bitrate_kbps} kbps is not on the ladder {list(self.ladder_kbps)}")


def default_manifest(seed: int = 0) -> VideoManifest:
    """The six-level, 48 x 4 s ladder with deterministic per-chunk size jitter.

    Every level of a chunk shares the same jitter factor, so sizes stay monotone in level.
    """
    rng = np.random.default_rng(seed)
    jitter = rng.uniform(*_JITTER_RANGE, size=DEFAULT_N_CHUNKS)

    sizes = tuple(
        tuple(int(kbps * 1000 * DEFAULT_CHUNK_DURATION_S / 8 * float(factor)) for factor in jitter)
        for kbps in DEFAULT_LADDER_KBPS
    )
    return VideoManifest(
        manifest_id=f"default-{seed}",
        ladder_kbps=DEFAULT_LADDER_KBPS,
        chunk_duration_s=DEFAULT_CHUNK_DURATION_S,
        chunk_sizes_bytes=sizes,
    )


def load_manifest(text: str) -> VideoManifest:
    """Parse a manifest from its JSON text.

    Raises:
        pydantic.ValidationError: On any schema or invariant violation.
    """
    return VideoManifest.model_validate_json(text)


def save_manifest(manifest: VideoManifest) -> str:
    """Render a manifest as JSON text."""
    return manifest.model_dump_json(indent=2)


def load_manifest_file(file_path: str | Path) -> VideoManifest:
    """Load a manifest JSON file."""
    return load_manifest(Path(file_path).read_text(encoding="utf-8"))
