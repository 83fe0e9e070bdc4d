from pathlib import Path

import pytest
from pydantic import ValidationError

from abr_rashomon.media.manifest import (
    VideoManifest,
    default_manifest,
    load_manifest,
    load_manifest_file,
    save_manifest,
)


def test_default_manifest_shape(manifest: VideoManifest) -> None:
    """The built-in video has six levels, 48 chunks of 4 s."""
    assert manifest.ladder_kbps == (300, 750, 1200, 1850, 2850, 4300)
    assert manifest.n_levels == 6
    assert manifest.n_chunks == 48
    assert manifest.chunk_duration_s == 4.0
    assert manifest.top_kbps == 4300


def test_default_manifest_sizes_are_jittered_and_monotone(manifest: VideoManifest) -> None:
    """Chunk sizes stay within the jitter band around bitrate x duration and grow with level."""
    for level, kbps in enumerate(manifest.ladder_kbps):
        nominal = kbps * 1000 * 4 / 8
        for chunk_index in range(manifest.n_chunks):
            size = manifest.chunk_size(level, chunk_index)
            assert 0.85 * nominal - 1 <= size <= 1.15 * nominal
    for chunk_index in range(manifest.n_chunks):
        column = [manifest.chunk_size(level, chunk_index) for level in range(manifest.n_levels)]
        assert column == sorted(column)


def test_default_manifest_is_deterministic() -> None:
    """The seed fixes the jitter."""
    assert default_manifest(3) == default_manifest(3)
    assert default_manifest(3).chunk_sizes_bytes != default_manifest(4).chunk_sizes_bytes


def test_manifest_json_round_trip(tmp_path: Path, tiny_manifest: VideoManifest) -> None:
    """A manifest survives JSON text and file storage."""
    text = save_manifest(tiny_manifest)
    assert load_manifest(text) == tiny_manifest

    path = tmp_path / "manifest.json"
    path.write_text(text, encoding="utf-8")
    assert load_manifest_file(path) == tiny_manifest


@pytest.mark.parametrize(
    ("ladder", "sizes"),
    [
        ((750, 300), ((100, 100), (200, 200))),
        ((300, 750), ((100, 100),)),
        ((300, 750), ((100, 100), (200,))),
        ((300, 750), ((100, 0), (200, 200))),
        ((300, 750), ((300, 100), (200, 200))),
    ],
)
def test_manifest_rejects_invalid_tables(ladder: tuple[int, ...], sizes: tuple[tuple[int, ...], ...]) -> None:
    """Unordered ladders, ragged or mis-shaped tables, empty chunks and decreasing sizes are refused."""
    with pytest.raises(ValidationError):
        VideoManifest(ladder_kbps=ladder, chunk_duration_s=4.0, chunk_sizes_bytes=sizes)


def test_level_of(tiny_manifest: VideoManifest) -> None:
    """Bitrates map back to their ladder index."""
    assert tiny_manifest.level_of(750) == 1
    with pytest.raises(ValueError):
        tiny_manifest.level_of(1000)
