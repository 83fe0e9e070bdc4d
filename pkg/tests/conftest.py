"""Configures pytest and creates fixtures."""

import os
from collections.abc import Callable
from pathlib import Path

import pytest

from abr_rashomon.media.manifest import VideoManifest, default_manifest
from abr_rashomon.network.trace import NetworkTrace, save_trace, synth_trace

PRECOMMIT_FILE_PATH = Path(__file__).parent.parent / ".pre-commit-config.yaml"
REQUIREMENTS_FILE_PATH = Path(__file__).parent.parent / "requirements.txt"
TEMPLATE_CONFIG_PATH = Path(__file__).parent.parent / "pipelineConfig_template.yaml"

TRACKED_DEPENDENCIES = [
    "pydantic",
    "numpy",
]


@pytest.fixture(autouse=True)
def clean_abr_rashomon_env(monkeypatch: pytest.MonkeyPatch) -> None:
    """Keep ABR_RASHOMON_* variables of the developer's shell out of the tests."""
    for key in list(os.environ):
        if key.startswith("ABR_RASHOMON_"):
            monkeypatch.delenv(key, raising=False)


@pytest.fixture(scope="session")
def tracked_dependencies() -> list[str]:
    """Get the tracked dependencies."""
    return TRACKED_DEPENDENCIES


@pytest.fixture(scope="session")
def dependency_versions() -> dict[str, str]:
    """Get the versions of the tracked dependencies from the requirements file."""
    with open(REQUIREMENTS_FILE_PATH) as f:
        requirements = f.readlines()

    dependencies = {}
    for req in requirements:
        for dep in TRACKED_DEPENDENCIES:
            if req.startswith(dep):
                if "==" in req:
                    version = req.split("==")[1].strip()
                elif "~=" in req:
                    version = req.split("~=")[1].strip()
                elif ">=" in req:
                    version = req.split(">=")[1].strip()
                else:
                    raise ValueError(f"Unsupported version pin: {req}")

                # Strip any info starting from the `+` character
                version = version.split("+")[0]
                dependencies[dep] = version

    return dependencies


@pytest.fixture(scope="session")
def manifest() -> VideoManifest:
    """The built-in six-level ladder."""
    return default_manifest()


@pytest.fixture(scope="session")
def tiny_manifest() -> VideoManifest:
    """Three levels, four chunks of 4 s, sizes exactly bitrate x duration."""
    ladder = (300, 750, 1200)
    return VideoManifest(
        manifest_id="tiny",
        ladder_kbps=ladder,
        chunk_duration_s=4.0,
        chunk_sizes_bytes=tuple(tuple(kbps * 500 for _ in range(4)) for kbps in ladder),
    )


@pytest.fixture(scope="session")
def constant_trace() -> Callable[[float], NetworkTrace]:
    """Factory for a trace holding one bandwidth forever."""

    def make(mbps: float) -> NetworkTrace:
        return NetworkTrace(trace_id=f"const-{mbps:g}", timestamps=(0.0, 1.0), bandwidths_mbps=(mbps, mbps))

    return make


@pytest.fixture
def trace_dir(tmp_path: Path, constant_trace: Callable[[float], NetworkTrace]) -> Path:
    """A directory with two constant traces and one seeded synthetic trace."""
    directory = tmp_path / "traces"
    directory.mkdir()
    save_trace(constant_trace(1.0), directory / "const-1.txt")
    save_trace(constant_trace(6.0), directory / "const-6.txt")
    save_trace(synth_trace("markov", 3, 60), directory / "markov-3.txt")
    return directory
