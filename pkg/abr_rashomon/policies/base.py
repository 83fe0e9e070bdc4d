"""The policy interface shared by teachers, baselines and distilled trees."""

from __future__ import annotations

from abc import ABC, abstractmethod

from typing_extensions import override

from abr_rashomon.media.manifest import VideoManifest
from abr_rashomon.sim.player import Observation


class AbrPolicy(ABC):
    """Chooses the ladder level of the next chunk.

    Policies are stateless: every decision depends only on the observation and the manifest, so a policy can be
    re-queried on any stored observation (the distillation loop relies on this).
    """

    name: str = "policy"

    @abstractmethod
    def decide(self, observation: Observation, manifest: VideoManifest) -> int:
        """Return the ladder index of the next chunk, in `[0, manifest.n_levels)`."""


class ConstantPolicy(AbrPolicy):
    """Always picks the same level."""

    def __init__(self, level: int) -> None:
        """Initialise the policy."""
        self.level = level
        self.name = f"constant:{level}"

    @override
    def decide(self, observation: Observation, manifest: VideoManifest) -> int:
        return self.level
