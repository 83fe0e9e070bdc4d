"""Buffer-based bitrate selection with a reservoir and a linear cushion."""

from __future__ import annotations

from pydantic import BaseModel, Field
from typing_extensions import override

from abr_rashomon.consts import DEFAULT_BBA_CUSHION_S, DEFAULT_BBA_RESERVOIR_S
from abr_rashomon.media.manifest import VideoManifest
from abr_rashomon.policies.base import AbrPolicy
from abr_rashomon.sim.player import Observation


class BbaConfig(BaseModel):
    """Buffer thresholds, in seconds."""

    reservoir: float = Field(default=DEFAULT_BBA_RESERVOIR_S, gt=0)
    cushion: float = Field(default=DEFAULT_BBA_CUSHION_S, gt=0)


def bba_decide(observation: Observation, cfg: BbaConfig, ladder_kbps: tuple[int, ...]) -> int:
    """Map the buffer linearly onto the ladder between the reservoir and reservoir + cushion.

    Below the reservoir the lowest level is chosen, above the cushion the highest. In between, the chosen level is
    the highest whose position `(R_i - R_0) / (R_top - R_0)` does not exceed `(buffer - reservoir) / cushion`.
    """
    buffer_s = observation.buffer_s
    top = len(ladder_kbps) - 1
    if buffer_s <= cfg.reservoir or top == 0:
        return 0
    if buffer_s >= cfg.reservoir + cfg.cushion:
        return top

    fraction = (buffer_s - cfg.reservoir) / cfg.cushion
    span = ladder_kbps[-1] - ladder_kbps[0]
    level = 0
    for index, kbps in enumerate(ladder_kbps):
        if (kbps - ladder_kbps[0]) / span <= fraction:
            level = index
    return level


class BbaPolicy(AbrPolicy):
    """`bba_decide` as a policy."""

    name = "bba"

    def __init__(self, cfg: BbaConfig | None = None) -> None:
        """Initialise the policy."""
        self.cfg = cfg or BbaConfig()

    @override
    def decide(self, observation: Observation, manifest: VideoManifest) -> int:
        return bba_decide(observation, self.cfg, manifest.ladder_kbps)
