"""Model-predictive bitrate control with harmonic-mean throughput prediction.

The whole horizon is searched exhaustively. Every level sequence is scored at once with numpy instead of being
walked one at a time.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np
from pydantic import BaseModel, Field
from typing_extensions import override

from abr_rashomon.consts import DEFAULT_MPC_HISTORY, DEFAULT_MPC_HORIZON, MPC_ERROR_WINDOW
from abr_rashomon.media.manifest import VideoManifest
from abr_rashomon.policies.base import AbrPolicy
from abr_rashomon.qoe import QoeParams, qoe_lin
from abr_rashomon.sim.player import Observation

TIE_TOLERANCE = 1e-9
"""Predicted rewards closer than this count as a tie."""


class MpcConfig(BaseModel):
    """Search horizon and throughput-prediction settings."""

    horizon: int = Field(default=DEFAULT_MPC_HORIZON, ge=1, le=8)
    """Chunks looked ahead."""
    history: int = Field(default=DEFAULT_MPC_HISTORY, ge=1)
    """Throughput samples in the harmonic mean."""
    robust: bool = True
    """Discount the prediction by the worst recent relative error."""


@lru_cache(maxsize=32)
def _level_sequences(n_levels: int, horizon: int) -> np.ndarray:
    """Every level sequence of length `horizon`, in lexicographic order."""
    return np.array(list(itertools.product(range(n_levels), repeat=horizon)), dtype=np.intp)


def predict_throughput(tput_hist_mbps: tuple[float, ...] | list[float], history: int) -> float | None:
    """Harmonic mean of the last `history` measured (non-zero) samples, or `None` before any measurement."""
    measured = [value for value in tput_hist_mbps if value > 0][-history:]
    if not measured:
        return None
    return len(measured) / sum(1.0 / value for value in measured)


def recent_errors(
    tput_hist_mbps: tuple[float, ...] | list[float],
    history: int,
    window: int = MPC_ERROR_WINDOW,
) -> list[float]:
    """Relative prediction errors of the last `window` measurements.

    Each measurement is compared with the prediction that would have been made from the samples before it, which
    makes the error history a pure function of the observation.
    """
    errors = []
    for index in range(max(0, len(tput_hist_mbps) - window), len(tput_hist_mbps)):
        actual = tput_hist_mbps[index]
        if actual <= 0:
            continue
        predicted = predict_throughput(tput_hist_mbps[:index], history)
        if predicted is None:
            continue
        errors.append(abs(predicted - actual) / actual)
    return errors


def mpc_decide(
    observation: Observation,
    errors: list[float],
    cfg: MpcConfig,
    manifest: VideoManifest,
    params: QoeParams | None = None,
) -> int:
    """Pick the first level of the horizon sequence with the best predicted QoE.

    Args:
        observation (Observation): The current observation.
        errors (list[float]): Recent relative prediction errors; only used when `cfg.robust`.
        cfg (MpcConfig): Horizon and prediction settings.
        manifest (VideoManifest): Supplies future chunk sizes and the ladder.
        params (QoeParams | None): The QoE to maximise over the horizon. Defaults to linear QoE.

    Returns:
        int: The chosen level. Level 0 when no throughput has been measured yet; exact ties go to the lower level.
    """
    params = params or qoe_lin()
    tput_hist_mbps = observation.tput_hist_mbps
    predicted = predict_throughput(tput_hist_mbps, cfg.history)
    if predicted is None:
        return 0
    if cfg.robust and errors:
        predicted /= 1.0 + max(errors)

    chunk_index = observation.chunk_index(manifest)
    horizon = min(cfg.horizon, manifest.n_chunks - chunk_index)
    if horizon <= 0:
        return 0

    sequences = _level_sequences(manifest.n_levels, horizon)
    sizes = np.asarray(manifest.chunk_sizes_bytes, dtype=float)[:, chunk_index : chunk_index + horizon]
    download_s = sizes[sequences, np.arange(horizon)] * 8.0 / 1_000_000.0 / predicted

    buffer_s = np.full(len(sequences), observation.buffer_s)
    rebuffer_s = np.zeros(len(sequences))
    for position in range(horizon):
        rebuffer_s += np.maximum(download_s[:, position] - buffer_s, 0.0)
        buffer_s = np.maximum(buffer_s - download_s[:, position], 0.0) + manifest.chunk_duration_s

    quality_by_level = np.array([params.quality(kbps) for kbps in manifest.ladder_kbps])
    quality = quality_by_level[sequences]
    last_quality = quality_by_level[observation.last_level(manifest)]
    smoothness = np.abs(quality[:, 0] - last_quality) + np.abs(np.diff(quality, axis=1)).sum(axis=1)

    reward = quality.sum(axis=1) - params.mu * rebuffer_s - smoothness
    # sequences are lexicographic, so the first near-maximal one starts at the lowest tied level
    best = int(np.flatnonzero(reward >= reward.max() - TIE_TOLERANCE)[0])
    return int(sequences[best, 0])


class MpcPolicy(AbrPolicy):
    """`mpc_decide` as a policy, rebuilding the error history from each observation."""

    def __init__(self, cfg: MpcConfig | None = None, params: QoeParams | None = None) -> None:
        """Initialise the policy."""
        self.cfg = cfg or MpcConfig()
        self.params = params or qoe_lin()
        self.name = "robustmpc" if self.cfg.robust else "mpc"

    @override
    def decide(self, observation: Observation, manifest: VideoManifest) -> int:
        errors = recent_errors(observation.tput_hist_mbps, self.cfg.history) if self.cfg.robust else []
        return mpc_decide(observation, errors, self.cfg, manifest, self.params)
