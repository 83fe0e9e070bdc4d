"""QoE metrics over session logs: the linear and HD quality maps, improvement ratios and CDF export."""

from __future__ import annotations

import math
from enum import auto

import numpy as np
from pydantic import BaseModel, Field, model_validator
from strenum import StrEnum

from abr_rashomon.consts import QOE_HD_MU, QOE_HD_TABLE, QOE_LIN_MU
from abr_rashomon.errors import QoeError
from abr_rashomon.sim.session import SessionLog


class QoeMetric(StrEnum):
    """The built-in QoE parameterisations."""

    lin = auto()
    """Quality equals bitrate in Mbps."""
    hd = auto()
    """Table-based quality rewarding HD bitrates."""


class QoeParams(BaseModel):
    """A quality map plus the rebuffer penalty weight."""

    name: str
    quality_table: dict[int, float] | None = None
    """Bitrate kbps -> quality. `None` means linear: quality = kbps / 1000."""
    mu: float = Field(gt=0)
    """Quality units lost per second of rebuffering."""

    @model_validator(mode="after")
    def validate_monotone(self) -> QoeParams:
        """The quality map must not decrease with bitrate."""
        if self.quality_table is not None:
            ordered = [self.quality_table[kbps] for kbps in sorted(self.quality_table)]
            if any(higher < lower for lower, higher in zip(ordered, ordered[1:], strict=False)):
                raise ValueError("quality_table must be non-decreasing in bitrate")
        return self

    def quality(self, bitrate_kbps: int) -> float:
        """Quality score of one chunk at `bitrate_kbps`.

        Raises:
            QoeError: If the table has no entry for the bitrate.
        """
        if self.quality_table is None:
            return bitrate_kbps / 1000.0
        try:
            return self.quality_table[bitrate_kbps]
        except KeyError as e:
            raise QoeError(f"{bitrate_kbps} kbps has no entry in the {self.name} quality table") from e


def qoe_lin() -> QoeParams:
    """Linear QoE: quality in Mbps, 4.3 per rebuffer second."""
    return QoeParams(name=QoeMetric.lin, mu=QOE_LIN_MU)


def qoe_hd() -> QoeParams:
    """HD QoE: the stepped quality table, 8 per rebuffer second."""
    return QoeParams(name=QoeMetric.hd, quality_table=dict(QOE_HD_TABLE), mu=QOE_HD_MU)


def qoe_params_for(metric: QoeMetric | str) -> QoeParams:
    """Look up the built-in parameters by metric name."""
    return qoe_lin() if QoeMetric(metric) == QoeMetric.lin else qoe_hd()


class ChunkQoe(BaseModel):
    """The QoE contribution of one chunk."""

    quality: float
    rebuffer_penalty: float
    smooth_penalty: float
    """Switch penalty against the previous chunk; 0 for the first."""

    @property
    def total(self) -> float:
        """Net contribution of the chunk."""
        return self.quality - self.rebuffer_penalty - self.smooth_penalty


class QoeReport(BaseModel):
    """A session's QoE and its decomposition."""

    total: float
    quality_term: float
    rebuf_term: float
    smooth_term: float
    per_chunk: list[ChunkQoe]

    @property
    def per_chunk_mean(self) -> float:
        """Total divided by the number of chunks."""
        return self.total / len(self.per_chunk)


def qoe(log: SessionLog, params: QoeParams) -> QoeReport:
    """Sum of chunk qualities minus weighted rebuffering minus absolute quality switches."""
    if not log.rows:
        raise QoeError("cannot score an empty session")

    qualities = [params.quality(row.bitrate_kbps) for row in log.rows]
    per_chunk = [
        ChunkQoe(
            quality=quality,
            rebuffer_penalty=params.mu * row.rebuffer_s,
            smooth_penalty=abs(quality - qualities[index - 1]) if index > 0 else 0.0,
        )
        for index, (quality, row) in enumerate(zip(qualities, log.rows, strict=True))
    ]

    quality_term = math.fsum(qualities)
    rebuf_term = params.mu * math.fsum(row.rebuffer_s for row in log.rows)
    smooth_term = math.fsum(chunk.smooth_penalty for chunk in per_chunk)
    return QoeReport(
        total=quality_term - rebuf_term - smooth_term,
        quality_term=quality_term,
        rebuf_term=rebuf_term,
        smooth_term=smooth_term,
        per_chunk=per_chunk,
    )


def qoe_improvement(value: float, baseline: float) -> float:
    """Relative improvement over a baseline, normalised by the baseline's magnitude.

    Raises:
        QoeError: If the baseline is zero.
    """
    if baseline == 0:
        raise QoeError("improvement is undefined against a zero baseline")
    return (value - baseline) / abs(baseline)


def mean_qoe(logs: list[SessionLog], params: QoeParams) -> tuple[float, float]:
    """Mean and population std of per-chunk-normalised session QoE."""
    if not logs:
        raise QoeError("mean_qoe needs at least one session")
    values = np.array([qoe(log, params).per_chunk_mean for log in logs], dtype=float)
    return float(values.mean()), float(values.std())


def cdf_points(values: list[float]) -> list[tuple[float, float]]:
    """Sorted values paired with their empirical CDF probability i/n."""
    ordered = sorted(values)
    n = len(ordered)
    return [(value, (index + 1) / n) for index, value in enumerate(ordered)]
