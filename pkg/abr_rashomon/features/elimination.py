"""Column elimination guided by a reference ensemble's accuracy and split-gain importance."""

from __future__ import annotations

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from abr_rashomon.consts import DEFAULT_DELTA
from abr_rashomon.features.binarize import BinDataset
from abr_rashomon.features.ensemble import EnsembleConfig, ReferenceLearner, train_ensemble


class EliminationStep(BaseModel):
    """One pass of the elimination loop."""

    columns_before: int
    filtered: list[int]
    """Input-column ids dropped for importance below delta."""
    dropped_min: int | None
    """The input-column id dropped as least important, if any."""
    accuracy_after: float


class EliminationResult(BaseModel):
    """The reduced dataset plus the accuracy bookkeeping that justified it."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    dataset: BinDataset
    kept_columns: list[int]
    """Ids of the kept columns in the input dataset."""
    acc_ori: float
    acc_final: float
    acc_guard: float = Field(description="min(acc_ori, acc_rec)")
    reverted: bool
    """Whether the loop stopped on an accuracy drop and re-added the last dropped column."""
    history: list[EliminationStep]


def eliminate_columns(
    data: BinDataset,
    delta: float = DEFAULT_DELTA,
    acc_rec: float | None = None,
    *,
    ensemble_cfg: EnsembleConfig | None = None,
    learner: ReferenceLearner | None = None,
) -> EliminationResult:
    """Shrink the column set while the reference learner's accuracy stays at or above the guard.

    Each pass drops every column whose importance is below `delta`, then the least important column left, and
    retrains. The loop stops when accuracy falls below `min(acc_ori, acc_rec)` or a single column remains. If it
    stopped on accuracy, the last least-important column is re-added. If the retrained accuracy is still below
    the guard after that, the last column set known to meet the guard is restored.

    Args:
        data (BinDataset): The full binarized dataset.
        delta (float): Importance threshold for the bulk filter. Must be >= 0.
        acc_rec (float | None): Reference accuracy. Defaults to the full-data accuracy.
        ensemble_cfg (EnsembleConfig | None): Settings for the default learner.
        learner (ReferenceLearner | None): Replaces the built-in boosted ensemble.

    Returns:
        EliminationResult: The reduced dataset and the loop history.
    """
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")

    def fit(columns: list[int]) -> tuple[float, np.ndarray]:
        subset = data.select_columns(columns)
        model = learner(subset) if learner is not None else train_ensemble(subset, ensemble_cfg)
        return model.accuracy, model.importance

    columns = list(range(data.n_columns))
    acc_ori, importance_local = fit(columns)
    guard = min(acc_ori, acc_ori if acc_rec is None else acc_rec)
    importance = dict(zip(columns, importance_local.tolist(), strict=True))

    verified_columns = list(columns)
    acc_new = acc_ori
    last_dropped: int | None = None
    history: list[EliminationStep] = []

    while acc_new >= guard and len(columns) > 1:
        before = len(columns)
        kept = [column for column in columns if importance[column] >= delta]
        filtered = [column for column in columns if importance[column] < delta]
        if not kept:
            # keep the single most important column (lowest id on ties)
            best = max(columns, key=lambda column: (importance[column], -column))
            kept = [best]
            filtered = [column for column in columns if column != best]

        last_dropped = None
        if len(kept) > 1:
            last_dropped = min(kept, key=lambda column: (importance[column], column))
            kept = [column for column in kept if column != last_dropped]

        verified_columns = columns
        columns = kept
        acc_new, importance_local = fit(columns)
        importance = dict(zip(columns, importance_local.tolist(), strict=True))
        history.append(
            EliminationStep(
                columns_before=before,
                filtered=filtered,
                dropped_min=last_dropped,
                accuracy_after=acc_new,
            ),
        )
        logger.debug(f"Elimination: {before} -> {len(columns)} columns, accuracy {acc_new:.4f}")

    reverted = False
    if acc_new < guard:
        reverted = True
        if last_dropped is not None:
            columns = sorted([*columns, last_dropped])
            acc_new, _ = fit(columns)
        if acc_new < guard:
            logger.warning(
                f"Re-adding column {last_dropped} left accuracy at {acc_new:.4f} < {guard:.4f}; "
                "restoring the previous column set",
            )
            columns = sorted(verified_columns)
            acc_new, _ = fit(columns)

    logger.info(f"Column elimination kept {len(columns)} of {data.n_columns} columns (accuracy {acc_new:.4f})")
    return EliminationResult(
        dataset=data.select_columns(columns),
        kept_columns=sorted(columns),
        acc_ori=acc_ori,
        acc_final=acc_new,
        acc_guard=guard,
        reverted=reverted,
        history=history,
    )
