"""The teacher-student loop that grows a dataset matching the states a student policy actually visits.

Iteration 0 plays the teacher on every training trace. Each later iteration does four things:

1. Binarizes the current aggregate and removes columns.
2. Fits a greedy interim student on the result.
3. Plays the student on every trace.
4. Relabels each visited state with the teacher's decision and appends it to the aggregate.
"""

from __future__ import annotations

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from abr_rashomon.consts import (
    DEFAULT_BUFFER_CAP_S,
    DEFAULT_DELTA,
    DEFAULT_MAX_DEPTH,
    DEFAULT_MAX_THRESHOLDS_PER_FEATURE,
)
from abr_rashomon.distill.dataset import AggDataset
from abr_rashomon.distill.greedy_tree import train_greedy_tree
from abr_rashomon.errors import AbrRashomonError, DistillError
from abr_rashomon.features.binarize import binarize
from abr_rashomon.features.elimination import eliminate_columns
from abr_rashomon.features.ensemble import EnsembleConfig
from abr_rashomon.media.manifest import VideoManifest, default_manifest
from abr_rashomon.network.trace import NetworkTrace
from abr_rashomon.policies.base import AbrPolicy
from abr_rashomon.policies.tree_policy import TreePolicy
from abr_rashomon.sim.session import rollout


class DistillConfig(BaseModel):
    """Settings for `distill`."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    max_iterations: int = Field(default=3, ge=1)
    """M: student iterations after the initial teacher rollout."""
    max_depth: int = Field(default=DEFAULT_MAX_DEPTH, ge=1)
    """Depth of the interim students."""
    traces: list[NetworkTrace] = Field(min_length=1)
    manifest: VideoManifest = Field(default_factory=default_manifest)
    delta: float = Field(default=DEFAULT_DELTA, ge=0)
    eliminate: bool = True
    """Run column elimination before fitting each interim student."""
    max_thresholds_per_feature: int = Field(default=DEFAULT_MAX_THRESHOLDS_PER_FEATURE, ge=1)
    buffer_cap_s: float = Field(default=DEFAULT_BUFFER_CAP_S, gt=0)
    ensemble: EnsembleConfig = Field(default_factory=EnsembleConfig)


def train_student(aggregate: AggDataset, cfg: DistillConfig, name: str = "student") -> TreePolicy:
    """Binarize (and optionally thin) the aggregate, then fit a greedy tree on it."""
    _, data = binarize(aggregate.to_raw(), cfg.max_thresholds_per_feature)
    if cfg.eliminate:
        data = eliminate_columns(data, cfg.delta, ensemble_cfg=cfg.ensemble).dataset
    tree = train_greedy_tree(data, cfg.max_depth)
    return TreePolicy(tree, data.binarizer, name=name)


def agreement(student: AbrPolicy, teacher: AbrPolicy, traces: list[NetworkTrace], manifest: VideoManifest) -> float:
    """Fraction of the student's own visited states on which it picks the teacher's level."""
    matches = total = 0
    for trace in traces:
        log, observations = rollout(student, trace, manifest)
        for row, observation in zip(log.rows, observations, strict=True):
            matches += int(row.level == teacher.decide(observation, manifest))
            total += 1
    return matches / total if total else 0.0


def distill(teacher: AbrPolicy, cfg: DistillConfig) -> AggDataset:
    """Run the teacher-student loop for `cfg.max_iterations` student iterations.

    Returns:
        AggDataset: Every visited state with its teacher label, tagged with the iteration that produced it.

    Raises:
        DistillError: Wrapping any policy, simulator or feature failure, with the iteration number.
    """
    manifest = cfg.manifest
    aggregate = AggDataset.empty(manifest.n_levels)

    logger.info(f"Distilling {teacher.name} over {len(cfg.traces)} traces for {cfg.max_iterations} iterations")
    try:
        for trace in cfg.traces:
            log, observations = rollout(teacher, trace, manifest, cfg.buffer_cap_s)
            aggregate = aggregate.append(observations, [row.level for row in log.rows], iteration=0)
    except (AbrRashomonError, ValueError) as e:
        raise DistillError(f"iteration 0: {e}") from e

    for iteration in range(1, cfg.max_iterations + 1):
        try:
            student = train_student(aggregate, cfg, name=f"student_{iteration}")
            visited = 0
            for trace in cfg.traces:
                _, observations = rollout(student, trace, manifest, cfg.buffer_cap_s)
                labels = [teacher.decide(observation, manifest) for observation in observations]
                aggregate = aggregate.append(observations, labels, iteration=iteration)
                visited += len(observations)
        except (AbrRashomonError, ValueError) as e:
            raise DistillError(f"iteration {iteration}: {e}") from e
        logger.info(
            f"Iteration {iteration}: student with {student.tree.n_leaves} leaves visited {visited} states; "
            f"aggregate now {aggregate.n_rows} rows",
        )

    return aggregate
