from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from abr_rashomon.consts import DEFAULT_LAMBDA, DEFAULT_MAX_DEPTH
from abr_rashomon.distill.dagger import DistillConfig, agreement, distill, train_student
from abr_rashomon.distill.dataset import AggDataset
from abr_rashomon.errors import DistillError
from abr_rashomon.features.binarize import binarize
from abr_rashomon.features.elimination import eliminate_columns
from abr_rashomon.media.manifest import VideoManifest
from abr_rashomon.network.trace import NetworkTrace, synth_trace
from abr_rashomon.policies.base import AbrPolicy, ConstantPolicy
from abr_rashomon.policies.bba import BbaPolicy
from abr_rashomon.policies.registry import make_policy
from abr_rashomon.policies.tree_policy import TreePolicy
from abr_rashomon.qoe import mean_qoe, qoe_lin
from abr_rashomon.sim.session import rollout
from abr_rashomon.sparse_tree.rashomon import solve_optimal


@pytest.fixture
def two_traces(constant_trace: Callable[[float], NetworkTrace]) -> list[NetworkTrace]:
    """A slow and a fast constant link."""
    return [constant_trace(1.0), constant_trace(6.0)]


def test_distill_collects_one_row_per_chunk_and_iteration(
    tiny_manifest: VideoManifest,
    two_traces: list[NetworkTrace],
) -> None:
    """The teacher pass plus each student pass add n_chunks rows per trace."""
    cfg = DistillConfig(
        max_iterations=2,
        max_depth=2,
        traces=two_traces,
        manifest=tiny_manifest,
        eliminate=False,
        max_thresholds_per_feature=4,
    )

    aggregate = distill(BbaPolicy(), cfg)

    assert aggregate.n_rows == 3 * tiny_manifest.n_chunks * len(two_traces)
    assert aggregate.iteration_sizes() == {0: 8, 1: 8, 2: 8}
    assert set(aggregate.labels.tolist()) <= {0, 1, 2}


def test_distill_is_deterministic(tiny_manifest: VideoManifest, two_traces: list[NetworkTrace]) -> None:
    """Same inputs, same aggregate."""
    cfg = DistillConfig(max_iterations=1, max_depth=2, traces=two_traces, manifest=tiny_manifest)

    first = distill(BbaPolicy(), cfg)
    second = distill(BbaPolicy(), cfg)

    assert np.array_equal(first.features, second.features)
    assert np.array_equal(first.labels, second.labels)


def test_student_of_a_constant_teacher_agrees_everywhere(
    manifest: VideoManifest,
    two_traces: list[NetworkTrace],
) -> None:
    """A single-label aggregate gives a one-leaf student that always matches."""
    teacher = ConstantPolicy(3)
    cfg = DistillConfig(max_iterations=1, max_depth=3, traces=two_traces, manifest=manifest)

    student = train_student(distill(teacher, cfg), cfg)

    assert student.tree.n_leaves == 1
    assert agreement(student, teacher, two_traces, manifest) == 1.0


def test_distill_wraps_failures_with_the_iteration(
    tiny_manifest: VideoManifest,
    two_traces: list[NetworkTrace],
) -> None:
    """A teacher answering off the ladder fails in iteration 0."""
    cfg = DistillConfig(max_iterations=1, traces=two_traces, manifest=tiny_manifest)

    with pytest.raises(DistillError, match="iteration 0"):
        distill(ConstantPolicy(5), cfg)


def test_agg_dataset_csv_round_trip(
    tmp_path: Path,
    tiny_manifest: VideoManifest,
    two_traces: list[NetworkTrace],
) -> None:
    """Features, labels and iteration tags survive CSV storage."""
    cfg = DistillConfig(max_iterations=1, max_depth=2, traces=two_traces, manifest=tiny_manifest, eliminate=False)
    aggregate = distill(BbaPolicy(), cfg)
    path = tmp_path / "aggregate.csv"
    aggregate.save_csv(path)

    loaded = AggDataset.load_csv(path)

    assert np.array_equal(loaded.features, aggregate.features)
    assert np.array_equal(loaded.labels, aggregate.labels)
    assert np.array_equal(loaded.iterations, aggregate.iterations)
    assert loaded.feature_names == aggregate.feature_names


def test_agg_dataset_rejects_mismatched_labels() -> None:
    """Appending needs one label per observation."""
    with pytest.raises(DistillError):
        AggDataset.empty(3).append([], [1], iteration=0)


@pytest.mark.slow
def test_optimal_tree_of_a_robust_mpc_teacher_plays_like_it(manifest: VideoManifest) -> None:
    """On held-out low traces the optimal tree is within 10% of its teacher's QoE and beats BBA."""
    teacher = make_policy("robustmpc")
    cfg = DistillConfig(
        max_iterations=3,
        max_depth=DEFAULT_MAX_DEPTH,
        traces=[synth_trace("low", seed, 320.0) for seed in range(10)],
        manifest=manifest,
    )

    aggregate = distill(teacher, cfg)
    _, data = binarize(aggregate.to_raw(), cfg.max_thresholds_per_feature)
    data = eliminate_columns(data, cfg.delta, ensemble_cfg=cfg.ensemble).dataset
    tree, _ = solve_optimal(data, DEFAULT_LAMBDA, DEFAULT_MAX_DEPTH)
    student = TreePolicy(tree, data.binarizer, name="optimal")

    held_out = [synth_trace("low", seed, 320.0) for seed in range(10, 20)]

    def mean_lin(policy: AbrPolicy) -> float:
        logs = [rollout(policy, trace, manifest)[0] for trace in held_out]
        return mean_qoe(logs, qoe_lin())[0]

    teacher_qoe = mean_lin(teacher)
    student_qoe = mean_lin(student)

    assert abs(student_qoe - teacher_qoe) <= 0.1 * abs(teacher_qoe)
    assert student_qoe > mean_lin(BbaPolicy())
