from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from abr_rashomon.errors import BinarizationError
from abr_rashomon.features.binarize import (
    Binarizer,
    BinaryColumn,
    BinDataset,
    RawDataset,
    binarize,
    candidate_thresholds,
)
from abr_rashomon.features.storage import load_bin_dataset, save_bin_dataset
from abr_rashomon.media.manifest import VideoManifest
from abr_rashomon.sim.player import PlayerState, feature_names, observe


def _raw(features: list[list[float]], labels: list[int]) -> RawDataset:
    return RawDataset(
        features=np.asarray(features, dtype=float),
        labels=np.asarray(labels),
        feature_names=[f"f{index}" for index in range(len(features[0]))],
    )


def test_candidate_thresholds() -> None:
    """Midpoints of distinct values, thinned to the cap."""
    assert candidate_thresholds(np.array([3.0, 1.0, 2.0, 1.0, 4.0]), 10) == [1.5, 2.5, 3.5]
    assert candidate_thresholds(np.array([1.0, 2.0, 3.0, 4.0]), 1) == [2.5]
    assert candidate_thresholds(np.array([5.0, 5.0]), 4) == []


def test_candidate_thresholds_for_values_one_ulp_apart() -> None:
    """Adjacent floats still give strictly increasing thresholds that each split their pair."""
    values = np.array([0.7499999999999999, 0.75, 0.7500000000000001])

    thresholds = candidate_thresholds(values, 8)

    assert len(thresholds) == 2
    assert thresholds[0] < thresholds[1]
    for position, threshold in enumerate(thresholds):
        assert values[position] < threshold <= values[position + 1]

    raw = _raw([[value] for value in values], [0, 1, 2])
    binarizer, data = binarize(raw, 8)
    assert data.matrix.tolist() == [[True, True], [False, True], [False, False]]
    assert len(binarizer.columns) == 2


def test_binarize_encodes_below_threshold_as_one() -> None:
    """Bit 1 means the raw value is strictly below the threshold; constant features produce no columns."""
    binarizer, data = binarize(_raw([[0.0, 1.0], [1.0, 1.0], [2.0, 1.0]], [0, 1, 1]), 8)

    assert [(column.feature_name, column.threshold) for column in binarizer.columns] == [("f0", 0.5), ("f0", 1.5)]
    assert data.matrix.tolist() == [[True, True], [False, True], [False, False]]
    assert data.labels.tolist() == [0, 1, 1]
    assert binarizer.bit(1, np.array([1.0, 1.0])) is True


@pytest.mark.parametrize(
    ("features", "max_thresholds"),
    [
        ([[0.0, 1.0]], 4),
        ([[1.0, 1.0], [1.0, 1.0]], 4),
        ([[0.0], [1.0]], 0),
    ],
)
def test_binarize_rejects_degenerate_input(features: list[list[float]], max_thresholds: int) -> None:
    """Too few rows, only constant features, or a zero cap."""
    with pytest.raises(BinarizationError):
        binarize(_raw(features, [0] * len(features)), max_thresholds)


def test_binarizer_requires_increasing_thresholds() -> None:
    """Columns of one feature must be listed by increasing threshold."""
    with pytest.raises(ValidationError):
        Binarizer(
            feature_names=["a"],
            columns=[
                BinaryColumn(feature_index=0, feature_name="a", threshold=2.0),
                BinaryColumn(feature_index=0, feature_name="a", threshold=1.0),
            ],
        )
    with pytest.raises(ValidationError):
        Binarizer(feature_names=["a"], columns=[BinaryColumn(feature_index=1, feature_name="b", threshold=1.0)])


def test_from_pairs_sorts_and_deduplicates() -> None:
    """Pairs are ordered by feature then threshold."""
    binarizer = Binarizer.from_pairs([(1, 0.3), (0, 2.0), (1, 0.1), (0, 2.0)], ["a", "b"])

    assert [(column.feature_index, column.threshold) for column in binarizer.columns] == [(0, 2.0), (1, 0.1), (1, 0.3)]
    assert binarizer.column_index(1, 0.3) == 2
    assert binarizer.column_index(1, 0.2) is None


def test_select_columns_keeps_matrix_and_binarizer_aligned() -> None:
    """Column subsets stay consistent with their binarizer."""
    data = BinDataset.from_bits([[1, 0, 1], [0, 1, 1]], [0, 1])

    subset = data.select_columns([2, 0])

    assert subset.binarizer.feature_names == ["x0", "x1", "x2"]
    assert [column.feature_name for column in subset.binarizer.columns] == ["x0", "x2"]
    assert subset.matrix.tolist() == [[True, True], [False, True]]


def test_from_observations(manifest: VideoManifest) -> None:
    """Observations become rows named like the observation vector."""
    observations = [observe(PlayerState(buffer_s=buffer), manifest) for buffer in (1.0, 2.0)]

    raw = RawDataset.from_observations(observations, [0, 1])

    assert raw.n_rows == 2
    assert raw.feature_names == feature_names(6)
    assert raw.features[:, 1].tolist() == [0.1, 0.2]


def test_bin_dataset_storage_round_trip(tmp_path: Path) -> None:
    """The packed matrix, labels and binarizer load back unchanged."""
    rng = np.random.default_rng(0)
    data = BinDataset.from_bits(rng.integers(0, 2, size=(7, 11)), rng.integers(0, 3, size=7))

    written = save_bin_dataset(data, tmp_path / "data")
    loaded = load_bin_dataset(tmp_path / "data")

    assert len(written) == 3
    assert np.array_equal(loaded.matrix, data.matrix)
    assert np.array_equal(loaded.labels, data.labels)
    assert loaded.binarizer == data.binarizer
