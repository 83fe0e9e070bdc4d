"""Threshold binarization of raw observation features."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from abr_rashomon.errors import BinarizationError
from abr_rashomon.sim.player import Observation, feature_names


class BinaryColumn(BaseModel):
    """One binary column: whether a raw feature is strictly below a threshold."""

    model_config = ConfigDict(frozen=True)

    feature_index: int = Field(ge=0)
    feature_name: str
    threshold: float


class Binarizer(BaseModel):
    """Maps binary column ids back to (raw feature, threshold) pairs."""

    feature_names: list[str]
    """Names of the raw features, indexed by `BinaryColumn.feature_index`."""
    columns: list[BinaryColumn]

    @model_validator(mode="after")
    def validate_columns(self) -> Binarizer:
        """Every column must reference a known feature, and thresholds must increase within each feature."""
        last_threshold: dict[int, float] = {}
        for index, column in enumerate(self.columns):
            if column.feature_index >= len(self.feature_names):
                raise ValueError(f"column {index} references unknown feature {column.feature_index}")
            if column.feature_name != self.feature_names[column.feature_index]:
                raise ValueError(f"column {index} name {column.feature_name!r} does not match its feature index")
            previous = last_threshold.get(column.feature_index)
            if previous is not None and not column.threshold > previous:
                raise ValueError(f"thresholds for {column.feature_name} must be strictly increasing")
            last_threshold[column.feature_index] = column.threshold
        return self

    @property
    def n_columns(self) -> int:
        """The number of binary columns."""
        return len(self.columns)

    def transform(self, features: np.ndarray) -> np.ndarray:
        """Binarize a raw feature matrix (rows x raw features) into a boolean matrix (rows x columns)."""
        features = np.atleast_2d(np.asarray(features, dtype=float))
        if not self.columns:
            return np.zeros((features.shape[0], 0), dtype=bool)
        indices = np.array([column.feature_index for column in self.columns], dtype=np.intp)
        thresholds = np.array([column.threshold for column in self.columns], dtype=float)
        return features[:, indices] < thresholds

    def bit(self, column_index: int, features: np.ndarray) -> bool:
        """The bit of one column for one raw feature vector."""
        column = self.columns[column_index]
        return bool(features[column.feature_index] < column.threshold)

    def subset(self, column_indices: list[int]) -> Binarizer:
        """A binarizer keeping only `column_indices`, in their original order."""
        return Binarizer(
            feature_names=list(self.feature_names),
            columns=[self.columns[index] for index in sorted(column_indices)],
        )

    def column_index(self, feature_index: int, threshold: float) -> int | None:
        """The id of the column for (feature, threshold), if it exists."""
        for index, column in enumerate(self.columns):
            if column.feature_index == feature_index and column.threshold == threshold:
                return index
        return None

    def save(self, file_path: str | Path) -> None:
        """Write the binarizer as JSON."""
        Path(file_path).write_text(self.model_dump_json(indent=2), encoding="utf-8")

    @classmethod
    def load(cls, file_path: str | Path) -> Binarizer:
        """Read a binarizer JSON file."""
        return cls.model_validate_json(Path(file_path).read_text(encoding="utf-8"))

    @classmethod
    def from_pairs(cls, pairs: list[tuple[int, float]], names: list[str]) -> Binarizer:
        """Build a binarizer from (feature index, threshold) pairs, sorted by feature then threshold."""
        unique = sorted(set(pairs))
        return cls(
            feature_names=list(names),
            columns=[
                BinaryColumn(feature_index=feature, feature_name=names[feature], threshold=threshold)
                for feature, threshold in unique
            ],
        )


class RawDataset(BaseModel):
    """State-action rows: raw observation vectors with ladder-index labels."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    features: np.ndarray
    """Rows x raw features, float."""
    labels: np.ndarray
    """One ladder index per row."""
    feature_names: list[str]

    @model_validator(mode="after")
    def validate_shapes(self) -> RawDataset:
        """Rows, labels and names must line up."""
        if self.features.ndim != 2 or self.features.shape[0] == 0:
            raise ValueError("features must be a non-empty 2-D array")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels must have one entry per row")
        if self.features.shape[1] != len(self.feature_names):
            raise ValueError("feature_names must name every feature column")
        if (self.labels < 0).any():
            raise ValueError("labels must be ladder indices")
        return self

    @classmethod
    def from_observations(cls, observations: list[Observation], labels: list[int]) -> RawDataset:
        """Stack observations into a dataset."""
        n_levels = len(observations[0].next_sizes)
        return cls(
            features=np.vstack([observation.as_vector() for observation in observations]),
            labels=np.asarray(labels, dtype=np.int64),
            feature_names=feature_names(n_levels),
        )

    @property
    def n_rows(self) -> int:
        """The number of rows."""
        return int(self.features.shape[0])


class BinDataset(BaseModel):
    """A binarized dataset: boolean matrix, labels and the binarizer that produced the columns."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    matrix: np.ndarray
    """Rows x binary columns, bool."""
    labels: np.ndarray
    binarizer: Binarizer

    @model_validator(mode="after")
    def validate_shapes(self) -> BinDataset:
        """The matrix width must match the binarizer and there must be one label per row."""
        if self.matrix.ndim != 2:
            raise ValueError("matrix must be 2-D")
        if self.matrix.shape[1] != self.binarizer.n_columns:
            raise ValueError(
                f"matrix has {self.matrix.shape[1]} columns but the binarizer has {self.binarizer.n_columns}",
            )
        if self.labels.shape != (self.matrix.shape[0],):
            raise ValueError("labels must have one entry per row")
        self.matrix = self.matrix.astype(bool, copy=False)
        self.labels = self.labels.astype(np.int64, copy=False)
        return self

    @property
    def n_rows(self) -> int:
        """The number of rows."""
        return int(self.matrix.shape[0])

    @property
    def n_columns(self) -> int:
        """The number of binary columns."""
        return int(self.matrix.shape[1])

    def select_columns(self, column_indices: list[int]) -> BinDataset:
        """Keep only `column_indices` (sorted) in both the matrix and the binarizer."""
        ordered = sorted(column_indices)
        return BinDataset(
            matrix=self.matrix[:, ordered],
            labels=self.labels,
            binarizer=self.binarizer.subset(ordered),
        )

    @classmethod
    def from_bits(cls, matrix: np.ndarray | list[list[int]], labels: np.ndarray | list[int]) -> BinDataset:
        """Wrap an already binary matrix, inventing one raw feature per column thresholded at 0.5.

        Useful when the raw features are themselves 0/1: bit = value < 0.5, so bit 1 means the raw value is 0.
        """
        matrix = np.asarray(matrix, dtype=bool)
        names = [f"x{index}" for index in range(matrix.shape[1])]
        binarizer = Binarizer(
            feature_names=names,
            columns=[
                BinaryColumn(feature_index=index, feature_name=name, threshold=0.5) for index, name in enumerate(names)
            ],
        )
        return cls(matrix=matrix, labels=np.asarray(labels, dtype=np.int64), binarizer=binarizer)


def candidate_thresholds(values: np.ndarray, max_thresholds: int) -> list[float]:
    """Midpoints between consecutive distinct values, thinned to evenly spaced quantile positions over the cap.

    A midpoint that rounds down onto the lower value is replaced by the upper value, so every threshold separates
    its pair under `value < threshold` and the list stays strictly increasing.
    """
    distinct = np.unique(values)
    lower, upper = distinct[:-1], distinct[1:]
    halfway = (lower + upper) / 2.0
    midpoints = np.where(halfway > lower, halfway, upper).tolist()
    if len(midpoints) <= max_thresholds:
        return midpoints
    count = len(midpoints)
    return [midpoints[(position + 1) * count // (max_thresholds + 1)] for position in range(max_thresholds)]


def binarize(raw: RawDataset, max_thresholds_per_feature: int) -> tuple[Binarizer, BinDataset]:
    """Encode every raw feature as threshold-indicator columns.

    Args:
        raw (RawDataset): The raw rows; at least two.
        max_thresholds_per_feature (int): Cap on the columns generated per raw feature.

    Returns:
        tuple[Binarizer, BinDataset]: The column map and the encoded dataset.

    Raises:
        BinarizationError: If there are fewer than two rows or every feature is constant.
    """
    if raw.n_rows < 2:
        raise BinarizationError(f"binarize needs at least 2 rows, got {raw.n_rows}")
    if max_thresholds_per_feature < 1:
        raise BinarizationError("max_thresholds_per_feature must be at least 1")

    columns = []
    for feature_index, name in enumerate(raw.feature_names):
        for threshold in candidate_thresholds(raw.features[:, feature_index], max_thresholds_per_feature):
            columns.append(BinaryColumn(feature_index=feature_index, feature_name=name, threshold=float(threshold)))

    if not columns:
        raise BinarizationError("every feature is constant; no binary columns can be produced")

    binarizer = Binarizer(feature_names=list(raw.feature_names), columns=columns)
    data = BinDataset(matrix=binarizer.transform(raw.features), labels=raw.labels.copy(), binarizer=binarizer)
    logger.debug(f"Binarized {raw.n_rows} rows x {len(raw.feature_names)} features into {len(columns)} columns")
    return binarizer, data
