"""The aggregated state-action dataset grown by the teacher-student loop."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from abr_rashomon.errors import DistillError
from abr_rashomon.features.binarize import RawDataset
from abr_rashomon.sim.player import Observation, feature_names

LABEL_COLUMN = "label"
ITERATION_COLUMN = "iteration"


class AggDataset(BaseModel):
    """Observation vectors, teacher labels and the iteration each row was collected in.

    Rows are never deduplicated: repeated states carry the visitation frequency.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    features: np.ndarray
    labels: np.ndarray
    iterations: np.ndarray
    feature_names: list[str]

    @model_validator(mode="after")
    def validate_shapes(self) -> AggDataset:
        """Every row needs a label and an iteration tag."""
        if self.features.ndim != 2 or self.features.shape[1] != len(self.feature_names):
            raise ValueError("features must be rows x named feature columns")
        if self.labels.shape != (self.features.shape[0],) or self.iterations.shape != self.labels.shape:
            raise ValueError("labels and iterations must have one entry per row")
        return self

    @classmethod
    def empty(cls, n_levels: int = 6) -> AggDataset:
        """A dataset with no rows."""
        names = feature_names(n_levels)
        return cls(
            features=np.zeros((0, len(names))),
            labels=np.zeros(0, dtype=np.int64),
            iterations=np.zeros(0, dtype=np.int64),
            feature_names=names,
        )

    @property
    def n_rows(self) -> int:
        """The number of rows."""
        return int(self.features.shape[0])

    def append(self, observations: list[Observation], labels: list[int], iteration: int) -> AggDataset:
        """A new dataset with the given rows added at the end."""
        if len(observations) != len(labels):
            raise DistillError(f"iteration {iteration}: {len(observations)} states but {len(labels)} labels")
        if not observations:
            return self
        rows = np.vstack([observation.as_vector() for observation in observations])
        return AggDataset(
            features=np.vstack([self.features, rows]),
            labels=np.concatenate([self.labels, np.asarray(labels, dtype=np.int64)]),
            iterations=np.concatenate([self.iterations, np.full(len(labels), iteration, dtype=np.int64)]),
            feature_names=self.feature_names,
        )

    def iteration_sizes(self) -> dict[int, int]:
        """Rows collected per iteration."""
        values, counts = np.unique(self.iterations, return_counts=True)
        return {int(value): int(count) for value, count in zip(values, counts, strict=True)}

    def to_raw(self) -> RawDataset:
        """The rows as a `RawDataset` for binarization."""
        return RawDataset(features=self.features, labels=self.labels, feature_names=list(self.feature_names))

    def save_csv(self, file_path: str | Path) -> None:
        """Write one CSV row per state: the raw features, the label and the iteration tag."""
        with open(file_path, "w", encoding="utf-8", newline="") as file:
            writer = csv.writer(file, lineterminator="\n")
            writer.writerow([*self.feature_names, LABEL_COLUMN, ITERATION_COLUMN])
            for row, label, iteration in zip(self.features, self.labels, self.iterations, strict=True):
                writer.writerow([*(repr(float(value)) for value in row), int(label), int(iteration)])

    @classmethod
    def load_csv(cls, file_path: str | Path) -> AggDataset:
        """Read `save_csv` output."""
        with open(file_path, encoding="utf-8", newline="") as file:
            reader = csv.reader(file)
            header = next(reader)
            if header[-2:] != [LABEL_COLUMN, ITERATION_COLUMN]:
                raise DistillError(f"{file_path}: expected the last columns to be {LABEL_COLUMN},{ITERATION_COLUMN}")
            records = list(reader)

        names = header[:-2]
        if not records:
            features = np.zeros((0, len(names)))
        else:
            features = np.array([[float(value) for value in record[:-2]] for record in records])
        return cls(
            features=features,
            labels=np.array([int(record[-2]) for record in records], dtype=np.int64),
            iterations=np.array([int(record[-1]) for record in records], dtype=np.int64),
            feature_names=names,
        )
