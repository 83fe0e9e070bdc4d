"""A small gradient-boosted tree ensemble used as the reference learner for column elimination.

Multiclass problems are handled one-vs-rest with logistic loss. Split gain follows the usual second-order form
`G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)`. Per-column importance is the total gain of the splits
that use that column, normalised to sum to 1.
"""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from abr_rashomon.features.binarize import BinDataset


class EnsembleConfig(BaseModel):
    """Boosting hyper-parameters."""

    rounds: int = Field(default=20, ge=1)
    max_depth: int = Field(default=3, ge=1)
    learning_rate: float = Field(default=0.3, gt=0)
    reg_lambda: float = Field(default=1.0, ge=0)
    """L2 regularisation on leaf weights."""
    min_split_gain: float = Field(default=1e-9, ge=0)
    subsample: float = Field(default=1.0, gt=0, le=1)
    """Row fraction drawn (with the seeded RNG) for each tree."""
    seed: int = 0


class _BoostNode:
    """A node of one boosted regression tree; leaves have `column is None`."""

    __slots__ = ("weight", "column", "left", "right")

    def __init__(
        self,
        weight: float = 0.0,
        column: int | None = None,
        left: _BoostNode | None = None,
        right: _BoostNode | None = None,
    ) -> None:
        self.weight = weight
        self.column = column
        self.left = left
        self.right = right


def _predict_node(node: _BoostNode, matrix: np.ndarray, rows: np.ndarray, out: np.ndarray) -> None:
    if node.column is None or node.left is None or node.right is None:
        out[rows] += node.weight
        return
    goes_left = matrix[rows, node.column]
    _predict_node(node.left, matrix, rows[goes_left], out)
    _predict_node(node.right, matrix, rows[~goes_left], out)


class EnsembleModel(BaseModel):
    """A trained ensemble: per-class boosted trees, column importances and training accuracy."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    classes: list[int]
    trees: list[list[_BoostNode]]
    """`trees[k]` holds the boosted trees scoring `classes[k]`."""
    importance: np.ndarray
    accuracy: float

    def decision_scores(self, matrix: np.ndarray) -> np.ndarray:
        """Rows x classes raw scores."""
        matrix = np.asarray(matrix, dtype=bool)
        scores = np.zeros((matrix.shape[0], len(self.classes)))
        rows = np.arange(matrix.shape[0])
        for class_position, class_trees in enumerate(self.trees):
            column = np.zeros(matrix.shape[0])
            for tree in class_trees:
                _predict_node(tree, matrix, rows, column)
            scores[:, class_position] = column
        return scores

    def predict(self, matrix: np.ndarray) -> np.ndarray:
        """Predicted labels; score ties go to the lower class."""
        if len(self.classes) == 1:
            return np.full(np.asarray(matrix).shape[0], self.classes[0], dtype=np.int64)
        return np.asarray(self.classes, dtype=np.int64)[np.argmax(self.decision_scores(matrix), axis=1)]


ReferenceLearner = Callable[[BinDataset], EnsembleModel]
"""Anything that fits a `BinDataset` and reports accuracy and column importance."""


class _TreeBuilder:
    def __init__(self, matrix: np.ndarray, cfg: EnsembleConfig, importance: np.ndarray) -> None:
        self.matrix = matrix
        self.as_float = matrix.astype(np.float64)
        self.cfg = cfg
        self.importance = importance

    def build(self, rows: np.ndarray, gradient: np.ndarray, hessian: np.ndarray, depth: int) -> _BoostNode:
        g_total = float(gradient[rows].sum())
        h_total = float(hessian[rows].sum())
        leaf = _BoostNode(weight=-self.cfg.learning_rate * g_total / (h_total + self.cfg.reg_lambda))
        if depth >= self.cfg.max_depth or len(rows) < 2:
            return leaf

        sub = self.as_float[rows]
        g_left = gradient[rows] @ sub
        h_left = hessian[rows] @ sub
        count_left = sub.sum(axis=0)
        g_right = g_total - g_left
        h_right = h_total - h_left

        lam = self.cfg.reg_lambda
        gain = g_left**2 / (h_left + lam) + g_right**2 / (h_right + lam) - g_total**2 / (h_total + lam)
        gain[(count_left == 0) | (count_left == len(rows))] = -np.inf

        best = int(np.argmax(gain))
        if not gain[best] > self.cfg.min_split_gain:
            return leaf

        self.importance[best] += gain[best]
        goes_left = self.matrix[rows, best]
        return _BoostNode(
            column=best,
            left=self.build(rows[goes_left], gradient, hessian, depth + 1),
            right=self.build(rows[~goes_left], gradient, hessian, depth + 1),
        )


def train_ensemble(data: BinDataset, cfg: EnsembleConfig | None = None) -> EnsembleModel:
    """Fit one-vs-rest boosted trees and report training accuracy and normalised gain importance.

    Single-class data yields a trivial model with accuracy 1.0 and all-zero importances.
    """
    cfg = cfg or EnsembleConfig()
    classes = sorted(int(label) for label in np.unique(data.labels))
    importance = np.zeros(data.n_columns)

    if len(classes) < 2 or data.n_columns == 0:
        majority = np.bincount(data.labels).argmax() if data.n_rows else 0
        accuracy = float(np.mean(data.labels == majority)) if data.n_rows else 1.0
        return EnsembleModel(classes=classes or [0], trees=[[]], importance=importance, accuracy=accuracy)

    rng = np.random.default_rng(cfg.seed)
    builder = _TreeBuilder(data.matrix, cfg, importance)
    all_rows = np.arange(data.n_rows)
    scores = np.zeros((data.n_rows, len(classes)))
    trees: list[list[_BoostNode]] = [[] for _ in classes]

    for _ in range(cfg.rounds):
        rows = all_rows
        if cfg.subsample < 1.0:
            rows = np.sort(rng.choice(all_rows, size=max(1, int(cfg.subsample * data.n_rows)), replace=False))
        for class_position, label in enumerate(classes):
            target = (data.labels == label).astype(np.float64)
            probability = 1.0 / (1.0 + np.exp(-scores[:, class_position]))
            gradient = probability - target
            hessian = probability * (1.0 - probability)
            tree = builder.build(rows, gradient, hessian, depth=0)
            trees[class_position].append(tree)
            _predict_node(tree, data.matrix, all_rows, scores[:, class_position])

    predicted = np.asarray(classes, dtype=np.int64)[np.argmax(scores, axis=1)]
    accuracy = float(np.mean(predicted == data.labels))

    total = importance.sum()
    if total > 0:
        importance = importance / total

    logger.debug(f"Ensemble on {data.n_rows}x{data.n_columns}: accuracy {accuracy:.4f}")
    return EnsembleModel(classes=classes, trees=trees, importance=importance, accuracy=accuracy)
