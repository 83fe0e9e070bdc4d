"""Greedy top-down Gini trees for the interim students of the teacher-student loop."""

from __future__ import annotations

import numpy as np

from abr_rashomon.features.binarize import BinDataset
from abr_rashomon.sparse_tree.tree import DecisionTree, LeafNode, SplitNode, TreeNode, canonical_tree

_TOLERANCE = 1e-12


def _impurity_mass(counts: np.ndarray) -> np.ndarray:
    """`n * gini` for each row of class counts (0 for empty rows)."""
    totals = counts.sum(axis=-1)
    squares = (counts.astype(np.float64) ** 2).sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        mass = np.where(totals > 0, totals - squares / np.maximum(totals, 1), 0.0)
    return mass


class _GreedyBuilder:
    def __init__(self, data: BinDataset, max_depth: int) -> None:
        self.matrix = data.matrix
        self.as_float = data.matrix.astype(np.float64)
        self.labels = data.labels
        self.n_classes = int(data.labels.max()) + 1
        self.onehot = np.eye(self.n_classes)[data.labels]
        self.max_depth = max_depth

    def _child_masses(self, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-column impurity mass after splitting `rows`, plus which splits are non-degenerate."""
        counts_left = self.as_float[rows].T @ self.onehot[rows]
        counts_total = self.onehot[rows].sum(axis=0)
        counts_right = counts_total - counts_left
        n_left = counts_left.sum(axis=1)
        valid = (n_left > 0) & (n_left < len(rows))
        return _impurity_mass(counts_left), _impurity_mass(counts_right), valid

    def _best_single(self, rows: np.ndarray) -> float:
        """Lowest impurity mass reachable from `rows` with at most one more split."""
        own = float(_impurity_mass(self.onehot[rows].sum(axis=0)))
        if own <= _TOLERANCE or len(rows) < 2:
            return own
        left, right, valid = self._child_masses(rows)
        if not valid.any():
            return own
        return min(own, float((left + right)[valid].min()))

    def _choose(self, rows: np.ndarray, depth: int) -> int | None:
        parent = float(_impurity_mass(self.onehot[rows].sum(axis=0)))
        if parent <= _TOLERANCE:
            return None
        left, right, valid = self._child_masses(rows)
        if not valid.any():
            return None

        children = np.where(valid, left + right, np.inf)
        best = int(np.argmin(children))
        if children[best] < parent - _TOLERANCE:
            return best

        if depth + 2 > self.max_depth:
            return None
        # no single split helps: look one level further down
        lookahead = np.full(children.shape, np.inf)
        for column in np.flatnonzero(valid):
            goes_left = self.matrix[rows, column]
            lookahead[column] = self._best_single(rows[goes_left]) + self._best_single(rows[~goes_left])
        best = int(np.argmin(lookahead))
        if lookahead[best] < parent - _TOLERANCE:
            return best
        return None

    def build(self, rows: np.ndarray, depth: int) -> TreeNode:
        label = int(np.argmax(np.bincount(self.labels[rows], minlength=self.n_classes)))
        if depth >= self.max_depth:
            return LeafNode(label=label)
        column = self._choose(rows, depth)
        if column is None:
            return LeafNode(label=label)
        goes_left = self.matrix[rows, column]
        return SplitNode(
            column=column,
            left=self.build(rows[goes_left], depth + 1),
            right=self.build(rows[~goes_left], depth + 1),
        )


def train_greedy_tree(data: BinDataset, max_depth: int) -> DecisionTree:
    """Grow a Gini tree top-down to at most `max_depth`.

    A node splits on the column with the lowest child impurity, provided impurity strictly decreases; ties go to
    the lowest column id. When no single split helps, a split whose children's best follow-up splits together
    lower the impurity is taken instead, which is what lets XOR-like targets be learned. Leaves predict the
    majority label, ties going to the lowest label. The result is canonical.
    """
    if data.n_rows == 0:
        raise ValueError("cannot train a tree on an empty dataset")
    builder = _GreedyBuilder(data, max_depth)
    root = builder.build(np.arange(data.n_rows), 0)
    return canonical_tree(DecisionTree(root=root))
