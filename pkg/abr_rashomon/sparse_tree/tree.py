"""Decision trees over binary columns, their objective and canonical identity."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from abr_rashomon.errors import MalformedTreeError


class LeafNode(BaseModel):
    """A leaf predicting a ladder index."""

    model_config = ConfigDict(frozen=True)

    label: int = Field(ge=0)


class SplitNode(BaseModel):
    """An internal node. Rows whose bit in `column` is 1 (raw value < threshold) go left."""

    model_config = ConfigDict(frozen=True)

    column: int = Field(ge=0)
    left: TreeNode
    right: TreeNode


TreeNode = LeafNode | SplitNode

SplitNode.model_rebuild()


class SparseObjective(BaseModel):
    """Misclassification rate plus a per-leaf penalty."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lambda_: float = Field(alias="lambda", gt=0)
    loss_mis: float = Field(ge=0, le=1)
    leaves: int = Field(ge=1)

    @property
    def obj(self) -> float:
        """`loss_mis + lambda * leaves`."""
        return self.loss_mis + self.lambda_ * self.leaves


class DecisionTree(BaseModel):
    """A binary classification tree plus, once scored, its objective."""

    model_config = ConfigDict(frozen=True)

    root: TreeNode
    objective: SparseObjective | None = None

    @property
    def depth(self) -> int:
        """Edges on the longest root-to-leaf path; a single leaf has depth 0."""
        return node_depth(self.root)

    @property
    def n_leaves(self) -> int:
        """The number of leaves."""
        return count_leaves(self.root)

    @property
    def key(self) -> str:
        """The canonical key of this tree."""
        return canonicalize(self)


def leaf(label: int) -> DecisionTree:
    """A single-leaf tree."""
    return DecisionTree(root=LeafNode(label=label))


def node_depth(node: TreeNode) -> int:
    """Depth of the subtree rooted at `node`."""
    if isinstance(node, LeafNode):
        return 0
    return 1 + max(node_depth(node.left), node_depth(node.right))


def count_leaves(node: TreeNode) -> int:
    """Leaves under `node`."""
    if isinstance(node, LeafNode):
        return 1
    return count_leaves(node.left) + count_leaves(node.right)


def iter_splits(node: TreeNode) -> list[tuple[SplitNode, SplitNode | None]]:
    """Every internal node in preorder, paired with its parent (None for the root)."""
    found: list[tuple[SplitNode, SplitNode | None]] = []

    def walk(current: TreeNode, parent: SplitNode | None) -> None:
        if isinstance(current, SplitNode):
            found.append((current, parent))
            walk(current.left, current)
            walk(current.right, current)

    walk(node, None)
    return found


def node_key(node: TreeNode) -> str:
    """Preorder tokens: `s<column>` for splits, `l<label>` for leaves, left child before right."""
    if isinstance(node, LeafNode):
        return f"l{node.label}"
    if not isinstance(node, SplitNode):
        raise MalformedTreeError(f"unexpected node {node!r}")
    return f"s{node.column} {node_key(node.left)} {node_key(node.right)}"


def canonical_node(node: TreeNode) -> TreeNode:
    """Collapse every split whose two (canonicalised) subtrees are identical."""
    if isinstance(node, LeafNode):
        return node
    left = canonical_node(node.left)
    right = canonical_node(node.right)
    if node_key(left) == node_key(right):
        return left
    if left is node.left and right is node.right:
        return node
    return SplitNode(column=node.column, left=left, right=right)


def canonical_tree(tree: DecisionTree) -> DecisionTree:
    """The canonical form of `tree`; the objective is dropped when the structure changes."""
    root = canonical_node(tree.root)
    if root is tree.root:
        return tree
    return DecisionTree(root=root)


def canonicalize(tree: DecisionTree) -> str:
    """The canonical key: equal for logically equal trees, distinct otherwise."""
    return node_key(canonical_node(tree.root))


def validate_columns(tree: DecisionTree, n_columns: int) -> None:
    """Check every split references a column in `[0, n_columns)`.

    Raises:
        MalformedTreeError: On an out-of-range column.
    """
    for split, _ in iter_splits(tree.root):
        if split.column >= n_columns:
            raise MalformedTreeError(f"split on column {split.column} but only {n_columns} columns exist")


def predict_bits(node: TreeNode, bits: np.ndarray) -> int:
    """Walk the tree for one row of bits."""
    while isinstance(node, SplitNode):
        node = node.left if bits[node.column] else node.right
    return node.label


def predict_matrix(tree: DecisionTree, matrix: np.ndarray) -> np.ndarray:
    """Predicted label for every row of a bit matrix."""
    out = np.empty(matrix.shape[0], dtype=np.int64)

    def fill(node: TreeNode, rows: np.ndarray) -> None:
        if isinstance(node, LeafNode):
            out[rows] = node.label
            return
        goes_left = matrix[rows, node.column]
        fill(node.left, rows[goes_left])
        fill(node.right, rows[~goes_left])

    fill(tree.root, np.arange(matrix.shape[0]))
    return out


def exact_objective(misclassified: int, n_rows: int, leaves: int, lam: float | Fraction) -> Fraction:
    """The objective as an exact fraction."""
    return Fraction(misclassified, n_rows) + Fraction(str(lam)) * leaves


def score_tree(tree: DecisionTree, matrix: np.ndarray, labels: np.ndarray, lam: float) -> DecisionTree:
    """Attach the objective of `tree` on (matrix, labels) with per-leaf penalty `lam`."""
    predicted = predict_matrix(tree, matrix)
    misclassified = int(np.count_nonzero(predicted != labels))
    objective = SparseObjective(lambda_=lam, loss_mis=misclassified / len(labels), leaves=tree.n_leaves)
    return tree.model_copy(update={"objective": objective})
