"""The on-disk tree file: a flat node list plus a binarizer reference and the tree's objective.

Node 0 is the root. A split node names its column either by binary column id (`col`) or by raw feature name and
threshold (`feature`, `threshold`); both may be present, in which case they must agree. A leaf node carries `leaf`,
a ladder index.
"""

from __future__ import annotations

import math
from pathlib import Path

from pydantic import BaseModel, Field, model_validator

from abr_rashomon.errors import MalformedTreeError
from abr_rashomon.features.binarize import Binarizer
from abr_rashomon.sparse_tree.tree import DecisionTree, LeafNode, SparseObjective, SplitNode, TreeNode


class TreeFileNode(BaseModel):
    """One entry of a tree file's node list."""

    col: int | None = Field(default=None, ge=0)
    feature: str | None = None
    threshold: float | None = None
    left: int | None = Field(default=None, ge=0)
    """Index of the child taken when `feature < threshold` (bit 1)."""
    right: int | None = Field(default=None, ge=0)
    leaf: int | None = Field(default=None, ge=0)

    @model_validator(mode="after")
    def validate_kind(self) -> TreeFileNode:
        """A node is either a leaf or a fully specified split, never both."""
        is_split = self.left is not None or self.right is not None
        if self.leaf is not None:
            if is_split or self.col is not None or self.feature is not None:
                raise ValueError("a leaf node must not carry split fields")
            return self
        if self.left is None or self.right is None:
            raise ValueError("a split node needs both left and right")
        if self.col is None and (self.feature is None or self.threshold is None):
            raise ValueError("a split node needs col, or feature and threshold")
        if self.threshold is not None and not math.isfinite(self.threshold):
            raise ValueError(f"threshold must be finite, got {self.threshold}")
        return self

    @property
    def is_leaf(self) -> bool:
        """Whether this node is a leaf."""
        return self.leaf is not None


class TreeFile(BaseModel):
    """A decision tree in its persisted form."""

    nodes: list[TreeFileNode] = Field(min_length=1)
    binarizer_ref: str | None = None
    """Path of the binarizer JSON the column ids refer to, relative to the tree file."""
    objective: SparseObjective | None = None

    def used_pairs(self, binarizer: Binarizer | None = None) -> list[tuple[str, float]]:
        """(raw feature name, threshold) of every split, in node order."""
        pairs = []
        for node in self.nodes:
            if node.is_leaf:
                continue
            if node.feature is not None and node.threshold is not None:
                pairs.append((node.feature, node.threshold))
            elif binarizer is not None and node.col is not None and node.col < binarizer.n_columns:
                column = binarizer.columns[node.col]
                pairs.append((column.feature_name, column.threshold))
            else:
                raise MalformedTreeError(f"cannot resolve column {node.col} without a binarizer")
        return pairs


def tree_to_file(
    tree: DecisionTree,
    binarizer: Binarizer | None = None,
    binarizer_ref: str | None = None,
) -> TreeFile:
    """Flatten a tree in preorder. With a binarizer, splits also carry their raw feature and threshold."""
    nodes: list[TreeFileNode] = []

    def emit(node: TreeNode) -> int:
        index = len(nodes)
        if isinstance(node, LeafNode):
            nodes.append(TreeFileNode(leaf=node.label))
            return index
        nodes.append(TreeFileNode(leaf=0))
        left = emit(node.left)
        right = emit(node.right)
        feature = threshold = None
        if binarizer is not None:
            if node.column >= binarizer.n_columns:
                raise MalformedTreeError(f"split on unknown column {node.column}")
            feature = binarizer.columns[node.column].feature_name
            threshold = binarizer.columns[node.column].threshold
        nodes[index] = TreeFileNode(col=node.column, feature=feature, threshold=threshold, left=left, right=right)
        return index

    emit(tree.root)
    return TreeFile(nodes=nodes, binarizer_ref=binarizer_ref, objective=tree.objective)


def _resolve_column(node: TreeFileNode, index: int, binarizer: Binarizer | None) -> int:
    if node.feature is not None and node.threshold is not None and binarizer is not None:
        if node.feature not in binarizer.feature_names:
            raise MalformedTreeError(f"node {index}: unknown feature {node.feature!r}")
        column = binarizer.column_index(binarizer.feature_names.index(node.feature), node.threshold)
        if column is None:
            raise MalformedTreeError(f"node {index}: no column for {node.feature} < {node.threshold!r}")
        if node.col is not None and node.col != column:
            raise MalformedTreeError(
                f"node {index}: col {node.col} disagrees with {node.feature} < {node.threshold!r}",
            )
        return column
    if node.col is None:
        raise MalformedTreeError(f"node {index}: feature/threshold addressing needs a binarizer")
    if binarizer is not None and node.col >= binarizer.n_columns:
        raise MalformedTreeError(f"node {index}: column {node.col} out of range")
    return node.col


def file_to_tree(tree_file: TreeFile, binarizer: Binarizer | None = None) -> DecisionTree:
    """Rebuild a tree, checking that the node list forms a single tree rooted at node 0.

    Raises:
        MalformedTreeError: On dangling or shared child references, cycles, unreachable nodes or unknown columns.
    """
    visited: set[int] = set()

    def build(index: int, depth: int) -> TreeNode:
        if index >= len(tree_file.nodes):
            raise MalformedTreeError(f"child reference {index} is out of range")
        if index in visited:
            raise MalformedTreeError(f"node {index} is referenced more than once")
        if depth > len(tree_file.nodes):
            raise MalformedTreeError("cycle in node references")
        visited.add(index)
        node = tree_file.nodes[index]
        if node.leaf is not None:
            return LeafNode(label=node.leaf)
        assert node.left is not None and node.right is not None
        column = _resolve_column(node, index, binarizer)
        return SplitNode(column=column, left=build(node.left, depth + 1), right=build(node.right, depth + 1))

    root = build(0, 0)
    if len(visited) != len(tree_file.nodes):
        unreachable = sorted(set(range(len(tree_file.nodes))) - visited)
        raise MalformedTreeError(f"unreachable nodes {unreachable}")
    return DecisionTree(root=root, objective=tree_file.objective)


def rebind_thresholds(tree_file: TreeFile, binarizer: Binarizer) -> tuple[DecisionTree, Binarizer]:
    """Build a fresh binarizer from exactly the (feature, threshold) pairs the file uses and map the tree onto it.

    Used for trees whose thresholds were edited by hand or by an LLM and no longer match any existing column.
    """
    names = binarizer.feature_names
    pairs = []
    for name, threshold in tree_file.used_pairs(binarizer):
        if name not in names:
            raise MalformedTreeError(f"unknown feature {name!r}")
        pairs.append((names.index(name), float(threshold)))
    rebound = Binarizer.from_pairs(pairs, names)

    used = iter(pairs)
    nodes = []
    for node in tree_file.nodes:
        if node.is_leaf:
            nodes.append(node)
            continue
        feature_index, threshold = next(used)
        nodes.append(
            TreeFileNode(feature=names[feature_index], threshold=threshold, left=node.left, right=node.right),
        )
    return file_to_tree(TreeFile(nodes=nodes, binarizer_ref=tree_file.binarizer_ref), rebound), rebound


def save_tree(
    tree: DecisionTree,
    file_path: str | Path,
    binarizer: Binarizer | None = None,
    binarizer_ref: str | None = None,
) -> None:
    """Write `tree` as a JSON tree file."""
    tree_file = tree_to_file(tree, binarizer, binarizer_ref)
    Path(file_path).write_text(tree_file.model_dump_json(indent=2, by_alias=True, exclude_none=True), encoding="utf-8")


def load_tree_file(file_path: str | Path) -> TreeFile:
    """Read a tree file without resolving it."""
    text = Path(file_path).read_text(encoding="utf-8")
    try:
        return TreeFile.model_validate_json(text)
    except ValueError as e:
        raise MalformedTreeError(f"{file_path}: {e}") from e


def load_tree(file_path: str | Path, binarizer: Binarizer | None = None) -> tuple[DecisionTree, Binarizer | None]:
    """Read and resolve a tree file.

    When no binarizer is passed and the file names one, it is loaded relative to the tree file.

    Returns:
        tuple[DecisionTree, Binarizer | None]: The tree and the binarizer its column ids refer to.
    """
    file_path = Path(file_path)
    tree_file = load_tree_file(file_path)
    if binarizer is None and tree_file.binarizer_ref is not None:
        binarizer = Binarizer.load(file_path.parent / tree_file.binarizer_ref)
    return file_to_tree(tree_file, binarizer), binarizer
