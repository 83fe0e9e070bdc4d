"""Executing a distilled decision tree as an ABR policy."""

from __future__ import annotations

from pathlib import Path

from typing_extensions import override

from abr_rashomon.errors import MalformedTreeError
from abr_rashomon.features.binarize import Binarizer
from abr_rashomon.media.manifest import VideoManifest
from abr_rashomon.policies.base import AbrPolicy
from abr_rashomon.sim.player import Observation
from abr_rashomon.sparse_tree.tree import DecisionTree, LeafNode, SplitNode, validate_columns
from abr_rashomon.sparse_tree.tree_file import load_tree


def tree_decide(tree: DecisionTree, observation: Observation, binarizer: Binarizer) -> int:
    """Walk from the root, going left whenever the split's raw feature is below its threshold.

    Raises:
        MalformedTreeError: If a split references a column the binarizer does not have.
    """
    features = observation.as_vector()
    node = tree.root
    while isinstance(node, SplitNode):
        if node.column >= binarizer.n_columns:
            raise MalformedTreeError(f"split on column {node.column} but the binarizer has {binarizer.n_columns}")
        node = node.left if binarizer.bit(node.column, features) else node.right
    if not isinstance(node, LeafNode):
        raise MalformedTreeError(f"dangling child {node!r}")
    return node.label


class TreePolicy(AbrPolicy):
    """A decision tree plus the binarizer its column ids refer to."""

    def __init__(self, tree: DecisionTree, binarizer: Binarizer, name: str = "tree") -> None:
        """Initialise the policy, checking every split column exists."""
        validate_columns(tree, binarizer.n_columns)
        self.tree = tree
        self.binarizer = binarizer
        self.name = name

    @classmethod
    def from_file(cls, file_path: str | Path, binarizer: Binarizer | None = None) -> TreePolicy:
        """Load a tree file; the binarizer defaults to the one the file references."""
        tree, resolved = load_tree(file_path, binarizer)
        if resolved is None:
            raise MalformedTreeError(f"{file_path} names no binarizer and none was given")
        return cls(tree, resolved, name=f"tree:{file_path}")

    @override
    def decide(self, observation: Observation, manifest: VideoManifest) -> int:
        return tree_decide(self.tree, observation, self.binarizer)
