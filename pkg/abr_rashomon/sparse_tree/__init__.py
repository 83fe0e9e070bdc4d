"""Optimal sparse decision trees and complete Rashomon set enumeration."""

from abr_rashomon.sparse_tree.rashomon import (
    RashomonEntry,
    RashomonSet,
    enumerate_rashomon,
    feature_utilisation,
    load_rashomon_set,
    save_rashomon_set,
    select_instances,
    solve_optimal,
)
from abr_rashomon.sparse_tree.tree import DecisionTree, LeafNode, SparseObjective, SplitNode, canonicalize

__all__ = [
    "DecisionTree",
    "LeafNode",
    "RashomonEntry",
    "RashomonSet",
    "SparseObjective",
    "SplitNode",
    "canonicalize",
    "enumerate_rashomon",
    "feature_utilisation",
    "load_rashomon_set",
    "save_rashomon_set",
    "select_instances",
    "solve_optimal",
]
