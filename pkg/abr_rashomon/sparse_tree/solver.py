"""Branch-and-bound search for optimal sparse trees over memoized data-subset subproblems.

Training rows with identical bits are merged into one point that carries a count per label. A subproblem's rows
are stored as a Python int bitset over points (bit i is point i). The depth budget left is the other half of the
subproblem key. A tree's objective is the misclassification rate plus lambda per leaf. It is kept in exact
integer units of `1 / (n_rows * q)`, where `lambda = p / q`, so comparisons near a threshold are never affected
by float rounding.

Hypothesis space: every split must send at least one training row each way, and every leaf predicts the majority
label of its rows (the lowest label on ties).

Bounds: a subproblem that may still split costs at least `min(leaf, equivalent + 2 leaves)`, where `equivalent`
counts the rows that disagree with the majority label of their own point. No tree can separate those. Depth-one
subproblems are solved in one vectorised pass over all columns. The root search starts from the cost of a greedy
tree.
"""

from __future__ import annotations

import threading
from fractions import Fraction

import numpy as np
from loguru import logger

from abr_rashomon.errors import RashomonSetTooLarge, SolverInputError
from abr_rashomon.features.binarize import BinDataset
from abr_rashomon.sparse_tree.tree import LeafNode, SplitNode, TreeNode

SubproblemKey = tuple[int, int]
"""(support bitset, remaining depth budget)."""

Candidate = tuple[int, str, TreeNode]
"""(scaled cost, canonical key, root node) of one enumerated tree."""

SupportStats = tuple[int, int, int]
"""(misclassified rows of the majority leaf, its label, rows no tree can classify correctly)."""


def bitset_from_bools(values: np.ndarray) -> int:
    """Pack a boolean vector into an int whose bit i is `values[i]`."""
    packed = np.packbits(np.asarray(values, dtype=bool), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


class Subproblem:
    """Bounds and best-known solution for one (support, depth budget) pair."""

    __slots__ = ("support", "depth", "leaf_cost", "leaf_label", "lower", "upper", "best_column", "exact")

    def __init__(self, support: int, depth: int, leaf_cost: int, leaf_label: int, lower: int) -> None:
        """Initialise a subproblem whose only known solution is its majority leaf."""
        self.support = support
        self.depth = depth
        self.leaf_cost = leaf_cost
        self.leaf_label = leaf_label
        self.lower = lower
        self.upper = leaf_cost
        self.best_column: int | None = None
        self.exact = False

    @property
    def key(self) -> SubproblemKey:
        """The dependency-graph key."""
        return self.support, self.depth


class DependencyGraph:
    """Memo of subproblems plus the child links explored from each one.

    Insertion is idempotent: inserting a key that already exists returns the stored subproblem.
    """

    def __init__(self) -> None:
        """Initialise an empty graph."""
        self._nodes: dict[SubproblemKey, Subproblem] = {}
        self._children: dict[SubproblemKey, dict[int, tuple[SubproblemKey, SubproblemKey]]] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._nodes)

    def get(self, key: SubproblemKey) -> Subproblem | None:
        """The stored subproblem for `key`, if any."""
        return self._nodes.get(key)

    def insert(self, subproblem: Subproblem) -> Subproblem:
        """Store `subproblem` unless its key is already present; return the stored one."""
        with self._lock:
            return self._nodes.setdefault(subproblem.key, subproblem)

    def link(self, parent: SubproblemKey, column: int, left: SubproblemKey, right: SubproblemKey) -> None:
        """Record that splitting `parent` on `column` yields `left` (bit 1) and `right` (bit 0)."""
        with self._lock:
            self._children.setdefault(parent, {})[column] = (left, right)

    def children(self, parent: SubproblemKey) -> dict[int, tuple[SubproblemKey, SubproblemKey]]:
        """Explored child links of `parent`, keyed by split column."""
        return dict(self._children.get(parent, {}))


class SparseTreeSolver:
    """Exact optimisation and Rashomon enumeration for one dataset, lambda and depth limit."""

    def __init__(self, data: BinDataset, lam: float, max_depth: int, *, rashomon_cap: int = 1_000_000) -> None:
        """Merge identical rows into points and prepare bitsets and exact cost units.

        Raises:
            SolverInputError: On empty data, lambda <= 0 or max_depth < 1.
        """
        if data.n_rows == 0:
            raise SolverInputError("cannot solve on an empty dataset")
        if not lam > 0:
            raise SolverInputError(f"lambda must be > 0, got {lam}")
        if max_depth < 1:
            raise SolverInputError(f"max depth must be >= 1, got {max_depth}")

        self.data = data
        self.n_rows = data.n_rows
        self.max_depth = max_depth
        self.rashomon_cap = rashomon_cap
        self.lam = Fraction(str(lam))
        self.mis_unit = self.lam.denominator
        """Scaled cost of one misclassified row."""
        self.leaf_unit = self.lam.numerator * self.n_rows
        """Scaled cost of one leaf."""

        self.labels = sorted(int(label) for label in np.unique(data.labels))
        matrix = np.asarray(data.matrix, dtype=bool)
        if matrix.shape[1] == 0:
            points, inverse = np.zeros((1, 0), dtype=bool), np.zeros(self.n_rows, dtype=np.intp)
        else:
            points, inverse = np.unique(matrix, axis=0, return_inverse=True)
        label_index = np.searchsorted(np.asarray(self.labels), data.labels)
        counts = np.zeros((len(points), len(self.labels)), dtype=np.int64)
        np.add.at(counts, (np.asarray(inverse).reshape(-1), label_index), 1)

        self.n_points = len(points)
        self._point_bytes = (self.n_points + 7) // 8
        self._points = points.astype(np.float64)
        self._counts = counts.astype(np.float64)
        self._counts_int = counts
        self._point_impurity = counts.sum(axis=1) - counts.max(axis=1)

        self.full_support = (1 << self.n_points) - 1
        self.column_masks = [bitset_from_bools(points[:, column]) for column in range(points.shape[1])]

        self.graph = DependencyGraph()
        self._stats: dict[int, SupportStats] = {}
        self._enumerated: dict[SubproblemKey, tuple[int, list[Candidate]]] = {}
        self._min_keys: dict[SubproblemKey, Candidate] = {}
        self.expansions = 0

    # exact arithmetic helpers

    def cost_of(self, misclassified: int, leaves: int) -> int:
        """Scaled objective of a tree with the given counts."""
        return misclassified * self.mis_unit + leaves * self.leaf_unit

    def to_fraction(self, cost: int) -> Fraction:
        """Convert a scaled cost back to the objective value."""
        return Fraction(cost, self.n_rows * self.mis_unit)

    def split_counts(self, cost: int, leaves: int) -> int:
        """Misclassified rows of a tree with scaled `cost` and `leaves` leaves."""
        return (cost - leaves * self.leaf_unit) // self.mis_unit

    # support statistics and bounds

    def _mask(self, support: int) -> np.ndarray:
        raw = np.frombuffer(support.to_bytes(self._point_bytes, "little"), dtype=np.uint8)
        return np.unpackbits(raw, count=self.n_points, bitorder="little").astype(bool)

    def support_stats(self, support: int) -> SupportStats:
        """Majority-leaf misclassifications, the majority label and the equivalent-points floor of `support`."""
        cached = self._stats.get(support)
        if cached is None:
            mask = self._mask(support)
            totals = self._counts_int[mask].sum(axis=0)
            best = int(np.argmax(totals))
            cached = (
                int(totals.sum()) - int(totals[best]),
                self.labels[best],
                int(self._point_impurity[mask].sum()),
            )
            self._stats[support] = cached
        return cached

    def _majority(self, support: int) -> tuple[int, int]:
        """(misclassified rows, label) of the best single leaf on `support`."""
        misclassified, label, _ = self.support_stats(support)
        return misclassified, label

    def lower_bound(self, support: int, depth: int) -> int:
        """A scaled cost no tree of depth <= `depth` on `support` can beat."""
        misclassified, _, equivalent = self.support_stats(support)
        leaf_cost = self.cost_of(misclassified, 1)
        if depth == 0:
            return leaf_cost
        return min(leaf_cost, self.cost_of(equivalent, 2))

    def _subproblem(self, support: int, depth: int) -> Subproblem:
        existing = self.graph.get((support, depth))
        if existing is not None:
            return existing
        misclassified, label, _ = self.support_stats(support)
        leaf_cost = self.cost_of(misclassified, 1)
        return self.graph.insert(Subproblem(support, depth, leaf_cost, label, self.lower_bound(support, depth)))

    def _lower(self, support: int, depth: int) -> int:
        existing = self.graph.get((support, depth))
        if existing is not None:
            return existing.upper if existing.exact else existing.lower
        return self.lower_bound(support, depth)

    def _splits(self, support: int) -> list[tuple[int, int, int]]:
        """Non-degenerate (column, left, right) splits of `support`, in column order."""
        found = []
        for column, mask in enumerate(self.column_masks):
            left = support & mask
            if left and left != support:
                found.append((column, left, support ^ left))
        return found

    def _split_table(self, support: int) -> tuple[np.ndarray, np.ndarray]:
        """Per column: whether the split is non-degenerate, and the misclassifications of its two majority leaves."""
        mask = self._mask(support)
        counts = self._counts[mask]
        left = self._points[mask].T @ counts
        right = counts.sum(axis=0) - left
        left_rows = left.sum(axis=1)
        right_rows = right.sum(axis=1)
        valid = (left_rows > 0) & (right_rows > 0)
        quick = (left_rows - left.max(axis=1, initial=0.0)) + (right_rows - right.max(axis=1, initial=0.0))
        return valid, np.rint(quick).astype(np.int64)

    def greedy_cost(self, support: int, depth: int) -> int:
        """Scaled cost of the tree that always takes the split with the fewest two-leaf misclassifications.

        Any subtree is replaced by a leaf when the leaf is cheaper, so the result bounds the optimum from above.
        """
        misclassified, _, _ = self.support_stats(support)
        leaf_cost = self.cost_of(misclassified, 1)
        if depth == 0 or not self.column_masks:
            return leaf_cost
        valid, quick = self._split_table(support)
        if not valid.any():
            return leaf_cost
        column = int(np.argmin(np.where(valid, quick, np.iinfo(np.int64).max)))
        left = support & self.column_masks[column]
        split_cost = self.greedy_cost(left, depth - 1) + self.greedy_cost(support ^ left, depth - 1)
        return min(leaf_cost, split_cost)

    # optimisation

    def _solve_depth_one(self, subproblem: Subproblem) -> tuple[int, int | None]:
        best, best_column = subproblem.leaf_cost, None
        if not self.column_masks:
            return best, best_column
        valid, quick = self._split_table(subproblem.support)
        if valid.any():
            column = int(np.argmin(np.where(valid, quick, np.iinfo(np.int64).max)))
            split_cost = self.cost_of(int(quick[column]), 2)
            if split_cost < best:
                best, best_column = split_cost, column
        return best, best_column

    def _record(self, subproblem: Subproblem, best: int, best_column: int | None) -> None:
        subproblem.upper = best
        subproblem.lower = best
        subproblem.best_column = best_column
        subproblem.exact = True
        if best_column is not None:
            mask = self.column_masks[best_column]
            self.graph.link(
                subproblem.key,
                best_column,
                (subproblem.support & mask, subproblem.depth - 1),
                (subproblem.support & ~mask, subproblem.depth - 1),
            )

    def solve(self, support: int, depth: int, budget: int) -> int:
        """Optimal scaled cost of (support, depth) if it is below `budget`; otherwise a value >= `budget`.

        A return value below `budget` is exact and the subproblem is marked solved. A value at or above `budget`
        proves the optimum is at least that large.
        """
        subproblem = self._subproblem(support, depth)
        if subproblem.exact:
            return subproblem.upper
        if subproblem.lower >= budget:
            return subproblem.lower

        self.expansions += 1
        if depth == 0 or subproblem.lower == subproblem.leaf_cost:
            self._record(subproblem, subproblem.leaf_cost, None)
            return subproblem.leaf_cost
        if depth == 1:
            best, best_column = self._solve_depth_one(subproblem)
            self._record(subproblem, best, best_column)
            return best

        best = subproblem.leaf_cost
        best_column: int | None = None
        valid, quick = self._split_table(support)
        seen_partitions: set[int] = set()
        candidates = []
        for column in np.flatnonzero(valid).tolist():
            left = support & self.column_masks[column]
            right = support ^ left
            partition = min(left, right)
            if partition in seen_partitions:
                continue
            seen_partitions.add(partition)
            candidates.append((int(quick[column]), column, left, right))
        candidates.sort(key=lambda item: (item[0], item[1]))

        for _, column, left, right in candidates:
            cap = min(best, budget)
            lower_left = self._lower(left, depth - 1)
            lower_right = self._lower(right, depth - 1)
            if lower_left + lower_right >= cap:
                continue
            value_left = self.solve(left, depth - 1, cap - lower_right)
            if value_left + lower_right >= cap:
                continue
            value_right = self.solve(right, depth - 1, cap - value_left)
            if value_left + value_right >= cap:
                continue
            best = value_left + value_right
            best_column = column

        if best < budget:
            self._record(subproblem, best, best_column)
            return best

        subproblem.lower = max(subproblem.lower, budget)
        return subproblem.lower

    def optimum(self) -> int:
        """Optimal scaled cost of the whole dataset, searched below the greedy tree's cost."""
        incumbent = self.greedy_cost(self.full_support, self.max_depth)
        logger.debug(f"Solver: {self.n_points} distinct points from {self.n_rows} rows, greedy bound {incumbent}")
        return self.solve(self.full_support, self.max_depth, incumbent + 1)

    def _exact(self, support: int, depth: int) -> int:
        return self.solve(support, depth, self.greedy_cost(support, depth) + 1)

    def min_key_optimal(self, support: int, depth: int) -> Candidate:
        """The optimal tree of (support, depth) with the smallest canonical key."""
        key = (support, depth)
        if key in self._min_keys:
            return self._min_keys[key]

        optimum = self._exact(support, depth)
        subproblem = self._subproblem(support, depth)
        best: Candidate | None = None
        if subproblem.leaf_cost == optimum:
            best = (optimum, f"l{subproblem.leaf_label}", LeafNode(label=subproblem.leaf_label))

        if depth > 0:
            for column, left, right in self._splits(support):
                lower_left = self._lower(left, depth - 1)
                lower_right = self._lower(right, depth - 1)
                if lower_left + lower_right > optimum:
                    continue
                value_left = self.solve(left, depth - 1, optimum - lower_right + 1)
                if value_left + lower_right > optimum:
                    continue
                value_right = self.solve(right, depth - 1, optimum - value_left + 1)
                if value_left + value_right != optimum:
                    continue
                _, key_left, node_left = self.min_key_optimal(left, depth - 1)
                _, key_right, node_right = self.min_key_optimal(right, depth - 1)
                if key_left == key_right:
                    continue
                tree_key = f"s{column} {key_left} {key_right}"
                if best is None or tree_key < best[1]:
                    best = (optimum, tree_key, SplitNode(column=column, left=node_left, right=node_right))

        if best is None:
            raise RuntimeError(f"no optimal tree reconstructed for a support of {support.bit_count()} points")
        self._min_keys[key] = best
        return best

    # enumeration

    def enumerate(self, support: int, depth: int, budget: int) -> list[Candidate]:
        """Every canonical tree on (support, depth) with scaled cost <= `budget`, sorted by (cost, key).

        Raises:
            RashomonSetTooLarge: If any intermediate list exceeds the configured cap.
        """
        if self._lower(support, depth) > budget:
            return []
        if self.solve(support, depth, budget + 1) > budget:
            return []

        key = (support, depth)
        cached = self._enumerated.get(key)
        if cached is not None and cached[0] >= budget:
            return [candidate for candidate in cached[1] if candidate[0] <= budget]

        subproblem = self._subproblem(support, depth)
        results: list[Candidate] = []
        if subproblem.leaf_cost <= budget:
            results.append((subproblem.leaf_cost, f"l{subproblem.leaf_label}", LeafNode(label=subproblem.leaf_label)))

        if depth > 0:
            for column, left, right in self._splits(support):
                lower_left = self._lower(left, depth - 1)
                lower_right = self._lower(right, depth - 1)
                if lower_left + lower_right > budget:
                    continue
                value_left = self.solve(left, depth - 1, budget - lower_right + 1)
                if value_left + lower_right > budget:
                    continue
                value_right = self.solve(right, depth - 1, budget - value_left + 1)
                if value_left + value_right > budget:
                    continue

                self.graph.link(key, column, (left, depth - 1), (right, depth - 1))
                left_trees = self.enumerate(left, depth - 1, budget - value_right)
                right_trees = self.enumerate(right, depth - 1, budget - value_left)
                for cost_left, key_left, node_left in left_trees:
                    remaining = budget - cost_left
                    for cost_right, key_right, node_right in right_trees:
                        if cost_right > remaining:
                            break
                        if key_left == key_right:
                            continue
                        results.append(
                            (
                                cost_left + cost_right,
                                f"s{column} {key_left} {key_right}",
                                SplitNode.model_construct(column=column, left=node_left, right=node_right),
                            ),
                        )
                    if len(results) > self.rashomon_cap:
                        raise RashomonSetTooLarge(self.rashomon_cap)

        results.sort(key=lambda candidate: (candidate[0], candidate[1]))
        self._enumerated[key] = (budget, results)
        return results

    def log_stats(self) -> None:
        """Log search effort counters."""
        logger.debug(f"Solver: {len(self.graph)} subproblems, {self.expansions} expansions")
