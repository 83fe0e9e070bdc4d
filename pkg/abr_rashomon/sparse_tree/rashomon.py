"""Optimal trees, complete Rashomon sets and their on-disk directory form."""

from __future__ import annotations

import csv
import hashlib
import shutil
from fractions import Fraction
from pathlib import Path

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from abr_rashomon.consts import DEFAULT_RASHOMON_CAP
from abr_rashomon.errors import MalformedTreeError, RashomonSetTooLarge, SolverInputError
from abr_rashomon.features.binarize import Binarizer, BinDataset
from abr_rashomon.sparse_tree.solver import SparseTreeSolver
from abr_rashomon.sparse_tree.tree import DecisionTree, SparseObjective, count_leaves, iter_splits, node_depth
from abr_rashomon.sparse_tree.tree_file import load_tree, save_tree

INDEX_FILENAME = "index.csv"
METADATA_FILENAME = "rashomon.json"
BINARIZER_FILENAME = "binarizer.json"
TREES_DIRNAME = "trees"


class RashomonEntry(BaseModel):
    """One tree of a Rashomon set with its exact counts."""

    model_config = ConfigDict(frozen=True)

    key: str
    tree: DecisionTree
    misclassified: int = Field(ge=0)
    leaves: int = Field(ge=1)
    depth: int = Field(ge=0)

    @property
    def obj(self) -> float:
        """The tree's objective."""
        assert self.tree.objective is not None
        return self.tree.objective.obj


class RashomonSet(BaseModel):
    """Every canonical tree whose objective is at most `theta`, sorted by (objective, key)."""

    model_config = ConfigDict(populate_by_name=True)

    entries: list[RashomonEntry] = Field(default_factory=list)
    theta: float
    obj_opt: float
    lambda_: float = Field(alias="lambda", gt=0)
    epsilon: float = Field(ge=0)
    max_depth: int = Field(ge=1)
    n_rows: int = Field(ge=1)
    binarizer: Binarizer | None = None

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def keys(self) -> list[str]:
        """Canonical keys in set order."""
        return [entry.key for entry in self.entries]

    @property
    def trees(self) -> list[DecisionTree]:
        """Trees in set order."""
        return [entry.tree for entry in self.entries]

    def exact_objective(self, entry: RashomonEntry) -> Fraction:
        """The entry's objective as an exact fraction."""
        return Fraction(entry.misclassified, self.n_rows) + Fraction(str(self.lambda_)) * entry.leaves

    def exact_theta(self) -> Fraction:
        """The membership threshold as an exact fraction."""
        return self.exact_objective(self.entries[0]) * (1 + Fraction(str(self.epsilon)))


def _objective(solver: SparseTreeSolver, cost: int, leaves: int, lam: float) -> SparseObjective:
    misclassified = solver.split_counts(cost, leaves)
    return SparseObjective(lambda_=lam, loss_mis=misclassified / solver.n_rows, leaves=leaves)


def solve_optimal(data: BinDataset, lam: float, max_depth: int) -> tuple[DecisionTree, float]:
    """Find a tree of minimum objective over all trees of depth <= `max_depth` on the dataset's columns.

    Among equally good trees the one with the smallest canonical key is returned.

    Raises:
        SolverInputError: On empty data, lambda <= 0 or max_depth < 1.
    """
    solver = SparseTreeSolver(data, lam, max_depth)
    optimum = solver.optimum()
    _, _, root = solver.min_key_optimal(solver.full_support, max_depth)
    objective = _objective(solver, optimum, count_leaves(root), lam)
    solver.log_stats()
    logger.info(f"Optimal tree: objective {objective.obj:.6f} with {objective.leaves} leaves")
    return DecisionTree(root=root, objective=objective), objective.obj


def enumerate_rashomon(
    data: BinDataset,
    lam: float,
    epsilon: float,
    max_depth: int,
    cap: int = DEFAULT_RASHOMON_CAP,
) -> RashomonSet:
    """Enumerate every canonical tree with objective <= obj_opt * (1 + epsilon).

    Membership is decided in exact arithmetic, so trees exactly on the threshold are included.

    Raises:
        SolverInputError: On invalid inputs.
        RashomonSetTooLarge: If more than `cap` trees qualify.
    """
    if epsilon < 0:
        raise SolverInputError(f"epsilon must be >= 0, got {epsilon}")

    solver = SparseTreeSolver(data, lam, max_depth, rashomon_cap=cap)
    optimum = solver.optimum()
    ratio = 1 + Fraction(str(epsilon))
    budget = optimum * ratio.numerator // ratio.denominator
    candidates = solver.enumerate(solver.full_support, max_depth, budget)
    if len(candidates) > cap:
        raise RashomonSetTooLarge(cap)

    entries = []
    for cost, key, root in candidates:
        leaves = count_leaves(root)
        objective = _objective(solver, cost, leaves, lam)
        entries.append(
            RashomonEntry(
                key=key,
                tree=DecisionTree(root=root, objective=objective),
                misclassified=solver.split_counts(cost, leaves),
                leaves=leaves,
                depth=node_depth(root),
            ),
        )

    solver.log_stats()
    theta = solver.to_fraction(optimum) * ratio
    logger.info(f"Rashomon set: {len(entries)} trees within theta {float(theta):.6f}")
    return RashomonSet(
        entries=entries,
        theta=float(theta),
        obj_opt=float(solver.to_fraction(optimum)),
        lambda_=lam,
        epsilon=epsilon,
        max_depth=max_depth,
        n_rows=data.n_rows,
        binarizer=data.binarizer,
    )


def select_entries(rashomon_set: RashomonSet, k: int) -> list[RashomonEntry]:
    """The first `min(k, |set|)` entries by (objective, canonical key)."""
    ordered = sorted(rashomon_set.entries, key=lambda entry: (rashomon_set.exact_objective(entry), entry.key))
    return ordered[: max(k, 0)]


def select_instances(rashomon_set: RashomonSet, k: int) -> list[DecisionTree]:
    """The first `min(k, |set|)` trees by (objective, canonical key)."""
    return [entry.tree for entry in select_entries(rashomon_set, k)]


def feature_utilisation(rashomon_set: RashomonSet, binarizer: Binarizer) -> dict[str, float]:
    """Fraction of the set's trees that split on each raw feature at least once."""
    counts = dict.fromkeys(binarizer.feature_names, 0)
    for entry in rashomon_set.entries:
        used = {binarizer.columns[split.column].feature_name for split, _ in iter_splits(entry.tree.root)}
        for name in used:
            counts[name] += 1
    total = max(len(rashomon_set.entries), 1)
    return {name: count / total for name, count in counts.items()}


def save_feature_utilisation(utilisation: dict[str, float], file_path: str | Path) -> None:
    """Write a feature utilisation table as CSV, most used first."""
    with open(file_path, "w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file)
        writer.writerow(["feature", "fraction"])
        for name, fraction in sorted(utilisation.items(), key=lambda item: (-item[1], item[0])):
            writer.writerow([name, repr(fraction)])


def tree_filename(key: str) -> str:
    """A stable file name for a canonical key."""
    return f"{hashlib.sha256(key.encode('utf-8')).hexdigest()[:16]}.json"


def save_rashomon_set(rashomon_set: RashomonSet, directory: str | Path) -> None:
    """Write one tree file per canonical key, an index CSV, the binarizer and the set metadata.

    Trees and the binarizer left by an earlier save into the same directory are removed first.
    """
    directory = Path(directory)
    trees_dir = directory / TREES_DIRNAME
    if trees_dir.exists():
        shutil.rmtree(trees_dir)
    trees_dir.mkdir(parents=True)
    (directory / BINARIZER_FILENAME).unlink(missing_ok=True)

    binarizer_ref = None
    if rashomon_set.binarizer is not None:
        rashomon_set.binarizer.save(directory / BINARIZER_FILENAME)
        binarizer_ref = f"../{BINARIZER_FILENAME}"

    with open(directory / INDEX_FILENAME, "w", encoding="utf-8", newline="") as index_file:
        writer = csv.writer(index_file)
        writer.writerow(["key", "obj", "leaves", "depth", "misclassified", "file"])
        for entry in rashomon_set.entries:
            filename = tree_filename(entry.key)
            save_tree(entry.tree, trees_dir / filename, rashomon_set.binarizer, binarizer_ref)
            writer.writerow([entry.key, repr(entry.obj), entry.leaves, entry.depth, entry.misclassified, filename])

    metadata = rashomon_set.model_dump_json(indent=2, by_alias=True, exclude={"entries", "binarizer"})
    (directory / METADATA_FILENAME).write_text(metadata, encoding="utf-8")
    logger.info(f"Wrote {len(rashomon_set)} trees to {directory}")


def load_rashomon_set(directory: str | Path) -> RashomonSet:
    """Read a directory written by `save_rashomon_set`.

    Raises:
        MalformedTreeError: If a stored tree's key does not match the index.
    """
    directory = Path(directory)
    metadata = RashomonSet.model_validate_json((directory / METADATA_FILENAME).read_text(encoding="utf-8"))
    binarizer_path = directory / BINARIZER_FILENAME
    binarizer = Binarizer.load(binarizer_path) if binarizer_path.exists() else None

    entries = []
    with open(directory / INDEX_FILENAME, encoding="utf-8", newline="") as index_file:
        for row in csv.DictReader(index_file):
            tree, _ = load_tree(directory / TREES_DIRNAME / row["file"], binarizer)
            if tree.key != row["key"]:
                raise MalformedTreeError(f"{row['file']}: stored tree does not match key {row['key']!r}")
            entries.append(
                RashomonEntry(
                    key=row["key"],
                    tree=tree,
                    misclassified=int(row["misclassified"]),
                    leaves=int(row["leaves"]),
                    depth=int(row["depth"]),
                ),
            )
    return metadata.model_copy(update={"entries": entries, "binarizer": binarizer})
