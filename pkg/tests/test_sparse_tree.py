from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from abr_rashomon.errors import RashomonSetTooLarge, SolverInputError
from abr_rashomon.features.binarize import BinDataset
from abr_rashomon.sparse_tree.rashomon import (
    enumerate_rashomon,
    feature_utilisation,
    load_rashomon_set,
    save_rashomon_set,
    select_instances,
    solve_optimal,
    tree_filename,
)
from abr_rashomon.sparse_tree.solver import SparseTreeSolver, bitset_from_bools
from abr_rashomon.sparse_tree.tree import (
    DecisionTree,
    LeafNode,
    SplitNode,
    canonical_node,
    canonicalize,
    exact_objective,
    predict_matrix,
    score_tree,
)
from oracles import exhaustive_trees

LAMBDA = 0.05

XOR = BinDataset.from_bits([[0, 0], [0, 1], [1, 0], [1, 1]], [0, 1, 1, 0])


def _random_data(seed: int, n_rows: int = 12, n_columns: int = 4, n_labels: int = 3) -> BinDataset:
    rng = np.random.default_rng(seed)
    return BinDataset.from_bits(rng.integers(0, 2, size=(n_rows, n_columns)), rng.integers(0, n_labels, size=n_rows))


def _structured_data(seed: int) -> tuple[BinDataset, int]:
    """Up to 8 columns and 200 rows whose labels follow two columns with 15% noise, plus a depth of 1 to 3."""
    rng = np.random.default_rng(1000 + seed)
    n_columns = 3 + seed % 6
    n_rows = int(rng.integers(20, 201))
    bits = rng.integers(0, 2, size=(n_rows, n_columns))
    labels = (bits[:, 0] + 2 * bits[:, 1]) % 3
    noisy = rng.random(n_rows) < 0.15
    labels[noisy] = rng.integers(0, 3, size=int(noisy.sum()))
    return BinDataset.from_bits(bits, labels), 1 + seed % 3


SEEDS = range(20)


@pytest.mark.parametrize("seed", SEEDS)
def test_solve_optimal_matches_exhaustive_search(seed: int) -> None:
    """The optimum and its smallest-key tree agree with enumerating every tree."""
    data, max_depth = _structured_data(seed)
    best, optimal_trees = exhaustive_trees(data, max_depth, LAMBDA, epsilon=0.0)

    tree, obj = solve_optimal(data, LAMBDA, max_depth)

    misclassified = int(np.count_nonzero(predict_matrix(tree, data.matrix) != data.labels))
    assert exact_objective(misclassified, data.n_rows, tree.n_leaves, LAMBDA) == best
    assert obj == pytest.approx(float(best))
    assert tree.key == min(optimal_trees)
    assert tree.depth <= max_depth


def test_solve_optimal_on_xor() -> None:
    """XOR needs all four leaves: 4 x 0.01 beats any smaller tree."""
    best, optimal_trees = exhaustive_trees(XOR, 2, 0.01, epsilon=0.0)

    tree, obj = solve_optimal(XOR, 0.01, 2)

    assert best == Fraction(4, 100)
    assert obj == pytest.approx(0.04)
    assert tree.n_leaves == 4
    assert tree.depth == 2
    assert tree.key == min(optimal_trees)
    assert predict_matrix(tree, XOR.matrix).tolist() == [0, 1, 1, 0]


@pytest.mark.parametrize("seed", SEEDS)
def test_solver_bounds_bracket_the_optimum(seed: int) -> None:
    """The equivalent-points floor stays below the optimum and the greedy tree stays above it."""
    data, max_depth = _structured_data(seed)
    solver = SparseTreeSolver(data, LAMBDA, max_depth)

    optimum = solver.optimum()

    assert solver.lower_bound(solver.full_support, max_depth) <= optimum
    assert optimum <= solver.greedy_cost(solver.full_support, max_depth)
    assert solver.n_points <= data.n_rows
    assert solver.to_fraction(optimum) == exhaustive_trees(data, max_depth, LAMBDA, epsilon=0.0)[0]


def test_duplicate_rows_merge_into_points() -> None:
    """Identical rows become one point; rows that disagree within a point cannot be fixed by any split."""
    data = BinDataset.from_bits([[1, 0], [1, 0], [1, 0], [0, 1], [0, 1]], [2, 2, 0, 1, 1])
    solver = SparseTreeSolver(data, LAMBDA, 2)

    misclassified, label, equivalent = solver.support_stats(solver.full_support)

    assert solver.n_points == 2
    assert (misclassified, label, equivalent) == (3, 1, 1)
    assert solver.lower_bound(solver.full_support, 2) == solver.cost_of(1, 2)
    tree, obj = solve_optimal(data, LAMBDA, 2)
    assert tree.n_leaves == 2
    assert obj == pytest.approx(1 / 5 + 2 * LAMBDA)


@pytest.mark.slow
@pytest.mark.parametrize("epsilon", [0.0, 0.05, 0.2])
@pytest.mark.parametrize("seed", SEEDS)
def test_rashomon_set_matches_exhaustive_search(seed: int, epsilon: float) -> None:
    """Exactly the trees within (1 + epsilon) of the optimum are enumerated, each once."""
    data, max_depth = _structured_data(seed)
    best, oracle = exhaustive_trees(data, max_depth, LAMBDA, epsilon=epsilon)
    expected = sorted(
        (exact_objective(misclassified, data.n_rows, leaves, LAMBDA), key)
        for key, (misclassified, leaves) in oracle.items()
    )

    rashomon_set = enumerate_rashomon(data, LAMBDA, epsilon, max_depth)

    assert rashomon_set.keys == [key for _, key in expected]
    assert rashomon_set.exact_theta() == best * (1 + Fraction(str(epsilon)))
    for entry in rashomon_set.entries:
        assert (entry.misclassified, entry.leaves) == oracle[entry.key]
        assert entry.key == canonicalize(entry.tree)
        assert entry.depth == entry.tree.depth


@pytest.mark.parametrize("epsilon", [0.0, 0.05, 0.2, 1.5])
def test_rashomon_set_on_xor(epsilon: float) -> None:
    """The XOR set is the oracle's set of canonical trees within (1 + epsilon) x 0.04."""
    _, oracle = exhaustive_trees(XOR, 2, 0.01, epsilon=epsilon)

    rashomon_set = enumerate_rashomon(XOR, 0.01, epsilon, 2)

    assert set(rashomon_set.keys) == set(oracle)
    assert len(rashomon_set.keys) == len(set(rashomon_set.keys))
    assert rashomon_set.exact_theta() == Fraction(4, 100) * (1 + Fraction(str(epsilon)))
    assert rashomon_set.keys[0] == solve_optimal(XOR, 0.01, 2)[0].key


def test_small_instances_match_every_tree() -> None:
    """On tiny data the set with a huge epsilon is every tree of the space."""
    data = _random_data(3, n_rows=8, n_columns=3)
    _, every_tree = exhaustive_trees(data, 2, LAMBDA)

    rashomon_set = enumerate_rashomon(data, LAMBDA, 100.0, 2)

    assert set(rashomon_set.keys) == set(every_tree)


def test_rashomon_set_contains_the_optimal_tree() -> None:
    """The first entry is the optimum."""
    data = _random_data(5)
    tree, obj = solve_optimal(data, LAMBDA, 2)

    rashomon_set = enumerate_rashomon(data, LAMBDA, 0.2, 2)

    assert rashomon_set.keys[0] == tree.key
    assert rashomon_set.obj_opt == pytest.approx(obj)


def test_pure_data_gives_a_single_leaf() -> None:
    """With one label nothing beats a leaf."""
    data = BinDataset.from_bits([[0, 1], [1, 0], [1, 1]], [4, 4, 4])

    tree, obj = solve_optimal(data, LAMBDA, 3)

    assert tree.root == LeafNode(label=4)
    assert obj == pytest.approx(LAMBDA)


def test_rashomon_cap() -> None:
    """More qualifying trees than the cap is an error."""
    with pytest.raises(RashomonSetTooLarge):
        enumerate_rashomon(_random_data(0), LAMBDA, 5.0, 2, cap=3)


@pytest.mark.parametrize(
    ("data", "lam", "max_depth"),
    [
        (BinDataset.from_bits(np.zeros((0, 2)), []), LAMBDA, 2),
        (BinDataset.from_bits([[0], [1]], [0, 1]), 0.0, 2),
        (BinDataset.from_bits([[0], [1]], [0, 1]), LAMBDA, 0),
    ],
)
def test_solver_rejects_bad_inputs(data: BinDataset, lam: float, max_depth: int) -> None:
    """Empty data, non-positive lambda and zero depth are refused."""
    with pytest.raises(SolverInputError):
        SparseTreeSolver(data, lam, max_depth)


def test_negative_epsilon_is_rejected() -> None:
    """Epsilon widens the set and cannot be negative."""
    with pytest.raises(SolverInputError):
        enumerate_rashomon(_random_data(0), LAMBDA, -0.1, 2)


def test_bitset_from_bools() -> None:
    """Bit i of the integer is row i."""
    assert bitset_from_bools(np.array([True, False, True])) == 0b101
    assert bitset_from_bools(np.array([False] * 9 + [True])) == 1 << 9


def test_select_instances_and_utilisation() -> None:
    """Instances come in set order; utilisation counts trees per raw feature."""
    data = _random_data(1)
    rashomon_set = enumerate_rashomon(data, LAMBDA, 0.3, 2)

    selected = select_instances(rashomon_set, 3)
    utilisation = feature_utilisation(rashomon_set, data.binarizer)

    assert [tree.key for tree in selected] == rashomon_set.keys[:3]
    assert select_instances(rashomon_set, 10_000) == rashomon_set.trees
    assert set(utilisation) == {"x0", "x1", "x2", "x3"}
    assert all(0.0 <= fraction <= 1.0 for fraction in utilisation.values())


def test_rashomon_set_directory_round_trip(tmp_path: Path) -> None:
    """Trees, counts and the binarizer load back from the directory form."""
    data = _random_data(2)
    rashomon_set = enumerate_rashomon(data, LAMBDA, 0.2, 2)

    save_rashomon_set(rashomon_set, tmp_path / "set")
    loaded = load_rashomon_set(tmp_path / "set")

    assert loaded.keys == rashomon_set.keys
    assert loaded.binarizer == data.binarizer
    assert loaded.theta == rashomon_set.theta
    assert [(entry.misclassified, entry.leaves) for entry in loaded.entries] == [
        (entry.misclassified, entry.leaves) for entry in rashomon_set.entries
    ]
    for key in rashomon_set.keys:
        assert (tmp_path / "set" / "trees" / tree_filename(key)).exists()


def test_saving_over_a_set_removes_stale_trees(tmp_path: Path) -> None:
    """A smaller set saved into the same directory leaves only its own tree files."""
    data = _random_data(2)
    save_rashomon_set(enumerate_rashomon(data, LAMBDA, 0.3, 2), tmp_path / "set")
    smaller = enumerate_rashomon(data, LAMBDA, 0.0, 2)

    save_rashomon_set(smaller, tmp_path / "set")

    stored = sorted(path.name for path in (tmp_path / "set" / "trees").iterdir())
    assert stored == sorted(tree_filename(key) for key in smaller.keys)
    assert load_rashomon_set(tmp_path / "set").keys == smaller.keys


def test_canonical_node_collapses_identical_children() -> None:
    """A split whose subtrees agree is the subtree itself."""
    redundant = SplitNode(
        column=0,
        left=SplitNode(column=1, left=LeafNode(label=2), right=LeafNode(label=2)),
        right=LeafNode(label=2),
    )

    assert canonical_node(redundant) == LeafNode(label=2)
    assert canonicalize(DecisionTree(root=redundant)) == "l2"


def test_tree_shape_and_scoring() -> None:
    """Depth, leaves, key, predictions and objective of a small tree."""
    tree = DecisionTree(
        root=SplitNode(
            column=0,
            left=LeafNode(label=1),
            right=SplitNode(column=1, left=LeafNode(label=0), right=LeafNode(label=2)),
        ),
    )
    data = BinDataset.from_bits([[1, 0], [0, 1], [0, 0], [0, 0]], [1, 0, 2, 1])

    scored = score_tree(tree, data.matrix, data.labels, 0.01)

    assert tree.depth == 2
    assert tree.n_leaves == 3
    assert tree.key == "s0 l1 s1 l0 l2"
    assert predict_matrix(tree, data.matrix).tolist() == [1, 0, 2, 2]
    assert scored.objective is not None
    assert scored.objective.obj == pytest.approx(0.25 + 0.03)
    assert exact_objective(1, 4, 3, 0.01) == Fraction(1, 4) + Fraction(3, 100)
