"""A deterministic comprehensibility judge built from the criteria developers cite most often.

Trees are ranked lexicographically by:

1. Depth (shallower wins).
2. Distinct raw features used (fewer wins).
3. Feature consistency (higher wins): the fraction of internal nodes whose raw feature matches their parent's or
   their sibling's.
4. Leaf count (fewer wins).
5. Canonical key (lexicographically smaller wins).

This is a strict total order on distinct canonical trees, so the heuristic judge never reports a tie. Identical
trees resolve to TREEONE.
"""

from __future__ import annotations

from fractions import Fraction

from typing_extensions import override

from abr_rashomon.errors import BinarizerMismatchError
from abr_rashomon.features.binarize import Binarizer
from abr_rashomon.judge.messages import Contestant, JudgeBackend, Preference, Verdict
from abr_rashomon.sparse_tree.tree import DecisionTree, SplitNode, canonicalize, iter_splits

HEURISTIC_JUDGE_ID = "heuristic"


def _feature(split: SplitNode, binarizer: Binarizer) -> int:
    return binarizer.columns[split.column].feature_index


def distinct_features(tree: DecisionTree, binarizer: Binarizer) -> int:
    """Raw features used by at least one split."""
    return len({_feature(split, binarizer) for split, _ in iter_splits(tree.root)})


def feature_consistency(tree: DecisionTree, binarizer: Binarizer) -> Fraction:
    """Fraction of internal nodes sharing their raw feature with their parent or sibling; 1 for a leaf."""
    splits = iter_splits(tree.root)
    if not splits:
        return Fraction(1)
    consistent = 0
    for split, parent in splits:
        if parent is None:
            continue
        feature = _feature(split, binarizer)
        sibling = parent.right if parent.left is split else parent.left
        if _feature(parent, binarizer) == feature or (
            isinstance(sibling, SplitNode) and _feature(sibling, binarizer) == feature
        ):
            consistent += 1
    return Fraction(consistent, len(splits))


def comprehensibility_rank(tree: DecisionTree, binarizer: Binarizer) -> tuple[int, int, Fraction, int, str]:
    """The sort key of the heuristic order; smaller is more comprehensible."""
    return (
        tree.depth,
        distinct_features(tree, binarizer),
        -feature_consistency(tree, binarizer),
        tree.n_leaves,
        canonicalize(tree),
    )


_CRITERIA = ("depth", "distinct features", "feature consistency", "leaves", "canonical key")


def heuristic_compare(
    tree_a: DecisionTree,
    tree_b: DecisionTree,
    binarizer_a: Binarizer,
    binarizer_b: Binarizer | None = None,
) -> Verdict:
    """Rank two trees under the heuristic order.

    Raises:
        BinarizerMismatchError: If the trees do not share a binarizer.
    """
    if binarizer_b is not None and binarizer_b != binarizer_a:
        raise BinarizerMismatchError("trees compared by the heuristic judge must share a binarizer")

    rank_a = comprehensibility_rank(tree_a, binarizer_a)
    rank_b = comprehensibility_rank(tree_b, binarizer_a)
    for criterion, value_a, value_b in zip(_CRITERIA, rank_a, rank_b, strict=True):
        if value_a == value_b:
            continue
        preference = Preference.TREEONE if value_a < value_b else Preference.TREETWO
        if criterion == "feature consistency":
            shown_a, shown_b = f"{float(-value_a):.3f}", f"{float(-value_b):.3f}"
            relation = ">" if value_a < value_b else "<"
        else:
            shown_a, shown_b = str(value_a), str(value_b)
            relation = "<" if value_a < value_b else ">"
        return Verdict(
            preference=preference,
            rationale=f"{criterion} {shown_a} {relation} {shown_b}",
            judge_id=HEURISTIC_JUDGE_ID,
        )
    return Verdict(preference=Preference.TREEONE, rationale="identical trees", judge_id=HEURISTIC_JUDGE_ID)


class HeuristicJudge(JudgeBackend):
    """`heuristic_compare` as a tournament backend."""

    judge_id = HEURISTIC_JUDGE_ID

    @override
    def compare(self, first: Contestant, second: Contestant, *, few_shot: bool, self_consistency: int) -> Verdict:
        return heuristic_compare(first.tree, second.tree, first.binarizer, second.binarizer)
