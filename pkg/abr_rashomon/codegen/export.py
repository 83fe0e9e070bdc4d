"""Render decision trees as nested conditionals over named observation features."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict

from abr_rashomon.consts import HISTORY_LENGTH
from abr_rashomon.errors import MalformedTreeError
from abr_rashomon.features.binarize import Binarizer
from abr_rashomon.media.manifest import VideoManifest
from abr_rashomon.sparse_tree.tree import DecisionTree, LeafNode, TreeNode, count_leaves, iter_splits

INDENT = "    "

_FIXED_SHORT_NAMES = {
    "last_quality": ("last_q", "last bitrate / top bitrate"),
    "buffer": ("b", "buffer seconds / 10"),
    "chunks_remaining": ("rem", "remaining chunks / total chunks"),
}
_INDEXED_SHORT_NAMES = {
    "tput": ("tput", "throughput of a past chunk in MByte/s, index {max_index} is the latest"),
    "delay": ("d", "download time of a past chunk in seconds / 10, index {max_index} is the latest"),
    "size": ("s", "size of the next chunk in MByte at each ladder level"),
}


def short_name(feature_name: str) -> str:
    """The name a feature goes by in exported code, e.g. `tput_7` -> `tput[7]`."""
    if feature_name in _FIXED_SHORT_NAMES:
        return _FIXED_SHORT_NAMES[feature_name][0]
    prefix, _, index = feature_name.rpartition("_")
    if prefix in _INDEXED_SHORT_NAMES and index.isdigit():
        return f"{_INDEXED_SHORT_NAMES[prefix][0]}[{index}]"
    return feature_name


def legend() -> dict[str, str]:
    """Short name -> meaning for every name `short_name` can produce."""
    entries = {short: meaning for short, meaning in _FIXED_SHORT_NAMES.values()}
    for short, meaning in _INDEXED_SHORT_NAMES.values():
        entries[f"{short}[i]"] = meaning.format(max_index=HISTORY_LENGTH - 1)
    return entries


class TreeCode(BaseModel):
    """Exported code text and the legend for the names it uses."""

    model_config = ConfigDict(frozen=True)

    text: str
    legend: dict[str, str]

    def with_legend(self) -> str:
        """The code preceded by one comment line per legend entry."""
        header = "".join(f"# {name}: {meaning}\n" for name, meaning in self.legend.items())
        return header + self.text


def tree_to_code(tree: DecisionTree, binarizer: Binarizer, manifest: VideoManifest) -> TreeCode:
    """Render `tree` as `if <feature> < <threshold>:` / `else:` blocks with bitrate (kbps) returns.

    Thresholds are printed with `repr`, so they equal the binarizer's values exactly.

    Raises:
        MalformedTreeError: On a column the binarizer lacks or a leaf outside the ladder.
    """
    lines: list[str] = []
    used: set[str] = set()

    def emit(node: TreeNode, depth: int) -> None:
        pad = INDENT * depth
        if isinstance(node, LeafNode):
            if node.label >= manifest.n_levels:
                raise MalformedTreeError(f"leaf level {node.label} is outside the {manifest.n_levels}-level ladder")
            lines.append(f"{pad}return {manifest.ladder_kbps[node.label]}")
            return
        if node.column >= binarizer.n_columns:
            raise MalformedTreeError(f"unknown column {node.column}")
        column = binarizer.columns[node.column]
        name = short_name(column.feature_name)
        used.add(name)
        lines.append(f"{pad}if {name} < {column.threshold!r}:")
        emit(node.left, depth + 1)
        lines.append(f"{pad}else:")
        emit(node.right, depth + 1)

    emit(tree.root, 0)
    full_legend = legend()
    used_legend = {}
    for name in sorted(used):
        generic = name.split("[")[0] + "[i]" if "[" in name else name
        used_legend[name] = full_legend.get(generic, name)
    return TreeCode(text="\n".join(lines) + "\n", legend=used_legend)


class TreeSummary(BaseModel):
    """Structural counts of one tree."""

    model_config = ConfigDict(frozen=True)

    depth: int
    leaves: int
    distinct_features: int
    node_count: int
    code_lines: int


def tree_summary(tree: DecisionTree, binarizer: Binarizer | None = None) -> TreeSummary:
    """Depth, leaves, distinct raw features, node count and exported line count.

    Without a binarizer, distinct binary columns are counted in place of raw features.
    """
    splits = [split for split, _ in iter_splits(tree.root)]
    if binarizer is None:
        features = {split.column for split in splits}
    else:
        features = {binarizer.columns[split.column].feature_index for split in splits}
    leaves = count_leaves(tree.root)
    return TreeSummary(
        depth=tree.depth,
        leaves=leaves,
        distinct_features=len(features),
        node_count=len(splits) + leaves,
        code_lines=leaves + 2 * len(splits),
    )

