"""Ask a chat model to retune a tree for a different network environment.

The model sees the tree as exported code plus bandwidth statistics of both environments and answers with the tree in
the tree-file schema (raw feature names and thresholds). The answer is validated; one failed answer is sent back with
the validator's findings, a second failure raises `TreeValidationError`.
"""

from __future__ import annotations

import json
import re

from loguru import logger
from pydantic import ValidationError

from abr_rashomon.codegen.export import short_name, tree_to_code
from abr_rashomon.consts import QOE_LIN_MU
from abr_rashomon.errors import MalformedTreeError, TreeValidationError
from abr_rashomon.features.binarize import Binarizer
from abr_rashomon.judge.backends import ChatClient
from abr_rashomon.judge.llm import ADJUST_TEMPLATE, render_prompt
from abr_rashomon.media.manifest import VideoManifest
from abr_rashomon.network.trace import NetworkTrace, TraceStats
from abr_rashomon.sparse_tree.tree import DecisionTree
from abr_rashomon.sparse_tree.tree_file import TreeFile, TreeFileNode, rebind_thresholds

SAMPLE_POINTS = 20
"""Leading points of the sample trace quoted in the prompt."""

_FENCE = re.compile(r"```(?:json)?\s*(\{.*?\})\s*```", re.DOTALL)

_SCHEMA_EXAMPLE = {
    "nodes": [
        {"feature": "buffer", "threshold": 0.5, "left": 1, "right": 2},
        {"leaf": 0},
        {"leaf": 3},
    ],
}


def extract_json(reply: str) -> str | None:
    """The JSON object in a reply: a fenced block if there is one, else the outermost braces."""
    fenced = _FENCE.search(reply)
    if fenced is not None:
        return fenced.group(1)
    start, end = reply.find("{"), reply.rfind("}")
    if start == -1 or end <= start:
        return None
    return reply[start : end + 1]


def _normalise_features(tree_file: TreeFile, binarizer: Binarizer) -> tuple[TreeFile, list[str]]:
    """Map exported short names back to raw names and collect naming problems."""
    known = {name: name for name in binarizer.feature_names}
    known.update({short_name(name): name for name in binarizer.feature_names})
    problems = []
    nodes = []
    for index, node in enumerate(tree_file.nodes):
        if node.is_leaf:
            nodes.append(node)
            continue
        if node.feature is None or node.threshold is None:
            problems.append(f"node {index}: a split needs feature and threshold")
            nodes.append(node)
            continue
        if node.feature not in known:
            problems.append(f"node {index}: unknown feature {node.feature!r}")
            nodes.append(node)
            continue
        nodes.append(
            TreeFileNode(feature=known[node.feature], threshold=node.threshold, left=node.left, right=node.right),
        )
    return TreeFile(nodes=nodes), problems


def validate_adjusted(
    reply: str,
    binarizer: Binarizer,
    manifest: VideoManifest,
    max_depth: int,
) -> tuple[DecisionTree, Binarizer] | list[str]:
    """Parse and check a model's answer.

    Returns:
        tuple[DecisionTree, Binarizer] | list[str]: The tree with a binarizer built from its own thresholds, or every
            problem found.
    """
    payload = extract_json(reply)
    if payload is None:
        return ["the reply contains no JSON object"]
    try:
        tree_file = TreeFile.model_validate_json(payload)
    except ValidationError as e:
        return [f"{'.'.join(str(part) for part in error['loc']) or 'tree'}: {error['msg']}" for error in e.errors()]

    problems = [
        f"node {index}: leaf level {node.leaf} is not on the {manifest.n_levels}-level ladder"
        for index, node in enumerate(tree_file.nodes)
        if node.leaf is not None and node.leaf >= manifest.n_levels
    ]
    tree_file, naming_problems = _normalise_features(tree_file, binarizer)
    problems.extend(naming_problems)
    if problems:
        return problems

    try:
        tree, rebound = rebind_thresholds(tree_file, binarizer)
    except MalformedTreeError as e:
        return [str(e)]
    if tree.depth > max_depth:
        return [f"tree depth {tree.depth} exceeds the limit of {max_depth}"]
    return tree, rebound


def adjustment_prompt(
    tree: DecisionTree,
    binarizer: Binarizer,
    manifest: VideoManifest,
    source_stats: TraceStats,
    target_stats: TraceStats,
    sample_trace: NetworkTrace | None,
    max_depth: int,
    feedback: str | None = None,
) -> str:
    """Render the adjustment prompt."""
    sample_points = None
    if sample_trace is not None:
        sample_points = ", ".join(
            f"({time_s:g}, {mbps:.3f})" for time_s, mbps in sample_trace.points[:SAMPLE_POINTS]
        )
    return render_prompt(
        ADJUST_TEMPLATE,
        source_stats=source_stats.describe(),
        target_stats=target_stats.describe(),
        sample_points=sample_points,
        top_kbps=manifest.top_kbps,
        ladder=list(manifest.ladder_kbps),
        rebuffer_penalty=QOE_LIN_MU,
        tree=tree_to_code(tree, binarizer, manifest).with_legend(),
        schema=json.dumps(_SCHEMA_EXAMPLE),
        max_level=manifest.n_levels - 1,
        feature_names=", ".join(binarizer.feature_names),
        max_depth=max_depth,
        feedback=feedback,
    )


def adjust_tree(
    tree: DecisionTree,
    binarizer: Binarizer,
    manifest: VideoManifest,
    source_stats: TraceStats,
    target_stats: TraceStats,
    client: ChatClient,
    *,
    sample_trace: NetworkTrace | None = None,
    max_depth: int,
) -> tuple[DecisionTree, Binarizer]:
    """Retune `tree` for the environment described by `target_stats`.

    Args:
        tree (DecisionTree): The tree to adjust.
        binarizer (Binarizer): The binarizer `tree`'s columns refer to; also defines the allowed feature names.
        manifest (VideoManifest): Supplies the ladder the leaves must stay on.
        source_stats (TraceStats): Bandwidth statistics of the environment the tree was built for.
        target_stats (TraceStats): Bandwidth statistics of the new environment.
        client (ChatClient): The model to ask.
        sample_trace (NetworkTrace | None): One trace of the new environment to quote in the prompt.
        max_depth (int): Depth limit for the returned tree.

    Returns:
        tuple[DecisionTree, Binarizer]: The adjusted tree and a binarizer holding exactly its thresholds.

    Raises:
        TreeValidationError: If the answer is still invalid after one reprompt.
        JudgeTransportError: If the client cannot reach the provider.
    """
    feedback = None
    problems: list[str] = []
    for attempt in range(2):
        prompt = adjustment_prompt(
            tree,
            binarizer,
            manifest,
            source_stats,
            target_stats,
            sample_trace,
            max_depth,
            feedback,
        )
        reply = client.complete(prompt)
        result = validate_adjusted(reply, binarizer, manifest, max_depth)
        if not isinstance(result, list):
            adjusted, rebound = result
            logger.info(
                f"{client.name}: adjusted tree has depth {adjusted.depth} and {adjusted.n_leaves} leaves "
                f"(was {tree.depth} and {tree.n_leaves})",
            )
            return adjusted, rebound
        problems = result
        feedback = "; ".join(problems)
        logger.warning(f"{client.name}: adjusted tree rejected on attempt {attempt + 1}: {feedback}")
    raise TreeValidationError(problems)
