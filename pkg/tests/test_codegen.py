import numpy as np
import pytest

from abr_rashomon.codegen.export import legend, short_name, tree_summary, tree_to_code
from abr_rashomon.codegen.interpreter import evaluate_code, parse_code
from abr_rashomon.distill.greedy_tree import train_greedy_tree
from abr_rashomon.errors import MalformedTreeError
from abr_rashomon.features.binarize import Binarizer, RawDataset, binarize
from abr_rashomon.media.manifest import VideoManifest
from abr_rashomon.network.trace import synth_trace
from abr_rashomon.policies.bba import BbaPolicy
from abr_rashomon.policies.tree_policy import tree_decide
from abr_rashomon.sim.player import Observation, feature_names, initial_state, observe
from abr_rashomon.sim.session import rollout
from abr_rashomon.sparse_tree.rashomon import enumerate_rashomon
from abr_rashomon.sparse_tree.tree import DecisionTree, LeafNode, SplitNode

BINARIZER = Binarizer.from_pairs([(0, 0.2), (1, 0.5)], ["last_quality", "buffer"])

TREE = DecisionTree(
    root=SplitNode(
        column=1,
        left=LeafNode(label=0),
        right=SplitNode(column=0, left=LeafNode(label=2), right=LeafNode(label=5)),
    ),
)

EXPECTED_CODE = """\
if b < 0.5:
    return 300
else:
    if last_q < 0.2:
        return 1200
    else:
        return 4300
"""


def test_tree_to_code(manifest: VideoManifest) -> None:
    """Splits become if/else blocks and leaves return bitrates."""
    code = tree_to_code(TREE, BINARIZER, manifest)

    assert code.text == EXPECTED_CODE
    assert code.legend == {"b": "buffer seconds / 10", "last_q": "last bitrate / top bitrate"}
    assert code.with_legend().startswith("# b: buffer seconds / 10\n# last_q: last bitrate / top bitrate\nif b")


def test_tree_to_code_rejects_leaves_off_the_ladder(tiny_manifest: VideoManifest) -> None:
    """A leaf level the manifest does not have is malformed."""
    with pytest.raises(MalformedTreeError):
        tree_to_code(TREE, BINARIZER, tiny_manifest)


def test_tree_summary_counts_code_lines(manifest: VideoManifest) -> None:
    """Exported lines are one per leaf plus two per split."""
    summary = tree_summary(TREE, BINARIZER)

    assert (summary.depth, summary.leaves, summary.distinct_features, summary.node_count) == (2, 3, 2, 5)
    assert summary.code_lines == len(tree_to_code(TREE, BINARIZER, manifest).text.splitlines())


@pytest.mark.parametrize(
    ("feature", "expected"),
    [
        ("buffer", "b"),
        ("last_quality", "last_q"),
        ("chunks_remaining", "rem"),
        ("tput_7", "tput[7]"),
        ("delay_0", "d[0]"),
        ("size_5", "s[5]"),
    ],
)
def test_short_name(feature: str, expected: str) -> None:
    """Observation features have compact names in exported code."""
    assert short_name(feature) == expected


def test_legend_covers_indexed_names() -> None:
    """Indexed families are described once."""
    entries = legend()

    assert "index 7 is the latest" in entries["tput[i]"]
    assert set(entries) == {"last_q", "b", "rem", "tput[i]", "d[i]", "s[i]"}


def test_exported_code_decides_like_the_tree(manifest: VideoManifest) -> None:
    """Running the code text agrees with walking the tree on every visited state."""
    log, observations = rollout(BbaPolicy(), synth_trace("markov", 4, 200), manifest)
    binarizer, data = binarize(
        RawDataset.from_observations(observations, [row.level for row in log.rows]),
        max_thresholds_per_feature=4,
    )
    tree = train_greedy_tree(data, 4)
    code = tree_to_code(tree, binarizer, manifest)

    for observation in observations:
        assert evaluate_code(code.text, observation, manifest) == tree_decide(tree, observation, binarizer)


def test_evaluate_code_skips_the_legend(manifest: VideoManifest) -> None:
    """Comment lines are ignored."""
    code = tree_to_code(TREE, BINARIZER, manifest)

    assert evaluate_code(code.with_legend(), observe(initial_state(), manifest), manifest) == 0


@pytest.mark.parametrize(
    "text",
    [
        "if b < 0.5:\n    return 300\n",
        "if b < 0.5:\n  return 300\nelse:\n  return 750\n",
        "return 300\nreturn 750\n",
        "while b < 0.5:\n    return 300\n",
        "",
    ],
)
def test_parse_code_rejects_malformed_text(text: str) -> None:
    """Missing else, wrong indentation, trailing lines and unknown statements are refused."""
    with pytest.raises(MalformedTreeError):
        parse_code(text)


def test_evaluate_code_rejects_unknown_names_and_bitrates(manifest: VideoManifest) -> None:
    """Names must be observation features and returns must be ladder bitrates."""
    observation = observe(initial_state(), manifest)
    with pytest.raises(MalformedTreeError):
        evaluate_code("if rtt < 0.5:\n    return 300\nelse:\n    return 750\n", observation, manifest)
    with pytest.raises(MalformedTreeError):
        evaluate_code("if tput[9] < 0.5:\n    return 300\nelse:\n    return 750\n", observation, manifest)
    with pytest.raises(MalformedTreeError):
        evaluate_code("return 1000\n", observation, manifest)


@pytest.mark.slow
def test_exported_code_decides_like_every_tree_of_a_rashomon_set(manifest: VideoManifest) -> None:
    """Each tree of a Rashomon set and its code agree on 1000 fuzzed observations, thresholds included."""
    log, observations = rollout(BbaPolicy(), synth_trace("low", 9, 200), manifest)
    _, full = binarize(
        RawDataset.from_observations(observations, [row.level for row in log.rows]),
        max_thresholds_per_feature=2,
    )
    kept = [
        index
        for index, column in enumerate(full.binarizer.columns)
        if column.feature_name in {"last_quality", "buffer", "tput_7", "delay_7"}
    ]
    data = full.select_columns(kept)
    binarizer = data.binarizer
    trees = enumerate_rashomon(data, 0.02, 0.1, 2).trees
    assert trees

    rng = np.random.default_rng(31)
    width = len(feature_names(manifest.n_levels))
    thresholds = np.array([column.threshold for column in binarizer.columns])
    fuzzed = []
    for _ in range(1000):
        vector = rng.uniform(0.0, 1.5, size=width)
        on_threshold = rng.random(width) < 0.2
        vector[on_threshold] = rng.choice(thresholds, size=int(on_threshold.sum()))
        fuzzed.append(Observation.from_vector(vector, manifest.n_levels))

    for tree in trees:
        code = tree_to_code(tree, binarizer, manifest)
        for observation in fuzzed:
            assert evaluate_code(code.text, observation, manifest) == tree_decide(tree, observation, binarizer)
