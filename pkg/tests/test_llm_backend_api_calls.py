"""Talks to a real LLM endpoint. Set `LLM_JUDGE_TEST_BACKEND` (e.g. `openai:gpt-4o-mini`) and the provider's key."""

import os

import pytest

from abr_rashomon.features.binarize import Binarizer
from abr_rashomon.judge.backends import make_chat_client
from abr_rashomon.judge.llm import LlmJudge
from abr_rashomon.judge.messages import Preference
from abr_rashomon.judge.tournament import make_contestants
from abr_rashomon.media.manifest import VideoManifest
from abr_rashomon.sim.player import feature_names
from abr_rashomon.sparse_tree.tree import DecisionTree, LeafNode, SplitNode

BACKEND = os.getenv("LLM_JUDGE_TEST_BACKEND")
API_KEY_ENV = f"{(BACKEND or '').partition(':')[0].upper()}_API_KEY"

pytestmark = pytest.mark.skipif(
    BACKEND is None or not os.getenv(API_KEY_ENV),
    reason="LLM_JUDGE_TEST_BACKEND or the provider's API key is not set",
)


def test_llm_judge_compares_a_stump_with_a_deeper_tree(manifest: VideoManifest) -> None:
    """The live model answers with a usable preference and the exchange is recorded."""
    assert BACKEND is not None
    binarizer = Binarizer.from_pairs([(0, 0.2), (1, 0.5), (9, 0.3)], feature_names(6))
    stump = DecisionTree(root=SplitNode(column=1, left=LeafNode(label=0), right=LeafNode(label=5)))
    deep = DecisionTree(
        root=SplitNode(
            column=1,
            left=SplitNode(column=2, left=LeafNode(label=0), right=LeafNode(label=1)),
            right=SplitNode(column=0, left=LeafNode(label=3), right=LeafNode(label=5)),
        ),
    )
    first, second = make_contestants([stump, deep], binarizer, manifest)

    verdict = LlmJudge(make_chat_client(BACKEND)).compare(first, second, few_shot=True, self_consistency=1)

    assert verdict.preference in (Preference.TREEONE, Preference.TREETWO)
    assert verdict.exchanges
