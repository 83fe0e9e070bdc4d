import pytest
import requests

from abr_rashomon.errors import JudgeParseError, JudgeTransportError, MissingCredentialsError
from abr_rashomon.features.binarize import Binarizer
from abr_rashomon.judge.backends import (
    AnthropicChatClient,
    OpenAIChatClient,
    ReplayChatClient,
    is_known_backend_name,
    make_chat_client,
)
from abr_rashomon.judge.llm import LlmJudge, comparison_prompt, llm_compare, parse_preference
from abr_rashomon.judge.messages import Contestant, Exchange, Preference
from abr_rashomon.sparse_tree.tree import DecisionTree, LeafNode
from stubs import FakeResponse, FakeSession, ScriptedChatClient

CODE_ONE = "return 300\n"
CODE_TWO = "if b < 0.5:\n    return 300\nelse:\n    return 750\n"


@pytest.mark.parametrize(
    ("reply", "expected"),
    [
        ("TREEONE, because it is shallower.", Preference.TREEONE),
        ("treetwo is easier", Preference.TREETWO),
        ("**TREEONE** is simpler", Preference.TREEONE),
        ("  TreeTwo.", Preference.TREETWO),
        ("I prefer TREEONE", None),
        ("TIE", None),
        ("", None),
    ],
)
def test_parse_preference(reply: str, expected: Preference | None) -> None:
    """Only the first word counts, case-insensitively."""
    assert parse_preference(reply) == expected


def test_comparison_prompt() -> None:
    """Both trees appear in order; few-shot adds the developer preamble."""
    plain = comparison_prompt(CODE_ONE, CODE_TWO, few_shot=False)
    few_shot = comparison_prompt(CODE_ONE, CODE_TWO, few_shot=True)

    assert plain.index(CODE_ONE) < plain.index(CODE_TWO)
    assert "TREEONE" in plain
    assert few_shot.endswith(plain)
    assert few_shot.startswith("As a developer in the field of streaming media")


def test_llm_compare_single_query() -> None:
    """The reply decides and becomes the rationale; the exchange is recorded."""
    client = ScriptedChatClient(["TREETWO is easier to follow. "], name="openai:test")

    verdict = llm_compare(client, CODE_ONE, CODE_TWO)

    assert verdict.preference == Preference.TREETWO
    assert verdict.rationale == "TREETWO is easier to follow."
    assert verdict.judge_id == "openai:test"
    assert [exchange.reply for exchange in verdict.exchanges] == ["TREETWO is easier to follow. "]


def test_llm_compare_reprompts_unparseable_replies() -> None:
    """A reply without the keyword is retried."""
    client = ScriptedChatClient(["Let me think.", "TREEONE"])

    verdict = llm_compare(client, CODE_ONE, CODE_TWO)

    assert verdict.preference == Preference.TREEONE
    assert len(verdict.exchanges) == 2
    assert client.prompts[0] == client.prompts[1]


def test_llm_compare_gives_up_after_three_attempts() -> None:
    """Three unparseable replies raise with the last one."""
    client = ScriptedChatClient(["one", "two", "three", "TREEONE"])

    with pytest.raises(JudgeParseError) as exc_info:
        llm_compare(client, CODE_ONE, CODE_TWO)

    assert exc_info.value.raw_reply == "three"


def test_llm_compare_self_consistency_majority() -> None:
    """The majority of repeated queries wins, with the first winning reply as rationale."""
    client = ScriptedChatClient(["TREETWO first", "TREEONE second", "TREEONE third"])

    verdict = llm_compare(client, CODE_ONE, CODE_TWO, self_consistency=3)

    assert verdict.preference == Preference.TREEONE
    assert verdict.rationale == "TREEONE second"
    assert len(client.prompts) == 3


@pytest.mark.parametrize("self_consistency", [0, 2])
def test_llm_compare_rejects_even_repeat_counts(self_consistency: int) -> None:
    """Repeat counts must be positive and odd."""
    with pytest.raises(ValueError):
        llm_compare(ScriptedChatClient([]), CODE_ONE, CODE_TWO, self_consistency=self_consistency)


def test_llm_judge_uses_the_exported_code() -> None:
    """The judge sends the contestants' code, first tree first."""
    binarizer = Binarizer(feature_names=["buffer"], columns=[])
    tree = DecisionTree(root=LeafNode(label=0))
    first = Contestant(key="a", tree=tree, code=CODE_TWO, binarizer=binarizer)
    second = Contestant(key="b", tree=tree, code=CODE_ONE, binarizer=binarizer)
    client = ScriptedChatClient(["TREEONE"], name="anthropic:test")

    verdict = LlmJudge(client).compare(first, second, few_shot=False, self_consistency=1)

    assert verdict.preference == Preference.TREEONE
    assert client.prompts[0].index(CODE_TWO) < client.prompts[0].index(CODE_ONE)


def test_replay_client() -> None:
    """Recorded replies are served per prompt in order, and running out is an error."""
    client = ReplayChatClient(
        [
            Exchange(backend="openai:m", prompt="p", reply="TREEONE"),
            Exchange(backend="openai:m", prompt="p", reply="TREETWO"),
        ],
    )

    assert client.name == "openai:m"
    assert [client.complete("p"), client.complete("p")] == ["TREEONE", "TREETWO"]
    with pytest.raises(JudgeTransportError):
        client.complete("p")
    with pytest.raises(JudgeTransportError):
        client.complete("q")


def test_http_client_requires_an_api_key(monkeypatch: pytest.MonkeyPatch) -> None:
    """Keys come only from the environment."""
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)

    with pytest.raises(MissingCredentialsError):
        OpenAIChatClient("gpt-4o")


def test_openai_client_retries_transient_failures(monkeypatch: pytest.MonkeyPatch) -> None:
    """Retryable statuses and connection errors are retried before the reply is read."""
    monkeypatch.setenv("OPENAI_API_KEY", "sk-test")
    monkeypatch.setenv("OPENAI_BASE_URL", "http://localhost:9999/v1/")
    session = FakeSession(
        [
            FakeResponse(503),
            requests.ConnectionError("refused"),
            FakeResponse(200, {"choices": [{"message": {"content": "TREEONE"}}]}),
        ],
    )
    client = OpenAIChatClient("gpt-4o", backoff_base_s=0.0, session=session)  # type: ignore[arg-type]

    assert client.complete("hello") == "TREEONE"
    assert client.name == "openai:gpt-4o"
    assert len(session.requests) == 3
    request = session.requests[-1]
    assert request["url"] == "http://localhost:9999/v1/chat/completions"
    assert request["headers"]["Authorization"] == "Bearer sk-test"
    assert request["json"]["messages"] == [{"role": "user", "content": "hello"}]
    assert request["json"]["temperature"] == 0.0


def test_anthropic_client_joins_text_blocks(monkeypatch: pytest.MonkeyPatch) -> None:
    """Only text blocks make up the reply."""
    monkeypatch.setenv("ANTHROPIC_API_KEY", "key")
    payload = {"content": [{"type": "text", "text": "TREE"}, {"type": "tool_use"}, {"type": "text", "text": "TWO"}]}
    session = FakeSession([FakeResponse(200, payload)])
    client = AnthropicChatClient("claude", session=session)  # type: ignore[arg-type]

    assert client.complete("hello") == "TREETWO"
    assert session.requests[0]["headers"]["x-api-key"] == "key"
    assert session.requests[0]["url"].endswith("/v1/messages")


@pytest.mark.parametrize(
    "responses",
    [
        [FakeResponse(401, text="unauthorized")],
        [FakeResponse(200, text="not json")],
        [FakeResponse(429), FakeResponse(429), FakeResponse(429)],
    ],
)
def test_http_client_transport_errors(
    monkeypatch: pytest.MonkeyPatch,
    responses: list[FakeResponse],
) -> None:
    """Rejections, malformed bodies and exhausted retries are transport errors."""
    monkeypatch.setenv("OPENAI_API_KEY", "sk-test")
    session = FakeSession(list(responses))
    client = OpenAIChatClient("gpt-4o", max_retries=2, backoff_base_s=0.0, session=session)  # type: ignore[arg-type]

    with pytest.raises(JudgeTransportError):
        client.complete("hello")


def test_make_chat_client(monkeypatch: pytest.MonkeyPatch) -> None:
    """Backends are named `<provider>:<model>`."""
    monkeypatch.setenv("ANTHROPIC_API_KEY", "key")

    assert isinstance(make_chat_client("anthropic:claude"), AnthropicChatClient)
    with pytest.raises(ValueError):
        make_chat_client("gemini:pro")
    with pytest.raises(ValueError):
        make_chat_client("openai:")


def test_is_known_backend_name() -> None:
    """Name shapes are checked without credentials."""
    assert is_known_backend_name("heuristic")
    assert is_known_backend_name("openai:gpt-4o")
    assert not is_known_backend_name("openai")
    assert not is_known_backend_name("gemini:pro")
