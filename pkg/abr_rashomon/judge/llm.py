"""LLM-backed pairwise comprehensibility judging."""

from __future__ import annotations

import re
from collections import Counter
from functools import lru_cache

import jinja2
from loguru import logger
from typing_extensions import override

from abr_rashomon import PROMPTS_FOLDER_PATH
from abr_rashomon.consts import MAX_PARSE_ATTEMPTS
from abr_rashomon.errors import JudgeParseError
from abr_rashomon.judge.backends import ChatClient
from abr_rashomon.judge.messages import Contestant, Exchange, JudgeBackend, Preference, Verdict

COMPARE_TEMPLATE = "compare.txt.j2"
FEW_SHOT_TEMPLATE = "few_shot.txt.j2"
ADJUST_TEMPLATE = "adjust.txt.j2"

_FIRST_WORD = re.compile(r"^\W*([A-Za-z]+)")


@lru_cache(maxsize=1)
def prompt_environment() -> jinja2.Environment:
    """The jinja environment over the packaged prompt folder."""
    return jinja2.Environment(
        loader=jinja2.FileSystemLoader(str(PROMPTS_FOLDER_PATH)),
        autoescape=False,
        undefined=jinja2.StrictUndefined,
        keep_trailing_newline=False,
    )


def render_prompt(template_name: str, **context: object) -> str:
    """Render one of the packaged prompt templates."""
    return prompt_environment().get_template(template_name).render(**context)


def comparison_prompt(code_one: str, code_two: str, few_shot: bool) -> str:
    """The comparison prompt, optionally preceded by the few-shot preamble."""
    prompt = render_prompt(COMPARE_TEMPLATE, tree1=code_one, tree2=code_two)
    if few_shot:
        prompt = render_prompt(FEW_SHOT_TEMPLATE) + "\n" + prompt
    return prompt


def parse_preference(reply: str) -> Preference | None:
    """TREEONE/TREETWO from the reply's first word, case-insensitively; None if it is neither."""
    match = _FIRST_WORD.match(reply)
    if match is None:
        return None
    word = match.group(1).upper()
    if word == Preference.TREEONE:
        return Preference.TREEONE
    if word == Preference.TREETWO:
        return Preference.TREETWO
    return None


def _ask_once(client: ChatClient, prompt: str, exchanges: list[Exchange]) -> tuple[Preference, str]:
    reply = ""
    for attempt in range(MAX_PARSE_ATTEMPTS):
        reply = client.complete(prompt)
        exchanges.append(Exchange(backend=client.name, prompt=prompt, reply=reply))
        preference = parse_preference(reply)
        if preference is not None:
            return preference, reply
        logger.debug(f"{client.name}: unparseable reply on attempt {attempt + 1}: {reply[:80]!r}")
    raise JudgeParseError(reply)


def llm_compare(
    client: ChatClient,
    code_one: str,
    code_two: str,
    *,
    few_shot: bool = False,
    self_consistency: int = 1,
) -> Verdict:
    """Ask one model which tree is more comprehensible.

    With `self_consistency` > 1 the query is repeated that many times and the majority answer wins. Each query
    gets up to `MAX_PARSE_ATTEMPTS` tries to start with a keyword.

    Raises:
        JudgeParseError: If a query never yields a parseable reply; carries the last raw reply.
        JudgeTransportError: If the client cannot reach the provider.
    """
    if self_consistency < 1 or self_consistency % 2 == 0:
        raise ValueError(f"self_consistency must be a positive odd number, got {self_consistency}")

    prompt = comparison_prompt(code_one, code_two, few_shot)
    exchanges: list[Exchange] = []
    answers: list[tuple[Preference, str]] = [_ask_once(client, prompt, exchanges) for _ in range(self_consistency)]

    counts = Counter(preference for preference, _ in answers)
    winner = Preference.TREEONE if counts[Preference.TREEONE] > counts[Preference.TREETWO] else Preference.TREETWO
    rationale = next(reply for preference, reply in answers if preference == winner)
    return Verdict(preference=winner, rationale=rationale.strip(), judge_id=client.name, exchanges=exchanges)


class LlmJudge(JudgeBackend):
    """A chat model used as a tournament judge."""

    def __init__(self, client: ChatClient) -> None:
        """Initialise the judge."""
        self.client = client
        self.judge_id = client.name

    @override
    def compare(self, first: Contestant, second: Contestant, *, few_shot: bool, self_consistency: int) -> Verdict:
        return llm_compare(
            self.client,
            first.code,
            second.code,
            few_shot=few_shot,
            self_consistency=self_consistency,
        )
