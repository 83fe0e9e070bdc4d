"""Chat-completion clients for the LLM judges.

Every provider is reached with plain HTTPS requests through one client shape; only the request body and the way the
reply text is pulled out differ. API keys are read from environment variables and nothing else.
"""

from __future__ import annotations

import os
import time
from abc import ABC, abstractmethod
from collections import defaultdict, deque

import certifi
import requests
from loguru import logger
from typing_extensions import override

from abr_rashomon.consts import (
    ANTHROPIC_API_VERSION,
    ANTHROPIC_DEFAULT_BASE_URL,
    DEFAULT_BACKOFF_BASE_S,
    DEFAULT_HTTP_TIMEOUT_S,
    DEFAULT_MAX_RETRIES,
    OPENAI_DEFAULT_BASE_URL,
)
from abr_rashomon.errors import JudgeTransportError, MissingCredentialsError
from abr_rashomon.judge.messages import Exchange

_RETRYABLE_STATUS = {408, 409, 429, 500, 502, 503, 504, 529}


class ChatClient(ABC):
    """Sends one user prompt and returns the reply text."""

    name: str = "chat"

    @abstractmethod
    def complete(self, prompt: str) -> str:
        """Return the model's reply to `prompt`."""


class HttpChatClient(ChatClient):
    """Shared request, retry and backoff handling for HTTP chat APIs."""

    provider: str = "http"
    api_key_env: str = ""
    base_url_env: str = ""
    default_base_url: str = ""

    def __init__(
        self,
        model: str,
        *,
        temperature: float = 0.0,
        max_tokens: int = 1024,
        timeout_s: float = DEFAULT_HTTP_TIMEOUT_S,
        max_retries: int = DEFAULT_MAX_RETRIES,
        backoff_base_s: float = DEFAULT_BACKOFF_BASE_S,
        session: requests.Session | None = None,
    ) -> None:
        """Initialise the client; the API key must already be in the environment.

        Raises:
            MissingCredentialsError: If the provider's key variable is unset.
        """
        api_key = os.getenv(self.api_key_env)
        if not api_key:
            raise MissingCredentialsError(f"{self.api_key_env} is not set")
        self._api_key = api_key
        self.base_url = (os.getenv(self.base_url_env) or self.default_base_url).rstrip("/")
        self.model = model
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.timeout_s = timeout_s
        self.max_retries = max_retries
        self.backoff_base_s = backoff_base_s
        self.session = session or requests.Session()
        self.name = f"{self.provider}:{model}"

    @abstractmethod
    def _endpoint(self) -> str: ...

    @abstractmethod
    def _headers(self) -> dict[str, str]: ...

    @abstractmethod
    def _body(self, prompt: str) -> dict: ...

    @abstractmethod
    def _reply_text(self, payload: dict) -> str: ...

    @override
    def complete(self, prompt: str) -> str:
        """Post the prompt, retrying transient failures with exponential backoff.

        Raises:
            JudgeTransportError: When retries are exhausted or the provider rejects the request outright.
        """
        last_error = ""
        for attempt in range(self.max_retries + 1):
            if attempt:
                delay = self.backoff_base_s * 2 ** (attempt - 1)
                logger.warning(f"{self.name}: retry {attempt}/{self.max_retries} in {delay:.1f}s ({last_error})")
                time.sleep(delay)
            try:
                response = self.session.post(
                    self._endpoint(),
                    headers=self._headers(),
                    json=self._body(prompt),
                    timeout=self.timeout_s,
                    verify=certifi.where(),
                )
            except requests.RequestException as e:
                last_error = f"{type(e).__name__}: {e}"
                continue

            logger.debug(f"{self.name}: HTTP {response.status_code} after attempt {attempt + 1}")
            if response.status_code in _RETRYABLE_STATUS:
                last_error = f"HTTP {response.status_code}"
                continue
            if response.status_code >= 400:
                raise JudgeTransportError(f"{self.name}: HTTP {response.status_code}: {response.text[:300]}")
            try:
                return self._reply_text(response.json())
            except (ValueError, KeyError, IndexError, TypeError) as e:
                raise JudgeTransportError(f"{self.name}: unexpected response shape: {e}") from e

        raise JudgeTransportError(f"{self.name}: giving up after {self.max_retries + 1} attempts ({last_error})")


class OpenAIChatClient(HttpChatClient):
    """OpenAI-compatible `/chat/completions` endpoints."""

    provider = "openai"
    api_key_env = "OPENAI_API_KEY"
    base_url_env = "OPENAI_BASE_URL"
    default_base_url = OPENAI_DEFAULT_BASE_URL

    @override
    def _endpoint(self) -> str:
        return f"{self.base_url}/chat/completions"

    @override
    def _headers(self) -> dict[str, str]:
        return {"Authorization": f"Bearer {self._api_key}", "Content-Type": "application/json"}

    @override
    def _body(self, prompt: str) -> dict:
        return {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }

    @override
    def _reply_text(self, payload: dict) -> str:
        return str(payload["choices"][0]["message"]["content"])


class AnthropicChatClient(HttpChatClient):
    """The Anthropic `/v1/messages` endpoint."""

    provider = "anthropic"
    api_key_env = "ANTHROPIC_API_KEY"
    base_url_env = "ANTHROPIC_BASE_URL"
    default_base_url = ANTHROPIC_DEFAULT_BASE_URL

    @override
    def _endpoint(self) -> str:
        return f"{self.base_url}/v1/messages"

    @override
    def _headers(self) -> dict[str, str]:
        return {
            "x-api-key": self._api_key,
            "anthropic-version": ANTHROPIC_API_VERSION,
            "Content-Type": "application/json",
        }

    @override
    def _body(self, prompt: str) -> dict:
        return {
            "model": self.model,
            "max_tokens": self.max_tokens,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }

    @override
    def _reply_text(self, payload: dict) -> str:
        return "".join(block.get("text", "") for block in payload["content"] if block.get("type") == "text")


class ReplayChatClient(ChatClient):
    """Answers prompts from recorded exchanges, in the order they were recorded.

    Raises `JudgeTransportError` for a prompt with no recording left, so a replay that diverges fails loudly.
    """

    def __init__(self, exchanges: list[Exchange], name: str | None = None) -> None:
        """Initialise the client from the exchanges of one backend."""
        self._replies: dict[str, deque[str]] = defaultdict(deque)
        for exchange in exchanges:
            self._replies[exchange.prompt].append(exchange.reply)
        self.name = name or (exchanges[0].backend if exchanges else "replay")

    @override
    def complete(self, prompt: str) -> str:
        replies = self._replies.get(prompt)
        if not replies:
            raise JudgeTransportError(f"{self.name}: no recorded reply for this prompt")
        return replies.popleft()


PROVIDERS: dict[str, type[HttpChatClient]] = {
    OpenAIChatClient.provider: OpenAIChatClient,
    AnthropicChatClient.provider: AnthropicChatClient,
}


def make_chat_client(spec: str, **kwargs: object) -> HttpChatClient:
    """Build a client from `<provider>:<model>`, e.g. `openai:gpt-4o`.

    Raises:
        ValueError: On an unknown provider or a missing model.
    """
    provider, _, model = spec.partition(":")
    if provider not in PROVIDERS or not model:
        raise ValueError(f"backend must be <provider>:<model> with provider in {sorted(PROVIDERS)}, got {spec!r}")
    return PROVIDERS[provider](model, **kwargs)  # type: ignore[arg-type]


def is_known_backend_name(name: str) -> bool:
    """Whether `name` is `heuristic` or a well-formed `<provider>:<model>`, without checking credentials."""
    if name == "heuristic":
        return True
    provider, _, model = name.partition(":")
    return provider in PROVIDERS and bool(model)
