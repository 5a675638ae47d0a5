"""Chat-completion clients: a live HTTP client and a scripted replay client."""

from __future__ import annotations

import logging
import os
import re
import time
from dataclasses import dataclass
from pathlib import Path

import httpx

from ..dsl.parser import DslError, ScoreProgram, parse_program
from .prompts import PromptBundle

log = logging.getLogger(__name__)

RESPONSE_SEPARATOR = "---RESPONSE---"
_FENCE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)


class LlmError(RuntimeError):
    """The model could not be reached or returned something unusable."""


@dataclass(frozen=True)
class LlmClientConfig:
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-4o-mini"
    temperature: float = 0.7
    top_p: float = 0.95
    max_tokens: int = 8192
    api_key_env: str = "LLM_API_KEY"
    timeout: float = 120.0
    retries: int = 3
    backoff: float = 1.0
    variant: str = "live"  # live | scripted
    fixture: str | None = None

    def __post_init__(self):
        if self.variant not in ("live", "scripted"):
            raise ValueError(f"unknown client variant {self.variant!r}")
        if self.variant == "scripted" and not self.fixture:
            raise ValueError("the scripted client needs a fixture file")


class LiveClient:
    def __init__(self, config: LlmClientConfig, transport: httpx.BaseTransport | None = None, sleep=time.sleep):
        self.config = config
        self.sleep = sleep
        self._http = httpx.Client(timeout=config.timeout, transport=transport)

    def complete(self, prompt: PromptBundle) -> str:
        cfg = self.config
        body = {
            "model": cfg.model,
            "messages": prompt.messages(),
            "temperature": cfg.temperature,
            "top_p": cfg.top_p,
            "max_tokens": cfg.max_tokens,
        }
        headers = {}
        key = os.environ.get(cfg.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        last = "no attempt made"
        for attempt in range(cfg.retries + 1):
            if attempt:
                self.sleep(cfg.backoff * 2 ** (attempt - 1))
            try:
                resp = self._http.post(cfg.endpoint, json=body, headers=headers)
            except httpx.TransportError as e:
                last = f"transport error: {e!r}"
                log.warning("llm attempt %d failed: %s", attempt + 1, last)
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last = f"HTTP {resp.status_code}"
                log.warning("llm attempt %d failed: %s", attempt + 1, last)
                continue
            if resp.status_code != 200:
                raise LlmError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as e:
                raise LlmError(f"malformed completion response: {e!r}") from None
        raise LlmError(f"gave up after {cfg.retries + 1} attempts: {last}")


class ScriptedClient:
    """Replays responses from a fixture file, one per call, in file order."""

    def __init__(self, fixture, start: int = 0):
        text = Path(fixture).read_text()
        parts = re.split(rf"^{re.escape(RESPONSE_SEPARATOR)}[ \t]*$", text, flags=re.MULTILINE)
        self.responses = [p.strip("\n") for p in parts if p.strip()]
        self.calls = start

    def complete(self, prompt: PromptBundle) -> str:
        if self.calls >= len(self.responses):
            self.calls += 1
            raise LlmError("scripted fixture exhausted")
        out = self.responses[self.calls]
        self.calls += 1
        return out


def make_client(config: LlmClientConfig, start: int = 0):
    if config.variant == "scripted":
        return ScriptedClient(config.fixture, start=start)
    return LiveClient(config)


def query_llm(client, prompt: PromptBundle) -> str:
    return client.complete(prompt)


def parse_llm_response(text: str) -> ScoreProgram:
    """Parse the last fenced code block of a model reply."""
    blocks = _FENCE.findall(text)
    if not blocks:
        raise DslError("no fenced code block in response")
    return parse_program(blocks[-1])
