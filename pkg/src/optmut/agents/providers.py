"""LLM provider implementations.

ScriptedProvider replays fixture responses keyed by a hash of the exact
prompt, which keeps the whole agent workflow runnable (and reproducible)
offline. HttpChatProvider speaks the OpenAI-compatible chat-completions
wire protocol against any configured endpoint.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from pathlib import Path

from ..errors import ProviderUnavailable

DEFAULT_TEMPERATURE = 1.0
API_KEY_ENV = "OPTMUT_API_KEY"


def prompt_key(messages) -> str:
    """Stable fingerprint of a rendered prompt (message list)."""
    canon = json.dumps(messages, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _estimate_tokens(text: str) -> int:
    return len(text.split())


class ScriptedProvider:
    """Fixture-backed provider: one response file per prompt hash.

    Unknown prompts raise ProviderUnavailable with the missing key so the
    fixture can be authored; nothing is ever guessed.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise ProviderUnavailable(f"fixture directory {directory} does not exist")

    def complete(self, messages, *, temperature=DEFAULT_TEMPERATURE, max_tokens=4096) -> str:
        text, _ = self.complete_with_usage(
            messages, temperature=temperature, max_tokens=max_tokens
        )
        return text

    def complete_with_usage(self, messages, *, temperature=DEFAULT_TEMPERATURE, max_tokens=4096):
        key = prompt_key(messages)
        path = self.directory / f"{key}.txt"
        if not path.is_file():
            known = sorted(p.stem for p in self.directory.glob("*.txt"))
            raise ProviderUnavailable(
                f"no scripted response for prompt {key} in {self.directory} "
                f"({len(known)} fixture(s) present)"
            )
        text = path.read_text("utf-8")
        usage = {
            "prompt_tokens": _estimate_tokens(json.dumps(messages)),
            "completion_tokens": _estimate_tokens(text),
        }
        return text, usage

    @staticmethod
    def store(directory, messages, response: str) -> str:
        """Author a fixture response for the given prompt; returns the key."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        key = prompt_key(messages)
        (directory / f"{key}.txt").write_text(response, "utf-8")
        return key


class HttpChatProvider:
    """OpenAI-compatible chat-completions client with bounded retries.

    The API key is read from the OPTMUT_API_KEY environment variable; a
    custom ``transport`` callable (url, headers, payload, timeout) -> dict
    can be injected for testing.
    """

    RETRYABLE_STATUS = (429, 500, 502, 503, 504)

    def __init__(self, endpoint: str, model: str, *, temperature=DEFAULT_TEMPERATURE,
                 timeout: float = 60.0, max_attempts: int = 3, transport=None,
                 api_key_env: str = API_KEY_ENV):
        self.endpoint = endpoint.rstrip("/")
        if not self.endpoint.endswith("/chat/completions"):
            self.endpoint += "/chat/completions"
        self.model = model
        self.temperature = temperature
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.api_key_env = api_key_env
        self._transport = transport or self._http_post

    def _http_post(self, url, headers, payload, timeout):
        import requests

        resp = requests.post(url, headers=headers, json=payload, timeout=timeout)
        if resp.status_code in self.RETRYABLE_STATUS:
            raise _Retryable(f"HTTP {resp.status_code}")
        resp.raise_for_status()
        return resp.json()

    def complete(self, messages, *, temperature=None, max_tokens=4096) -> str:
        text, _ = self.complete_with_usage(
            messages, temperature=temperature, max_tokens=max_tokens
        )
        return text

    def complete_with_usage(self, messages, *, temperature=None, max_tokens=4096):
        api_key = os.environ.get(self.api_key_env, "")
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        payload = {
            "model": self.model,
            "messages": list(messages),
            "temperature": self.temperature if temperature is None else temperature,
            "max_tokens": max_tokens,
        }
        last = None
        for attempt in range(self.max_attempts):
            try:
                data = self._transport(self.endpoint, headers, payload, self.timeout)
                content = data["choices"][0]["message"]["content"]
                usage = data.get("usage") or {
                    "prompt_tokens": _estimate_tokens(json.dumps(messages)),
                    "completion_tokens": _estimate_tokens(content),
                }
                return content, usage
            except _Retryable as exc:
                last = exc
                time.sleep(min(2.0, 0.25 * (2 ** attempt)))
            except (KeyError, IndexError, TypeError) as exc:
                raise ProviderUnavailable(f"malformed completion response: {exc!r}")
            except Exception as exc:  # connection errors from requests
                last = exc
                time.sleep(min(2.0, 0.25 * (2 ** attempt)))
        raise ProviderUnavailable(f"provider failed after {self.max_attempts} attempts: {last}")


class _Retryable(Exception):
    pass
