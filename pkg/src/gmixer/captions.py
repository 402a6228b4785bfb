"""Caption triple generation: target description plus include/exclude
attribute captions for one query.

Two providers share the contract: a deterministic mock for tests and
offline runs, and an HTTP client for a real caption service. The engine
itself never interprets caption text; embeddings arrive separately.
"""
from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass

import requests

from .errors import GenerationError, InvalidConfigError

ENV_SERVICE_URL = "CAPTION_SERVICE_URL"

DEFAULT_SYSTEM_TEXT = (
    "You are given a reference image and a modification request. "
    "Answer with a JSON object with keys target_description, include, exclude."
)
DEFAULT_USER_TEMPLATE = (
    "Write one sentence describing the image implied by applying the request "
    "'{modification_text}' to the attached reference image, filling in any "
    "subject the request leaves unstated. Then list the attributes that must "
    "appear (include) and the attributes that must not appear (exclude)."
)


@dataclass(frozen=True)
class CaptionBundle:
    target_desc: str
    include: str
    exclude: str


@dataclass(frozen=True)
class PromptTemplate:
    system_text: str = DEFAULT_SYSTEM_TEXT
    user_template: str = DEFAULT_USER_TEMPLATE

    def __post_init__(self):
        if self.user_template.count("{modification_text}") != 1:
            raise InvalidConfigError(
                "user_template must contain {modification_text} exactly once"
            )


class MockCaptionProvider:
    """Deterministic caption source: a pure function of its inputs, so
    fixtures and reruns are byte-identical across platforms."""

    def generate_captions(self, image_ref: str, mod_text: str) -> CaptionBundle:
        if not mod_text:
            raise InvalidConfigError("modification text must be non-empty")
        return CaptionBundle(
            target_desc=f"image {image_ref} changed so that {mod_text}",
            include=mod_text,
            exclude=f"original attributes of {image_ref} replaced by: {mod_text}",
        )


class WireCaptionProvider:
    """HTTP client for the caption service.

    POSTs to <base_url>/v1/captions and expects a JSON body with
    target_description / include / exclude. Transport failures and 5xx
    responses are retried up to `max_retries` times with exponential
    backoff; malformed payloads and 4xx responses are not.
    """

    def __init__(
        self,
        base_url: str | None = None,
        max_retries: int = 2,
        backoff: float = 0.5,
        max_in_flight: int = 4,
        timeout: float = 30.0,
    ):
        url = base_url or os.environ.get(ENV_SERVICE_URL)
        if not url:
            raise InvalidConfigError(
                f"wire caption provider needs {ENV_SERVICE_URL} or an explicit URL"
            )
        self.base_url = url.rstrip("/")
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout
        self._slots = threading.BoundedSemaphore(max_in_flight)

    def generate_captions(
        self,
        image_ref: str,
        mod_text: str,
        query_id: str = "",
        image_b64: str | None = None,
    ) -> CaptionBundle:
        if not mod_text:
            raise InvalidConfigError("modification text must be non-empty")
        payload: dict = {"query_id": query_id, "modification_text": mod_text}
        if image_b64 is not None:
            payload["image_b64"] = image_b64
        else:
            payload["image_id"] = image_ref

        attempt = 0
        while True:
            try:
                return self._request_once(payload)
            except GenerationError as err:
                if not err.retriable or attempt >= self.max_retries:
                    raise
                time.sleep(self.backoff * (2 ** attempt))
                attempt += 1

    def _request_once(self, payload: dict) -> CaptionBundle:
        with self._slots:
            try:
                resp = requests.post(
                    f"{self.base_url}/v1/captions", json=payload, timeout=self.timeout
                )
            except requests.RequestException as exc:
                raise GenerationError(f"transport failure: {exc}", retriable=True)

        if 500 <= resp.status_code < 600:
            raise GenerationError(f"server error {resp.status_code}", retriable=True)
        if resp.status_code != 200:
            raise GenerationError(
                f"request rejected with status {resp.status_code}: {resp.text[:200]}",
                retriable=False,
            )
        try:
            body = resp.json()
        except ValueError:
            raise GenerationError("response is not JSON", retriable=False)
        missing = [
            key for key in ("target_description", "include", "exclude")
            if not isinstance(body.get(key), str) or not body.get(key)
        ]
        if missing:
            raise GenerationError(
                f"response missing fields: {', '.join(missing)}", retriable=False
            )
        return CaptionBundle(
            target_desc=body["target_description"],
            include=body["include"],
            exclude=body["exclude"],
        )


def make_provider(kind: str, **kwargs):
    if kind == "mock":
        return MockCaptionProvider()
    if kind == "wire":
        return WireCaptionProvider(**kwargs)
    raise InvalidConfigError(f"unknown caption provider {kind!r}")
