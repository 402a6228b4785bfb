"""Caption triple sources for query preparation.

The wire client speaks the engine's caption-service protocol
(POST /v1/captions, JSON body with query_id / modification_text /
image_id or image_b64; 200 response with target_description / include /
exclude). The mock mirrors the deterministic behavior the engine's own
mock guarantees, so fixtures built by either tool are interchangeable.
"""
from __future__ import annotations

import os
import time

import requests

ENV_SERVICE_URL = "CAPTION_SERVICE_URL"


class CaptionError(Exception):
    def __init__(self, message, retriable=False):
        self.retriable = retriable
        super().__init__(message)


class MockCaptions:
    def generate(self, query_id: str, image_ref: str, mod_text: str) -> dict:
        if not mod_text:
            raise CaptionError("modification text must be non-empty")
        return {
            "target_description": f"image {image_ref} changed so that {mod_text}",
            "include": mod_text,
            "exclude": f"original attributes of {image_ref} replaced by: {mod_text}",
        }


class WireCaptions:
    def __init__(self, base_url=None, max_retries=2, backoff=0.5, timeout=30.0):
        url = base_url or os.environ.get(ENV_SERVICE_URL)
        if not url:
            raise CaptionError(f"{ENV_SERVICE_URL} is not set")
        self.base_url = url.rstrip("/")
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout

    def generate(self, query_id: str, image_ref: str, mod_text: str) -> dict:
        payload = {
            "query_id": query_id,
            "modification_text": mod_text,
            "image_id": image_ref,
        }
        attempt = 0
        while True:
            try:
                return self._once(payload)
            except CaptionError as err:
                if not err.retriable or attempt >= self.max_retries:
                    raise
                time.sleep(self.backoff * (2 ** attempt))
                attempt += 1

    def _once(self, payload):
        try:
            resp = requests.post(
                f"{self.base_url}/v1/captions", json=payload, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise CaptionError(f"transport failure: {exc}", retriable=True)
        if 500 <= resp.status_code < 600:
            raise CaptionError(f"server error {resp.status_code}", retriable=True)
        if resp.status_code != 200:
            raise CaptionError(f"rejected with status {resp.status_code}")
        body = resp.json()
        for key in ("target_description", "include", "exclude"):
            if not body.get(key):
                raise CaptionError(f"response missing {key}")
        return {k: body[k] for k in ("target_description", "include", "exclude")}


def make_caption_source(kind: str):
    if kind == "mock":
        return MockCaptions()
    if kind == "wire":
        return WireCaptions()
    raise ValueError(f"unknown caption source {kind!r}")
