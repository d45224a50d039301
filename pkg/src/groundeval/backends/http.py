"""HTTP client for the scorer wire protocol.

Endpoints (JSON bodies, UTF-8):

    POST /v1/nli       {"pairs": [{"id", "premise", "hypothesis"}, ...]}
                       -> {"results": [{"id", "entail", "neutral", "contradict"}, ...]}
    POST /v1/embed     {"texts": [{"id", "text"}, ...]}
                       -> {"results": [{"id", "embedding": [...]}, ...]}
    POST /v1/judge     {"id", "candidate", "references": [...]}
                       -> {"id", "verdict"}
    POST /v1/tokenize  {"texts": [{"id", "text"}, ...]}
                       -> {"results": [{"id", "count", "offsets": [[s, e], ...]}, ...]}
    GET  /v1/manifest  -> {"nli_model_id", "embed_model_id", "judge_model_id",
                           "max_sequence_tokens", "version"}

Responses echo request ids, so results are re-associated by id and the
client is indifferent to response ordering. Large batches are split into
sub-batches and may be issued concurrently; results are identical either
way. Requests are idempotent reads, so failed calls are retried with
exponential backoff before giving up.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Sequence

import httpx
import numpy as np

from ..errors import ProtocolError, TransportError
from .base import NliTriple, ScorerBackend, TokenSpans, l2_normalize

DEFAULT_MAX_SEQUENCE_TOKENS = 512


class HttpScorerBackend(ScorerBackend):
    def __init__(
        self,
        base_url: str,
        token: str | None = None,
        timeout: float = 30.0,
        retries: int = 3,
        backoff_start: float = 0.1,
        max_batch_size: int = 128,
        max_parallel: int = 4,
        transport: httpx.BaseTransport | None = None,
    ):
        headers = {"Content-Type": "application/json"}
        if token:
            headers["Authorization"] = f"Bearer {token}"
        self._client = httpx.Client(
            base_url=base_url.rstrip("/"), headers=headers,
            timeout=timeout, transport=transport,
        )
        self._retries = max(1, retries)
        self._backoff_start = backoff_start
        self._max_batch_size = max(1, max_batch_size)
        self._max_parallel = max(1, max_parallel)
        self._manifest: dict[str, Any] | None = None

    # -- manifest ---------------------------------------------------------

    @property
    def identifier(self) -> str:
        manifest = self.manifest()
        ids = [manifest.get(key) for key in ("nli_model_id", "embed_model_id", "judge_model_id")]
        if any(ids):
            return "+".join(str(i) for i in ids if i)
        return f"http:{self._client.base_url}"

    @property
    def max_sequence_tokens(self) -> int:
        return int(self.manifest().get("max_sequence_tokens", DEFAULT_MAX_SEQUENCE_TOKENS))

    def manifest(self) -> dict[str, Any]:
        if self._manifest is None:
            try:
                self._manifest = self._request("GET", "/v1/manifest")
            except (TransportError, ProtocolError):
                self._manifest = {}
        return self._manifest

    def ping(self) -> bool:
        try:
            self._request("GET", "/v1/manifest")
            return True
        except (TransportError, ProtocolError):
            return False

    # -- scoring ----------------------------------------------------------

    def nli_batch(self, pairs: Sequence[tuple[str, str]]) -> list[NliTriple]:
        items = [
            {"id": str(i), "premise": premise, "hypothesis": hypothesis}
            for i, (premise, hypothesis) in enumerate(pairs)
        ]
        rows = self._batched("/v1/nli", "pairs", items)
        triples = []
        for i in range(len(pairs)):
            row = rows[str(i)]
            triples.append(
                NliTriple(
                    float(row["entail"]), float(row["neutral"]), float(row["contradict"])
                ).validate()
            )
        return triples

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, 0))
        items = [{"id": str(i), "text": text} for i, text in enumerate(texts)]
        rows = self._batched("/v1/embed", "texts", items)
        vectors = [np.asarray(rows[str(i)]["embedding"], dtype=np.float64)
                   for i in range(len(texts))]
        dims = {v.shape for v in vectors}
        if len(dims) != 1:
            raise ProtocolError(f"embedding dimensions differ across batch: {sorted(dims)}")
        return l2_normalize(np.stack(vectors))

    def judge(self, candidate: str, references: Sequence[str]) -> str:
        body = {"id": "0", "candidate": candidate, "references": list(references)}
        payload = self._request("POST", "/v1/judge", body)
        if "verdict" not in payload:
            raise ProtocolError(f"judge response missing 'verdict': {payload}")
        return str(payload["verdict"])

    def tokenize_batch(self, texts: Sequence[str]) -> list[TokenSpans]:
        items = [{"id": str(i), "text": text} for i, text in enumerate(texts)]
        rows = self._batched("/v1/tokenize", "texts", items)
        return [
            TokenSpans(tuple((int(s), int(e)) for s, e in rows[str(i)]["offsets"]))
            for i in range(len(texts))
        ]

    # -- plumbing ---------------------------------------------------------

    def _batched(self, path: str, key: str, items: list[dict[str, Any]]) -> dict[str, Any]:
        """POST items in sub-batches, re-associating results by echoed id."""
        if not items:
            return {}
        chunks = [items[i:i + self._max_batch_size]
                  for i in range(0, len(items), self._max_batch_size)]
        if len(chunks) == 1:
            payloads = [self._request("POST", path, {key: chunks[0]})]
        else:
            with ThreadPoolExecutor(max_workers=self._max_parallel) as pool:
                payloads = list(pool.map(
                    lambda chunk: self._request("POST", path, {key: chunk}), chunks))
        by_id: dict[str, Any] = {}
        for payload in payloads:
            for row in payload.get("results", []):
                by_id[str(row.get("id"))] = row
        missing = [item["id"] for item in items if item["id"] not in by_id]
        if missing:
            raise ProtocolError(f"{path} response missing ids: {missing[:5]}")
        return by_id

    def _request(self, method: str, path: str, body: dict[str, Any] | None = None) -> dict[str, Any]:
        last_error: Exception | None = None
        for attempt in range(self._retries):
            if attempt:
                time.sleep(self._backoff_start * (2 ** (attempt - 1)))
            try:
                response = self._client.request(method, path, json=body)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if response.status_code >= 500:
                last_error = TransportError(f"{path} returned {response.status_code}")
                continue
            if response.status_code >= 400:
                raise ProtocolError(f"{path} returned {response.status_code}: {response.text[:200]}")
            try:
                payload = response.json()
            except ValueError as exc:
                raise ProtocolError(f"{path} returned non-JSON body") from exc
            if not isinstance(payload, dict):
                raise ProtocolError(f"{path} returned {type(payload).__name__}, expected object")
            return payload
        raise TransportError(f"{method} {path} failed after {self._retries} attempts: {last_error}")

    def close(self):
        self._client.close()
