"""Deterministic in-process backend used for tests and offline runs.

Every response is a pure function of the constructor seed and the request
text, so identical inputs produce bit-identical outputs across processes
and platforms. Scoring rules, applied in order:

NLI (premise, hypothesis):
    1. exact fixture lookup on the (premise, hypothesis) pair
    2. hypothesis starting with "contradicts:"        -> (0.05, 0.05, 0.90)
    3. normalized hypothesis contained in premise     -> (0.80, 0.10, 0.10)
    4. disjoint token vocabularies                    -> (0.10, 0.80, 0.10)
    5. otherwise: pseudo-random simplex point derived from
       sha256(seed, premise, hypothesis)

Embeddings: fixture lookup by text, else a unit vector drawn from a PCG64
generator seeded with sha256(seed, text).

Judge: fixture lookup on (candidate, references); fallback verdict is TRUE
iff the normalized candidate equals any normalized reference.

Tokenizer: whitespace tokens with character offsets.

Normalization throughout = casefold + whitespace collapse.
"""

from __future__ import annotations

import hashlib
import re
from typing import Mapping, Sequence

import numpy as np

from .base import NliTriple, ScorerBackend, TokenSpans, l2_normalize

_TOKEN_RE = re.compile(r"\S+")

CONTRADICTION_PREFIX = "contradicts:"
SUBSTRING_TRIPLE = (0.80, 0.10, 0.10)
DISJOINT_TRIPLE = (0.10, 0.80, 0.10)
CONTRADICTION_TRIPLE = (0.05, 0.05, 0.90)


def _normalize(text: str) -> str:
    return " ".join(text.split()).casefold()


class MockBackend(ScorerBackend):
    def __init__(
        self,
        seed: int = 0,
        dimension: int = 64,
        max_sequence_tokens: int = 512,
        nli_fixtures: Mapping[tuple[str, str], tuple[float, float, float]] | None = None,
        embed_fixtures: Mapping[str, Sequence[float]] | None = None,
        judge_fixtures: Mapping[tuple[str, tuple[str, ...]], str] | None = None,
    ):
        self._seed = seed
        self._dimension = dimension
        self._max_tokens = max_sequence_tokens
        self._nli_fixtures = dict(nli_fixtures or {})
        self._embed_fixtures = {
            text: l2_normalize(np.asarray([vec], dtype=np.float64))[0]
            for text, vec in (embed_fixtures or {}).items()
        }
        self._judge_fixtures = dict(judge_fixtures or {})

    @property
    def identifier(self) -> str:
        return f"mock:seed={self._seed},dim={self._dimension}"

    @property
    def max_sequence_tokens(self) -> int:
        return self._max_tokens

    def nli_batch(self, pairs: Sequence[tuple[str, str]]) -> list[NliTriple]:
        return [self._score_pair(premise, hypothesis) for premise, hypothesis in pairs]

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        rows = [self._embed_one(text) for text in texts]
        return np.stack(rows) if rows else np.zeros((0, self._dimension))

    def judge(self, candidate: str, references: Sequence[str]) -> str:
        key = (candidate, tuple(references))
        if key in self._judge_fixtures:
            return self._judge_fixtures[key]
        matched = any(_normalize(candidate) == _normalize(ref) for ref in references)
        return "TRUE" if matched else "FALSE"

    def tokenize_batch(self, texts: Sequence[str]) -> list[TokenSpans]:
        return [
            TokenSpans(tuple(m.span() for m in _TOKEN_RE.finditer(text)))
            for text in texts
        ]

    def _score_pair(self, premise: str, hypothesis: str) -> NliTriple:
        fixture = self._nli_fixtures.get((premise, hypothesis))
        if fixture is not None:
            return NliTriple(*fixture)
        norm_p, norm_h = _normalize(premise), _normalize(hypothesis)
        if norm_h.startswith(CONTRADICTION_PREFIX):
            return NliTriple(*CONTRADICTION_TRIPLE)
        if norm_h and norm_h in norm_p:
            return NliTriple(*SUBSTRING_TRIPLE)
        if not set(norm_p.split()) & set(norm_h.split()):
            return NliTriple(*DISJOINT_TRIPLE)
        rng = self._rng("nli", premise, "\x1e", hypothesis)
        entail, neutral, contradict = rng.dirichlet(np.ones(3))
        return NliTriple(float(entail), float(neutral), float(contradict))

    def _embed_one(self, text: str) -> np.ndarray:
        if text in self._embed_fixtures:
            return self._embed_fixtures[text]
        vec = self._rng("embed", text).standard_normal(self._dimension)
        return l2_normalize(vec[np.newaxis, :])[0]

    def _rng(self, *parts: str) -> np.random.Generator:
        digest = hashlib.sha256("\x1f".join((str(self._seed), *parts)).encode()).digest()
        return np.random.Generator(np.random.PCG64(int.from_bytes(digest[:8], "little")))


def mock_backend(seed: int = 0, **kwargs) -> MockBackend:
    """Convenience factory mirroring the backend constructors."""
    return MockBackend(seed=seed, **kwargs)
