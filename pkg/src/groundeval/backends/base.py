"""Scorer backend protocol: NLI, embeddings, judge and tokenizer.

All learned scorers live behind this interface. Implementations must be
safe to call from multiple threads and must keep results independent of how
requests are batched: splitting any batch into sub-batches yields identical
results, element for element.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import PreconditionError, ProtocolError

NLI_PROBABILITY_SUM_TOLERANCE = 1e-3
DEFAULT_SEPARATOR_RESERVE = 3


@dataclass(frozen=True)
class NliTriple:
    """Entail/neutral/contradict probabilities for one (premise, hypothesis) pair."""

    entail: float
    neutral: float
    contradict: float

    @property
    def delta(self) -> float:
        """Support signal: P(entail) - P(contradict), in [-1, 1]."""
        return self.entail - self.contradict

    def validate(self) -> "NliTriple":
        probs = (self.entail, self.neutral, self.contradict)
        if any(p < 0.0 or p > 1.0 for p in probs):
            raise ProtocolError(f"NLI probabilities out of [0, 1]: {probs}")
        total = sum(probs)
        if abs(total - 1.0) > NLI_PROBABILITY_SUM_TOLERANCE:
            raise ProtocolError(f"NLI probabilities sum to {total:.6f}, expected 1")
        return self


@dataclass(frozen=True)
class TokenSpans:
    """Token boundaries of one text as (start_char, end_char) offsets."""

    offsets: tuple[tuple[int, int], ...]

    @property
    def count(self) -> int:
        return len(self.offsets)


class ScorerBackend(ABC):
    """Abstract scorer: four capabilities behind one handle.

    ``embed_batch`` always returns L2-normalized vectors; normalization is
    enforced on the client side regardless of what the backend produces.
    """

    @property
    @abstractmethod
    def identifier(self) -> str:
        """Stable identity string embedded in reports so results from
        different backends are never silently compared."""

    @property
    @abstractmethod
    def max_sequence_tokens(self) -> int:
        """Sequence limit of the NLI encoder, in backend tokenizer tokens."""

    @abstractmethod
    def nli_batch(self, pairs: Sequence[tuple[str, str]]) -> list[NliTriple]:
        """Score (premise, hypothesis) pairs; one triple per pair, order-aligned."""

    @abstractmethod
    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        """Embed texts into unit vectors, shape (len(texts), dimension)."""

    @abstractmethod
    def judge(self, candidate: str, references: Sequence[str]) -> str:
        """Return the judge's raw verdict string for candidate vs references."""

    @abstractmethod
    def tokenize_batch(self, texts: Sequence[str]) -> list[TokenSpans]:
        """Token boundaries for each text, in the backend's token units."""

    def tokenize(self, text: str) -> TokenSpans:
        return self.tokenize_batch([text])[0]


def l2_normalize(matrix: np.ndarray) -> np.ndarray:
    """Normalize rows to unit L2 norm; zero vectors are a protocol violation."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ProtocolError(f"expected a 2-d embedding matrix, got shape {matrix.shape}")
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    if np.any(norms < 1e-12):
        raise ProtocolError("backend returned a zero-norm embedding")
    return matrix / norms


def truncate_pair(premise: str, hypothesis: str, limit: int, backend: ScorerBackend,
                  reserve: int = DEFAULT_SEPARATOR_RESERVE) -> tuple[str, str]:
    """Token-aware truncation: shrink only the premise so the pair fits.

    The hypothesis is never modified. The premise is cut from the end so
    that tokens(premise) + tokens(hypothesis) <= limit - reserve, where
    ``reserve`` leaves room for encoder separator tokens. If the hypothesis
    alone cannot fit, that is an error naming the hypothesis: silently
    clipping the text being verified would corrupt the score.
    """
    spans = backend.tokenize_batch([premise, hypothesis])
    n_hyp = spans[1].count
    budget = limit - reserve - n_hyp
    if budget < 0:
        raise PreconditionError(
            f"hypothesis of {n_hyp} tokens exceeds the {limit}-token limit "
            f"(reserve {reserve}): {hypothesis[:80]!r}"
        )
    if spans[0].count <= budget:
        return premise, hypothesis
    truncated = _cut_to_tokens(premise, spans[0], budget)
    # Real subword tokenizers may merge differently after a cut; re-check.
    while backend.tokenize(truncated).count > budget:
        new_spans = backend.tokenize(truncated)
        truncated = _cut_to_tokens(truncated, new_spans, new_spans.count - 1)
    return truncated, hypothesis


def _cut_to_tokens(text: str, spans: TokenSpans, n_tokens: int) -> str:
    if n_tokens <= 0:
        return ""
    end_char = spans.offsets[n_tokens - 1][1]
    return text[:end_char]
