"""Correctness verdicts: embedding threshold, exact letter match, LLM judge.

The embedding match is the cheap training-time proxy; the judge is for
evaluation only, where a slower but semantically stronger oracle is worth
the cost. Discrete tasks reduce to exact letter matching.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .backends import ScorerBackend
from .errors import JudgeVerdictError, PreconditionError
from .parsing import VALID_ANSWER_LETTERS

DEFAULT_TAU = 0.80
DEFAULT_TOP_K = 3


@dataclass(frozen=True)
class MatchConfig:
    tau: float = DEFAULT_TAU
    top_k: int = DEFAULT_TOP_K

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise PreconditionError(f"tau must be in (0, 1], got {self.tau}")
        if self.top_k < 1:
            raise PreconditionError(f"top_k must be >= 1, got {self.top_k}")


@dataclass(frozen=True)
class PredictionMatch:
    matched: bool
    best_similarity: float
    best_reference: int


@dataclass(frozen=True)
class CorrectnessVerdict:
    per_prediction: tuple[PredictionMatch, ...]
    fraction: float


def embedding_correctness(predictions: Sequence[str], references: Sequence[str],
                          cfg: MatchConfig, backend: ScorerBackend) -> CorrectnessVerdict:
    """Match each of the top-k predictions against the reference set.

    A prediction counts as correct when its best cosine similarity against
    any reference strictly exceeds tau; the verdict fraction is the share
    of evaluated predictions that matched. All embeddings are fetched in a
    single batch.
    """
    if not references:
        raise PreconditionError("references must be non-empty")
    evaluated = list(predictions[:cfg.top_k])
    if not evaluated:
        return CorrectnessVerdict((), 0.0)
    vectors = backend.embed_batch(evaluated + list(references))
    pred_vecs = vectors[:len(evaluated)]
    ref_vecs = vectors[len(evaluated):]
    similarities = pred_vecs @ ref_vecs.T
    matches = []
    for row in similarities:
        best = int(row.argmax())
        matches.append(PredictionMatch(
            matched=bool(row[best] > cfg.tau),
            best_similarity=float(row[best]),
            best_reference=best,
        ))
    fraction = sum(m.matched for m in matches) / len(matches)
    return CorrectnessVerdict(tuple(matches), fraction)


def exact_match(answer: str, gold: str) -> int:
    """1 iff the two answer letters agree after case normalization."""
    a, g = _normalize_letter(answer), _normalize_letter(gold)
    return int(a == g)


def _normalize_letter(letter: str) -> str:
    norm = str(letter).strip().upper()
    if norm not in VALID_ANSWER_LETTERS:
        raise PreconditionError(f"answer letter must be one of A/B/C/D, got {letter!r}")
    return norm


def judge_correctness(candidate: str, references: Sequence[str],
                      backend: ScorerBackend) -> bool:
    """Ask the judge backend whether the candidate matches any reference.

    Only TRUE/FALSE are legal verdicts (case-insensitive, surrounding
    whitespace and quotes tolerated); anything else is a protocol error
    carrying the raw verdict for debugging.
    """
    if not references:
        raise PreconditionError("references must be non-empty")
    raw = backend.judge(candidate, list(references))
    verdict = raw.strip().strip("'\"`").strip().upper()
    if verdict == "TRUE":
        return True
    if verdict == "FALSE":
        return False
    raise JudgeVerdictError(raw)
