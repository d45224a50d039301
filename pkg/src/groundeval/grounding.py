"""Grounding scores: anchored premises verified one at a time.

Concatenating every evidence source into one giant NLI premise dilutes the
signal and overflows the encoder, so each supplementary section and each
retrieved passage is paired with the case anchor to form a focused premise.
Reasoning text is then scored against every premise independently and the
per-premise support signals are aggregated two ways: the signed score of
largest magnitude (strongest supporting or contradicting source) and the
plain average across sources.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

from .backends import ScorerBackend, truncate_pair
from .cases import CaseRecord
from .errors import PreconditionError
from .parsing import ParsedOutput

PREMISE_SEPARATOR = "\n\n"


@dataclass(frozen=True)
class PremiseSet:
    """Focused premises for one case: (source_tag, text) in source order."""

    premises: tuple[tuple[str, str], ...]
    separator: str = PREMISE_SEPARATOR

    @property
    def texts(self) -> list[str]:
        return [text for _tag, text in self.premises]

    def __len__(self) -> int:
        return len(self.premises)


@dataclass(frozen=True)
class GroundingReport:
    """Per-premise support deltas plus the two aggregates."""

    deltas: tuple[float, ...]
    max_score: float
    argmax_premise: int
    avg_score: float


def build_premises(case: CaseRecord, separator: str = PREMISE_SEPARATOR) -> PremiseSet:
    """Pair the anchor with each section, then each evidence passage.

    With no sections and no evidence the anchor alone is the single premise,
    so the premise set is never empty and averages stay well defined.
    """
    if not case.anchor.strip():
        raise PreconditionError(f"case {case.id!r}: anchor must be non-empty")
    premises = [(f"section:{name}", case.anchor + separator + text)
                for name, text in case.sections]
    premises += [(f"evidence:{j}", case.anchor + separator + text)
                 for j, text in enumerate(case.evidence)]
    if not premises:
        premises = [("anchor", case.anchor)]
    return PremiseSet(tuple(premises), separator)


def nli_delta(premise: str, hypothesis: str, backend: ScorerBackend,
              reserve: int = 3) -> float:
    """Support signal for one pair: P(entail) - P(contradict).

    The premise is truncated token-aware to the backend's sequence limit
    before scoring; the hypothesis is never clipped.
    """
    if not hypothesis.strip():
        raise PreconditionError("hypothesis must be non-empty")
    pair = truncate_pair(premise, hypothesis, backend.max_sequence_tokens, backend, reserve)
    triple = backend.nli_batch([pair])[0].validate()
    return triple.delta


def ground_prediction(case: CaseRecord, reasoning: str, backend: ScorerBackend,
                      reserve: int = 3) -> GroundingReport:
    """Score one reasoning paragraph against every premise of a case."""
    return grounding_reports(case, [reasoning], backend, reserve=reserve)[0]


def grounding_reports(case: CaseRecord, hypotheses: Sequence[str], backend: ScorerBackend,
                      reserve: int = 3) -> list[GroundingReport]:
    """GroundingReport for each hypothesis, with all NLI pairs in one batch.

    Results are re-associated by pair index, so they do not depend on how
    the backend batches or orders its work internally.
    """
    premise_texts = build_premises(case).texts
    limit = backend.max_sequence_tokens
    pairs = []
    for hypothesis in hypotheses:
        if not hypothesis.strip():
            raise PreconditionError("hypothesis must be non-empty")
        for premise in premise_texts:
            pairs.append(truncate_pair(premise, hypothesis, limit, backend, reserve))
    triples = backend.nli_batch(pairs)
    if len(triples) != len(pairs):
        raise PreconditionError(
            f"backend returned {len(triples)} triples for {len(pairs)} pairs")
    reports = []
    n = len(premise_texts)
    for i in range(len(hypotheses)):
        deltas = [t.validate().delta for t in triples[i * n:(i + 1) * n]]
        reports.append(_aggregate_deltas(deltas))
    return reports


def _aggregate_deltas(deltas: Sequence[float]) -> GroundingReport:
    # Ties on |delta| resolve to the lowest premise index (strict > keeps
    # the first maximum), making reports order-stable.
    best = 0
    for i, delta in enumerate(deltas):
        if abs(delta) > abs(deltas[best]):
            best = i
    return GroundingReport(
        deltas=tuple(deltas),
        max_score=deltas[best],
        argmax_premise=best,
        avg_score=sum(deltas) / len(deltas),
    )


def ground_prediction_sentencewise(reasoning: str, premise: str, backend: ScorerBackend,
                                   reserve: int = 3) -> float:
    """Average per-sentence support of ``reasoning`` against one authority text.

    Used for the discrete-answer domain, where a single gold passage backs
    the whole argument. An empty sentence list scores 0.0.
    """
    sentences = split_sentences(reasoning)
    if not sentences:
        return 0.0
    limit = backend.max_sequence_tokens
    pairs = [truncate_pair(premise, sentence, limit, backend, reserve)
             for sentence in sentences]
    triples = backend.nli_batch(pairs)
    deltas = [t.validate().delta for t in triples]
    return sum(deltas) / len(deltas)


def grounding_reward_medical(case: CaseRecord, parsed: ParsedOutput, k: int,
                             backend: ScorerBackend, include_label: bool = False,
                             reserve: int = 3) -> float:
    """Training grounding reward: mean of the top-k predictions' max scores.

    Each prediction's reasoning is its own hypothesis. Fewer than k
    predictions are scored over what is available; no predictions at all
    score 0.0 so malformed completions still receive a total reward.
    """
    if k < 1:
        raise PreconditionError(f"k must be >= 1, got {k}")
    predictions = parsed.predictions[:k]
    if not predictions:
        return 0.0
    hypotheses = [
        (f"{p.label}: {p.reasoning}" if include_label else p.reasoning)
        for p in predictions
    ]
    reports = grounding_reports(case, hypotheses, backend, reserve=reserve)
    return sum(r.max_score for r in reports) / len(reports)


# Sentence splitting: terminal punctuation followed by whitespace and an
# uppercase letter, digit or quote starts a new sentence, unless the
# preceding token is a known abbreviation. Segments shorter than 3
# non-space characters are dropped.
_BOUNDARY_RE = re.compile(r"[.?!](?=\s+[\"'“‘A-Z0-9])")
_ABBREVIATIONS = {
    "v.", "vs.", "no.", "dr.", "mr.", "mrs.", "ms.", "jr.", "sr.", "st.",
    "u.s.", "e.g.", "i.e.", "etc.", "inc.", "co.", "corp.", "fig.", "al.",
}


def split_sentences(text: str) -> list[str]:
    boundaries = []
    for match in _BOUNDARY_RE.finditer(text):
        end = match.end()
        trailing = text[:end].rsplit(None, 1)[-1].casefold()
        if trailing in _ABBREVIATIONS:
            continue
        boundaries.append(end)
    segments = []
    start = 0
    for end in boundaries:
        segments.append(text[start:end])
        start = end
    segments.append(text[start:])
    return [s.strip() for s in segments if len(s.replace(" ", "").strip()) >= 3]
