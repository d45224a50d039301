"""Combined rewards and group-relative advantages.

Each completion earns three component rewards (format, correctness,
grounding) which are mixed with scalar weights into one training reward;
the grounding component is shifted from [-1, 1] into [0, 1] first. Groups
of completions sampled for the same case are then normalized against their
own mean and standard deviation to produce per-completion advantages for
an external GRPO trainer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .backends import ScorerBackend
from .cases import CaseRecord
from .correctness import MatchConfig, embedding_correctness, exact_match
from .errors import EngineError, PreconditionError
from .grounding import (
    PREMISE_SEPARATOR,
    ground_prediction_sentencewise,
    grounding_reward_medical,
)
from .parsing import VALID_ANSWER_LETTERS, format_reward, parse_legal, parse_medical

DEFAULT_SIGMA_FLOOR = 1e-8


@dataclass(frozen=True)
class RewardWeights:
    w_format: float = 1.0
    w_correct: float = 1.0
    w_ground: float = 2.0

    def __post_init__(self):
        weights = (self.w_format, self.w_correct, self.w_ground)
        if any(w < 0 for w in weights):
            raise PreconditionError(f"weights must be non-negative, got {weights}")
        if not any(w > 0 for w in weights):
            raise PreconditionError("at least one weight must be positive")

    @property
    def total(self) -> float:
        return self.w_format + self.w_correct + self.w_ground


@dataclass
class RewardRecord:
    completion_index: int
    r_format: int
    r_correct: float
    r_ground: float
    r_ground_normalized: float
    combined: float
    advantage: float = 0.0
    format_valid: bool = True

    def to_dict(self) -> dict:
        return {
            "completion_index": self.completion_index,
            "r_format": self.r_format,
            "r_correct": self.r_correct,
            "r_ground": self.r_ground,
            "r_ground_normalized": self.r_ground_normalized,
            "combined": self.combined,
            "advantage": self.advantage,
            "format_valid": self.format_valid,
        }


def combined_reward(r_format: float, r_correct: float, r_ground: float,
                    weights: RewardWeights = RewardWeights()) -> float:
    """Weighted sum of the three components with grounding mapped to [0, 1]."""
    if r_format not in (0, 1, 0.0, 1.0):
        raise PreconditionError(f"format reward must be 0 or 1, got {r_format}")
    if not 0.0 <= r_correct <= 1.0:
        raise PreconditionError(f"correctness reward must be in [0, 1], got {r_correct}")
    if not -1.0 <= r_ground <= 1.0:
        raise PreconditionError(f"grounding reward must be in [-1, 1], got {r_ground}")
    return (weights.w_format * r_format
            + weights.w_correct * r_correct
            + weights.w_ground * (r_ground + 1.0) / 2.0)


def group_advantages(rewards: Sequence[float],
                     sigma_floor: float = DEFAULT_SIGMA_FLOOR) -> list[float]:
    """Center and scale a group's rewards by its own statistics.

    Uses the population standard deviation; the floor keeps degenerate
    (constant-reward) groups at exactly zero advantage instead of dividing
    by zero.
    """
    n = len(rewards)
    if n < 2:
        raise PreconditionError(f"a group needs at least 2 completions, got {n}")
    if all(r == rewards[0] for r in rewards):
        # Exact zeros for constant groups; do not let float rounding in the
        # mean leak microscopic advantages through the floor.
        return [0.0] * n
    mean = sum(rewards) / n
    sigma = math.sqrt(sum((r - mean) ** 2 for r in rewards) / n)
    denom = max(sigma, sigma_floor)
    return [(r - mean) / denom for r in rewards]


def score_completion(case: CaseRecord, raw: str, weights: RewardWeights,
                     backend: ScorerBackend, tau: float = 0.80, top_k: int = 3,
                     strict_parse: bool = False, include_label: bool = False) -> RewardRecord:
    """Score one completion: parse, then format/correctness/grounding rewards."""
    if case.domain == "legal":
        parsed = parse_legal(raw, strict=strict_parse)
        r_correct = _legal_correctness(case, parsed)
        r_ground = _legal_grounding(case, parsed, backend)
    else:
        parsed = parse_medical(raw, strict=strict_parse)
        labels = [p.label for p in parsed.predictions]
        if labels:
            cfg = MatchConfig(tau=tau, top_k=top_k)
            r_correct = embedding_correctness(labels, case.references, cfg, backend).fraction
        else:
            r_correct = 0.0
        r_ground = grounding_reward_medical(case, parsed, top_k, backend,
                                            include_label=include_label)
    r_format = format_reward(parsed)
    return RewardRecord(
        completion_index=0,
        r_format=r_format,
        r_correct=r_correct,
        r_ground=r_ground,
        r_ground_normalized=(r_ground + 1.0) / 2.0,
        combined=combined_reward(r_format, r_correct, r_ground, weights),
        format_valid=parsed.format_valid,
    )


def score_group(case: CaseRecord, completions: Sequence[str], weights: RewardWeights,
                backend: ScorerBackend, tau: float = 0.80, top_k: int = 3,
                sigma_floor: float = DEFAULT_SIGMA_FLOOR, strict_parse: bool = False,
                include_label: bool = False) -> list[RewardRecord]:
    """Score a sampled group end to end and fill in group advantages.

    Scoring is all-or-nothing: a backend failure on any completion aborts
    the whole group, because advantages computed over a partial group would
    be biased.
    """
    if len(completions) < 2:
        raise PreconditionError(
            f"a group needs at least 2 completions, got {len(completions)}")
    records = []
    for index, raw in enumerate(completions):
        try:
            record = score_completion(case, raw, weights, backend, tau=tau, top_k=top_k,
                                      strict_parse=strict_parse, include_label=include_label)
        except EngineError as exc:
            raise exc.__class__(
                f"scoring completion {index} of case {case.id!r} failed: {exc}") from exc
        records.append(replace(record, completion_index=index))
    advantages = group_advantages([r.combined for r in records], sigma_floor)
    return [replace(record, advantage=adv) for record, adv in zip(records, advantages)]


def _legal_correctness(case: CaseRecord, parsed) -> float:
    if not parsed.predictions or not case.references:
        return 0.0
    answer = parsed.predictions[0].label
    gold = case.references[0].strip().upper()
    if answer not in VALID_ANSWER_LETTERS or gold not in VALID_ANSWER_LETTERS:
        return 0.0
    return float(exact_match(answer, gold))


def _legal_grounding(case: CaseRecord, parsed, backend: ScorerBackend) -> float:
    """Sentence-wise support against the gold passage when one exists,
    otherwise against the retrieved authorities, otherwise the anchor."""
    if not parsed.predictions:
        return 0.0
    reasoning = parsed.predictions[0].reasoning
    if not reasoning.strip():
        return 0.0
    if case.gold_passage:
        premise = case.gold_passage
    elif case.evidence:
        premise = PREMISE_SEPARATOR.join(case.evidence)
    else:
        premise = case.anchor
    return ground_prediction_sentencewise(reasoning, premise, backend)
