"""Prediction taxonomy, corpus metrics and bootstrap confidence intervals.

Each prediction is classified by crossing correctness with grounding
strength: strongly supported (max grounding > 0.5), contradicted
(< -0.5), or weak (the closed interval in between). Corpus-level reports
aggregate task correctness (F1@k or accuracy), grounding@k, the six cell
rates, and faithfulness = EB / (EB + WS + LG), with percentile-bootstrap
confidence intervals over per-case values.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .backends import ScorerBackend
from .cases import CaseRecord
from .correctness import judge_correctness
from .errors import InputError, PreconditionError
from .grounding import GroundingReport, grounding_reports
from .parsing import VALID_ANSWER_LETTERS, ParsedOutput

GROUNDED_THRESHOLD = 0.5
CONTRADICTED_THRESHOLD = -0.5


class TaxonomyLabel(enum.Enum):
    EVIDENCE_BASED = "evidence_based"
    GROUNDED_ERROR = "grounded_error"
    WEAKLY_SUPPORTED = "weakly_supported"
    UNSUPPORTED_ERROR = "unsupported_error"
    LUCKY_GUESS = "lucky_guess"
    HALLUCINATION = "hallucination"


def classify(correct: bool, g_max: float,
             grounded_threshold: float = GROUNDED_THRESHOLD,
             contradicted_threshold: float = CONTRADICTED_THRESHOLD) -> TaxonomyLabel:
    """Total 3x2 classification of one prediction.

    Grounded and contradicted use strict inequalities, so both thresholds
    themselves fall in the weak band.
    """
    if not -1.0 <= g_max <= 1.0:
        raise PreconditionError(f"g_max must be in [-1, 1], got {g_max}")
    if g_max > grounded_threshold:
        return TaxonomyLabel.EVIDENCE_BASED if correct else TaxonomyLabel.GROUNDED_ERROR
    if g_max < contradicted_threshold:
        return TaxonomyLabel.LUCKY_GUESS if correct else TaxonomyLabel.HALLUCINATION
    return TaxonomyLabel.WEAKLY_SUPPORTED if correct else TaxonomyLabel.UNSUPPORTED_ERROR


def faithfulness(eb: int, ws: int, lg: int) -> float | None:
    """Share of correct predictions that are genuinely evidence-supported.

    Returns None (not applicable) when there are no correct predictions at
    all; reporting 0 or 1 there would be misleading either way.
    """
    if min(eb, ws, lg) < 0:
        raise PreconditionError("taxonomy counts must be non-negative")
    denominator = eb + ws + lg
    if denominator == 0:
        return None
    return eb / denominator


# -- matchers ---------------------------------------------------------------


class EmbeddingMatcher:
    """Cosine-threshold matcher over the backend's embedding space."""

    name = "embedding"

    def __init__(self, backend: ScorerBackend, tau: float = 0.80):
        self._backend = backend
        self._tau = tau

    def match_matrix(self, predictions: Sequence[str],
                     references: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
        vectors = self._backend.embed_batch(list(predictions) + list(references))
        scores = vectors[:len(predictions)] @ vectors[len(predictions):].T
        return scores > self._tau, scores


class JudgeMatcher:
    """One judge call per (prediction, reference) pair."""

    name = "judge"

    def __init__(self, backend: ScorerBackend):
        self._backend = backend

    def match_matrix(self, predictions, references):
        matrix = np.zeros((len(predictions), len(references)), dtype=bool)
        for i, prediction in enumerate(predictions):
            for j, reference in enumerate(references):
                matrix[i, j] = judge_correctness(prediction, [reference], self._backend)
        return matrix, matrix.astype(float)


class ExactMatcher:
    """Letter equality for discrete tasks; out-of-alphabet labels never match."""

    name = "exact"

    def match_matrix(self, predictions, references):
        matrix = np.zeros((len(predictions), len(references)), dtype=bool)
        for i, prediction in enumerate(predictions):
            p = str(prediction).strip().upper()
            if p not in VALID_ANSWER_LETTERS:
                continue
            for j, reference in enumerate(references):
                matrix[i, j] = p == str(reference).strip().upper()
        return matrix, matrix.astype(float)


# -- ranked metrics ---------------------------------------------------------


def f1_at_k(predictions: Sequence[str], references: Sequence[str], matcher,
            k: int) -> tuple[float, float, float]:
    """(precision@k, recall@k, F1) with greedy-by-rank reference assignment.

    Precision counts matched predictions out of k (missing predictions cost
    precision); recall counts distinct references claimed by the top-k, each
    reference claimable at most once.
    """
    if not references:
        raise PreconditionError("references must be non-empty")
    if k < 1:
        raise PreconditionError(f"k must be >= 1, got {k}")
    top = list(predictions[:k])
    if not top:
        return 0.0, 0.0, 0.0
    matched, scores = matcher.match_matrix(top, references)
    return _f1_from_matrix(matched, scores, k, len(references))


def _f1_from_matrix(matched: np.ndarray, scores: np.ndarray, k: int,
                    n_references: int) -> tuple[float, float, float]:
    used = np.zeros(n_references, dtype=bool)
    matched_predictions = 0
    for i in range(matched.shape[0]):
        eligible = np.flatnonzero(matched[i] & ~used)
        if eligible.size == 0:
            continue
        best = eligible[int(np.argmax(scores[i, eligible]))]
        used[best] = True
        matched_predictions += 1
    precision = matched_predictions / k
    recall = used.sum() / n_references
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, float(recall), f1


def grounding_at_k(reports: Sequence[GroundingReport], k: int) -> tuple[float, float] | None:
    """Mean (avg_score, max_score) over the top-k reports; None when empty."""
    top = list(reports[:k])
    if not top:
        return None
    g_avg = sum(r.avg_score for r in top) / len(top)
    g_max = sum(r.max_score for r in top) / len(top)
    return g_avg, g_max


# -- bootstrap ---------------------------------------------------------------


@dataclass(frozen=True)
class CiEstimate:
    mean: float
    lower: float
    upper: float

    def to_dict(self) -> dict:
        return {"mean": self.mean, "ci_lower": self.lower, "ci_upper": self.upper}


def bootstrap_ci(values: Sequence[float], level: float = 0.95,
                 resamples: int = 1000, seed: int = 0) -> CiEstimate:
    """Percentile bootstrap over per-case values.

    Resamples with replacement, takes the percentile interval of resampled
    means, and uses the PCG64 generator so results reproduce across
    platforms for a fixed seed. Bounds are clamped to bracket the point
    estimate.
    """
    if len(values) == 0:
        raise PreconditionError("cannot bootstrap an empty list")
    if not 0.0 < level < 1.0:
        raise PreconditionError(f"level must be in (0, 1), got {level}")
    data = np.asarray(values, dtype=np.float64)
    point = float(data.mean())
    rng = np.random.Generator(np.random.PCG64(seed))
    indices = rng.integers(0, data.size, size=(resamples, data.size))
    means = data[indices].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    lower, upper = np.percentile(means, [100 * alpha, 100 * (1 - alpha)])
    return CiEstimate(point, min(float(lower), point), max(float(upper), point))


# -- corpus evaluation --------------------------------------------------------


@dataclass(frozen=True)
class EvalOptions:
    k: int = 3
    tau: float = 0.80
    matcher: str = "embedding"  # embedding | judge | exact
    grounded_threshold: float = GROUNDED_THRESHOLD
    contradicted_threshold: float = CONTRADICTED_THRESHOLD
    bootstrap_resamples: int = 1000
    bootstrap_level: float = 0.95
    seed: int = 42
    include_label_in_hypothesis: bool = False


@dataclass
class MetricsReport:
    domain: str
    n_cases: int
    k: int
    seed: int
    backend: str
    matcher: str
    task_metric_name: str
    task_metric: CiEstimate
    g_avg_at_k: CiEstimate | None  # x100 scale, matching the usual table convention
    g_max_at_k: CiEstimate | None
    g_avg_raw_mean: float | None
    g_max_raw_mean: float | None
    precision_at_k: CiEstimate | None = None
    recall_at_k: CiEstimate | None = None
    taxonomy_rates: dict[str, float] = field(default_factory=dict)
    merged_rates: dict[str, float] = field(default_factory=dict)
    faithfulness: float | None = None
    n_predictions: int = 0
    diagnostics: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        def ci(estimate):
            return estimate.to_dict() if estimate is not None else None

        return {
            "domain": self.domain,
            "n_cases": self.n_cases,
            "k": self.k,
            "seed": self.seed,
            "backend": self.backend,
            "matcher": self.matcher,
            "task_metric_name": self.task_metric_name,
            "task_metric": ci(self.task_metric),
            "precision_at_k": ci(self.precision_at_k),
            "recall_at_k": ci(self.recall_at_k),
            "g_avg_at_k": ci(self.g_avg_at_k),
            "g_max_at_k": ci(self.g_max_at_k),
            "g_avg_raw_mean": self.g_avg_raw_mean,
            "g_max_raw_mean": self.g_max_raw_mean,
            "taxonomy_rates": dict(self.taxonomy_rates),
            "merged_rates": dict(self.merged_rates),
            "faithfulness": self.faithfulness,
            "n_predictions": self.n_predictions,
            "diagnostics": list(self.diagnostics),
        }

    def to_csv(self, label: str | None = None) -> str:
        """Two CSV lines (header + row) in standard results-table column
        order: task metric, G_avg, G_max, EB, H, W, LG, F."""
        metric = self.task_metric_name
        header = [
            "label",
            f"{metric}", f"{metric}_ci_lower", f"{metric}_ci_upper",
            "g_avg", "g_avg_ci_lower", "g_avg_ci_upper",
            "g_max", "g_max_ci_lower", "g_max_ci_upper",
            "eb_pct", "h_pct", "w_pct", "lg_pct", "faithfulness_pct",
        ]

        def fmt(value):
            return "" if value is None else repr(float(value))

        def ci_cols(estimate):
            if estimate is None:
                return ["", "", ""]
            return [fmt(estimate.mean), fmt(estimate.lower), fmt(estimate.upper)]

        row = [label or f"{self.domain}/{self.backend}"]
        row += ci_cols(self.task_metric)
        row += ci_cols(self.g_avg_at_k)
        row += ci_cols(self.g_max_at_k)
        row += [fmt(self.merged_rates.get(name)) for name in ("EB", "H", "W", "LG")]
        row += [fmt(None if self.faithfulness is None else 100.0 * self.faithfulness)]
        return ",".join(header) + "\n" + ",".join(row) + "\n"


def evaluate_corpus(cases: Sequence[CaseRecord], outputs: Mapping[str, ParsedOutput],
                    options: EvalOptions, backend: ScorerBackend) -> MetricsReport:
    """Aggregate task, grounding and taxonomy metrics over a scored corpus.

    Deterministic for a fixed seed: cases are processed in sorted-id order
    and every bootstrap uses a fixed offset from the base seed. Predictions
    with empty reasoning are treated as carrying zero grounding signal.
    """
    if not cases:
        raise PreconditionError("cannot evaluate an empty corpus")
    domains = {case.domain for case in cases}
    if len(domains) > 1:
        raise InputError(f"corpus mixes domains {sorted(domains)}; partition it first")
    domain = domains.pop()
    missing = [case.id for case in cases if case.id not in outputs]
    if missing:
        raise InputError(f"cases without scored outputs: {missing[:5]}")

    matcher = _build_matcher(domain, options, backend)
    k = options.k
    diagnostics: list[str] = []

    task_values: list[float] = []
    precision_values: list[float] = []
    recall_values: list[float] = []
    g_avg_values: list[float] = []
    g_max_values: list[float] = []
    label_counts = {label: 0 for label in TaxonomyLabel}

    for case in sorted(cases, key=lambda c: c.id):
        parsed = outputs[case.id]
        top = parsed.predictions[:k]
        if not top:
            task_values.append(0.0)
            if domain == "medical":
                precision_values.append(0.0)
                recall_values.append(0.0)
            diagnostics.append(f"case {case.id}: no predictions recovered")
            continue
        if not case.references:
            raise InputError(f"case {case.id} has no references")

        labels = [p.label for p in top]
        matched, scores = matcher.match_matrix(labels, case.references)
        correct_flags = matched.any(axis=1)

        if domain == "medical":
            precision, recall, f1 = _f1_from_matrix(matched, scores, k, len(case.references))
            task_values.append(f1)
            precision_values.append(precision)
            recall_values.append(recall)
        else:
            task_values.append(float(correct_flags[0]))

        reports = _case_grounding(case, top, options, backend, diagnostics)
        scored = [(bool(c), r) for c, r in zip(correct_flags, reports)]
        for correct, report in scored:
            g_max = report.max_score if report is not None else 0.0
            label = classify(correct, g_max,
                             options.grounded_threshold, options.contradicted_threshold)
            label_counts[label] += 1
        available = [r for r in reports if r is not None]
        at_k = grounding_at_k(available, k)
        if at_k is not None:
            g_avg_values.append(at_k[0])
            g_max_values.append(at_k[1])

    seed = options.seed
    resamples, level = options.bootstrap_resamples, options.bootstrap_level
    task_ci = bootstrap_ci(task_values, level, resamples, seed)
    g_avg_ci = (bootstrap_ci([100 * v for v in g_avg_values], level, resamples, seed + 1)
                if g_avg_values else None)
    g_max_ci = (bootstrap_ci([100 * v for v in g_max_values], level, resamples, seed + 2)
                if g_max_values else None)

    total = sum(label_counts.values())
    rates = {label.value: (100.0 * count / total if total else 0.0)
             for label, count in label_counts.items()}
    merged = {
        "EB": rates["evidence_based"],
        "H": rates["hallucination"],
        # Single "weak" column: weakly-supported plus unsupported errors.
        "W": rates["weakly_supported"] + rates["unsupported_error"],
        "LG": rates["lucky_guess"],
        "GE": rates["grounded_error"],
    }
    report = MetricsReport(
        domain=domain,
        n_cases=len(cases),
        k=k,
        seed=seed,
        backend=backend.identifier,
        matcher=getattr(matcher, "name", "unknown"),
        task_metric_name="f1_at_k" if domain == "medical" else "accuracy",
        task_metric=task_ci,
        g_avg_at_k=g_avg_ci,
        g_max_at_k=g_max_ci,
        g_avg_raw_mean=(sum(g_avg_values) / len(g_avg_values) if g_avg_values else None),
        g_max_raw_mean=(sum(g_max_values) / len(g_max_values) if g_max_values else None),
        taxonomy_rates=rates,
        merged_rates=merged,
        faithfulness=faithfulness(
            label_counts[TaxonomyLabel.EVIDENCE_BASED],
            label_counts[TaxonomyLabel.WEAKLY_SUPPORTED],
            label_counts[TaxonomyLabel.LUCKY_GUESS],
        ),
        n_predictions=total,
        diagnostics=diagnostics,
    )
    if domain == "medical":
        report.precision_at_k = bootstrap_ci(precision_values, level, resamples, seed + 3)
        report.recall_at_k = bootstrap_ci(recall_values, level, resamples, seed + 4)
    return report


def _build_matcher(domain: str, options: EvalOptions, backend: ScorerBackend):
    if domain == "legal" or options.matcher == "exact":
        return ExactMatcher()
    if options.matcher == "judge":
        return JudgeMatcher(backend)
    if options.matcher == "embedding":
        return EmbeddingMatcher(backend, options.tau)
    raise PreconditionError(f"unknown matcher {options.matcher!r}")


def _case_grounding(case, predictions, options, backend, diagnostics):
    """One GroundingReport per prediction; None where reasoning is empty."""
    hypotheses, positions = [], []
    for i, prediction in enumerate(predictions):
        if prediction.reasoning.strip():
            text = (f"{prediction.label}: {prediction.reasoning}"
                    if options.include_label_in_hypothesis else prediction.reasoning)
            hypotheses.append(text)
            positions.append(i)
        else:
            diagnostics.append(f"case {case.id}: prediction {i + 1} has empty reasoning")
    reports: list[GroundingReport | None] = [None] * len(predictions)
    if hypotheses:
        for position, report in zip(positions, grounding_reports(case, hypotheses, backend)):
            reports[position] = report
    return reports
