"""Self-consistency aggregation across sampled completions.

Diagnosis names from N parsed samples are pooled, semantically clustered
(greedy agglomerative over embedding cosine), and ranked by a composite of
how many samples voted for the cluster and how highly they ranked it. The
reasoning attached to each surviving cluster is the longest paragraph among
its highly-ranked votes, so the final output reads like a single coherent
completion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .backends import ScorerBackend, l2_normalize
from .errors import PreconditionError
from .parsing import ParsedOutput, Prediction

CLUSTER_SIMILARITY_THRESHOLD = 0.85
VOTE_WEIGHT = 100.0
TOP_CLUSTERS = 5
PREFERRED_MAX_RANK = 2


@dataclass(frozen=True)
class DiagnosisVote:
    name: str
    sample_index: int
    rank_in_sample: int
    reasoning: str


@dataclass
class Cluster:
    member_names: list[str]
    centroid: np.ndarray
    embeddings: list[np.ndarray] = field(default_factory=list)
    vote_count: int = 0
    avg_position: float = 0.0
    composite_score: float = 0.0
    representative_name: str = ""
    selected_reasoning: str = ""


def pool_votes(samples: Sequence[ParsedOutput]) -> list[DiagnosisVote]:
    """Collect one vote per prediction across all format-valid samples."""
    votes = []
    for sample_index, sample in enumerate(samples):
        if not sample.format_valid:
            continue
        for prediction in sample.predictions:
            votes.append(DiagnosisVote(
                name=prediction.label.strip(),
                sample_index=sample_index,
                rank_in_sample=prediction.rank,
                reasoning=prediction.reasoning,
            ))
    return votes


def cluster_names(votes: Sequence[DiagnosisVote], backend: ScorerBackend,
                  threshold: float = CLUSTER_SIMILARITY_THRESHOLD) -> list[Cluster]:
    """Greedy agglomerative clustering of unique names.

    Unique names are processed most-frequent first (frequency = number of
    distinct samples containing the name; ties resolve lexicographically).
    Each name joins the first existing cluster whose centroid similarity
    reaches the threshold, else founds a new cluster; centroids are the
    renormalized mean of member embeddings, updated on every merge.
    """
    if not votes:
        raise PreconditionError("cannot cluster an empty vote pool")
    by_name: dict[str, set[int]] = {}
    for vote in votes:
        by_name.setdefault(vote.name, set()).add(vote.sample_index)
    ordered = sorted(by_name, key=lambda name: (-len(by_name[name]), name))
    vectors = backend.embed_batch(ordered)

    clusters: list[Cluster] = []
    for name, vector in zip(ordered, vectors):
        merged = False
        for cluster in clusters:
            if float(cluster.centroid @ vector) >= threshold:
                cluster.member_names.append(name)
                cluster.embeddings.append(vector)
                cluster.centroid = l2_normalize(
                    np.mean(cluster.embeddings, axis=0)[np.newaxis, :])[0]
                merged = True
                break
        if not merged:
            clusters.append(Cluster(member_names=[name], centroid=vector,
                                    embeddings=[vector], representative_name=name))

    for cluster in clusters:
        _fill_vote_stats(cluster, votes)
    return clusters


def _fill_vote_stats(cluster: Cluster, votes: Sequence[DiagnosisVote]):
    members = set(cluster.member_names)
    best_rank_per_sample: dict[int, int] = {}
    for vote in votes:
        if vote.name in members:
            current = best_rank_per_sample.get(vote.sample_index)
            if current is None or vote.rank_in_sample < current:
                best_rank_per_sample[vote.sample_index] = vote.rank_in_sample
    cluster.vote_count = len(best_rank_per_sample)
    cluster.avg_position = (sum(best_rank_per_sample.values()) / cluster.vote_count
                            if cluster.vote_count else 0.0)
    cluster.composite_score = VOTE_WEIGHT * cluster.vote_count - cluster.avg_position


def rank_clusters(clusters: Sequence[Cluster]) -> list[Cluster]:
    """Descending composite score; ties break lexicographically."""
    return sorted(clusters, key=lambda c: (-c.composite_score, c.representative_name))


def select_reasoning(cluster: Cluster, votes: Sequence[DiagnosisVote]) -> str:
    """Longest reasoning among the cluster's top-ranked votes.

    Prefers votes ranked in the top 2 of their own samples; if no member
    vote ranked that highly, falls back to the longest reasoning overall.
    Ties go to the lowest sample index.
    """
    members = set(cluster.member_names)
    member_votes = [v for v in votes if v.name in members]
    if not member_votes:
        raise PreconditionError("cluster has no votes")
    preferred = [v for v in member_votes if v.rank_in_sample <= PREFERRED_MAX_RANK]
    pool = preferred or member_votes
    best = min(pool, key=lambda v: (-len(v.reasoning), v.sample_index, v.rank_in_sample))
    return best.reasoning


def aggregate(samples: Sequence[ParsedOutput], backend: ScorerBackend,
              threshold: float = CLUSTER_SIMILARITY_THRESHOLD,
              top_n: int = TOP_CLUSTERS) -> ParsedOutput:
    """Pool, cluster, rank and select across N samples; emits a top-n output.

    Samples that failed format validation do not vote. When every sample is
    invalid the result is an empty output with a diagnostic rather than an
    error, mirroring the parsers' soft-failure behavior.
    """
    if not samples:
        raise PreconditionError("need at least one sample to aggregate")
    votes = pool_votes(samples)
    if not votes:
        return ParsedOutput([], False, 0,
                            ["no format-valid samples to aggregate"])
    ranked = rank_clusters(cluster_names(votes, backend, threshold))
    diagnostics = []
    if len(ranked) < top_n:
        diagnostics.append(
            f"only {len(ranked)} clusters available for a top-{top_n} output")
    predictions = []
    for rank, cluster in enumerate(ranked[:top_n], start=1):
        cluster.selected_reasoning = select_reasoning(cluster, votes)
        predictions.append(Prediction(
            label=cluster.representative_name,
            reasoning=cluster.selected_reasoning,
            rank=rank,
        ))
    valid = (len(predictions) == top_n
             and all(p.label and p.reasoning for p in predictions))
    raw_length = sum(len(p.label) + len(p.reasoning) for p in predictions)
    return ParsedOutput(predictions, valid, raw_length, diagnostics)
