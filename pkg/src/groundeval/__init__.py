"""groundeval: reward scoring and grounding evaluation for structured completions."""

from .backends import HttpScorerBackend, MockBackend, NliTriple, ScorerBackend, truncate_pair
from .cases import CaseRecord, load_cases
from .config import EngineConfig, load_config, make_backend
from .correctness import (
    CorrectnessVerdict,
    MatchConfig,
    embedding_correctness,
    exact_match,
    judge_correctness,
)
from .grounding import (
    GroundingReport,
    PremiseSet,
    build_premises,
    ground_prediction,
    ground_prediction_sentencewise,
    grounding_reward_medical,
    nli_delta,
)
from .metrics import (
    EvalOptions,
    MetricsReport,
    TaxonomyLabel,
    bootstrap_ci,
    classify,
    evaluate_corpus,
    f1_at_k,
    faithfulness,
    grounding_at_k,
)
from .parsing import ParsedOutput, Prediction, format_reward, parse_legal, parse_medical
from .rewards import (
    RewardRecord,
    RewardWeights,
    combined_reward,
    group_advantages,
    score_group,
)

__version__ = "0.1.0"

__all__ = [
    "CaseRecord",
    "CorrectnessVerdict",
    "EngineConfig",
    "EvalOptions",
    "GroundingReport",
    "HttpScorerBackend",
    "MatchConfig",
    "MetricsReport",
    "MockBackend",
    "NliTriple",
    "ParsedOutput",
    "Prediction",
    "PremiseSet",
    "RewardRecord",
    "RewardWeights",
    "ScorerBackend",
    "TaxonomyLabel",
    "bootstrap_ci",
    "build_premises",
    "classify",
    "combined_reward",
    "embedding_correctness",
    "evaluate_corpus",
    "exact_match",
    "f1_at_k",
    "faithfulness",
    "format_reward",
    "ground_prediction",
    "ground_prediction_sentencewise",
    "grounding_at_k",
    "grounding_reward_medical",
    "group_advantages",
    "judge_correctness",
    "load_cases",
    "load_config",
    "make_backend",
    "nli_delta",
    "parse_legal",
    "parse_medical",
    "score_group",
    "truncate_pair",
]
