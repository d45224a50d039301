from .base import (
    DEFAULT_SEPARATOR_RESERVE,
    NliTriple,
    ScorerBackend,
    TokenSpans,
    l2_normalize,
    truncate_pair,
)
from .http import HttpScorerBackend
from .mock import MockBackend, mock_backend

__all__ = [
    "DEFAULT_SEPARATOR_RESERVE",
    "NliTriple",
    "ScorerBackend",
    "TokenSpans",
    "l2_normalize",
    "truncate_pair",
    "HttpScorerBackend",
    "MockBackend",
    "mock_backend",
]
