"""Parse raw model completions into structured predictions.

Completions are expected to be JSON, but models routinely wrap the object in
preamble text, markdown fences or trailing commentary. The parsers here never
raise on arbitrary input: they extract the first parseable JSON object (or
fail softly), validate it against the canonical completion schema, and report
what went wrong through ``parse_diagnostics``.

Canonical schemas:

    medical: {"diagnoses": [{"name": "...", "reasoning": "..."} x 5]}
    legal:   {"answer": "A|B|C|D", "reasoning": "..."}

Predictions are retained even when the completion fails format validation so
that downstream grounding and taxonomy analysis can still look at
malformed-but-recoverable outputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

VALID_ANSWER_LETTERS = ("A", "B", "C", "D")
MEDICAL_PREDICTION_COUNT = 5


@dataclass(frozen=True)
class Prediction:
    """One ranked prediction: a label (diagnosis name or answer letter)
    plus the reasoning paragraph that argues for it."""

    label: str
    reasoning: str
    rank: int


@dataclass
class ParsedOutput:
    predictions: list[Prediction]
    format_valid: bool
    raw_length: int
    parse_diagnostics: list[str] = field(default_factory=list)


def parse_medical(raw: str, strict: bool = False,
                  required_count: int = MEDICAL_PREDICTION_COUNT) -> ParsedOutput:
    """Parse a medical completion into ranked diagnoses.

    ``format_valid`` requires a parseable JSON object with a ``diagnoses``
    list of exactly ``required_count`` entries, each carrying a non-empty
    name and non-empty reasoning. With ``strict=True`` the completion must
    begin with the opening brace (leading whitespace allowed); otherwise the
    first parseable ``{...}`` object anywhere in the text is used.
    """
    diagnostics: list[str] = []
    obj = _extract_object(raw, strict, diagnostics)
    if obj is None:
        return ParsedOutput([], False, len(raw), diagnostics)

    items = obj.get("diagnoses")
    if not isinstance(items, list):
        diagnostics.append("object has no 'diagnoses' list")
        return ParsedOutput([], False, len(raw), diagnostics)

    predictions: list[Prediction] = []
    all_fields_ok = True
    for i, item in enumerate(items):
        if not isinstance(item, dict):
            diagnostics.append(f"diagnosis {i + 1} is not an object")
            all_fields_ok = False
            continue
        name = str(item.get("name") or "").strip()
        reasoning = str(item.get("reasoning") or "").strip()
        if not name:
            diagnostics.append(f"diagnosis {i + 1} has an empty name")
            all_fields_ok = False
            continue
        if not reasoning:
            diagnostics.append(f"diagnosis {i + 1} has empty reasoning")
            all_fields_ok = False
        predictions.append(Prediction(label=name, reasoning=reasoning,
                                      rank=len(predictions) + 1))

    if len(items) != required_count:
        diagnostics.append(f"expected exactly {required_count} diagnoses, got {len(items)}")
    valid = all_fields_ok and len(items) == required_count and len(predictions) == required_count
    return ParsedOutput(predictions, valid, len(raw), diagnostics)


def parse_legal(raw: str, strict: bool = False) -> ParsedOutput:
    """Parse a legal completion: a single answer letter plus reasoning.

    The answer is case-normalized; ``format_valid`` requires exactly one
    letter in A-D and non-empty reasoning.
    """
    diagnostics: list[str] = []
    obj = _extract_object(raw, strict, diagnostics)
    if obj is None:
        return ParsedOutput([], False, len(raw), diagnostics)

    if "answer" not in obj:
        diagnostics.append("object has no 'answer' field")
        return ParsedOutput([], False, len(raw), diagnostics)

    letter = str(obj.get("answer") or "").strip().upper()
    reasoning = str(obj.get("reasoning") or "").strip()
    valid = True
    if letter not in VALID_ANSWER_LETTERS:
        diagnostics.append(f"answer {letter!r} is not one of A/B/C/D")
        valid = False
    if not reasoning:
        diagnostics.append("reasoning is empty")
        valid = False
    predictions = [Prediction(label=letter, reasoning=reasoning, rank=1)] if letter else []
    if not letter:
        diagnostics.append("answer is empty")
        valid = False
    return ParsedOutput(predictions, valid, len(raw), diagnostics)


def format_reward(parsed: ParsedOutput) -> int:
    """Binary format reward: 1 iff the completion met the canonical schema."""
    return 1 if parsed.format_valid else 0


def to_canonical_json(parsed: ParsedOutput, domain: str) -> str:
    """Serialize back to the canonical completion schema for the domain."""
    if domain == "legal":
        pred = parsed.predictions[0] if parsed.predictions else Prediction("", "", 1)
        payload: dict[str, Any] = {"answer": pred.label, "reasoning": pred.reasoning}
    else:
        payload = {"diagnoses": [{"name": p.label, "reasoning": p.reasoning}
                                 for p in parsed.predictions]}
    return json.dumps(payload, ensure_ascii=False)


def _extract_object(raw: str, strict: bool, diagnostics: list[str]) -> dict[str, Any] | None:
    """Find the first parseable JSON object in ``raw``.

    Scans candidate '{' positions left to right and attempts a decode at
    each; in strict mode only a completion that starts with '{' (after
    whitespace) is accepted.
    """
    if not raw or not raw.strip():
        diagnostics.append("empty completion")
        return None
    decoder = json.JSONDecoder()
    start = 0
    first_candidate = True
    while True:
        brace = raw.find("{", start)
        if brace < 0:
            diagnostics.append("no JSON object found")
            return None
        if strict and raw[:brace].strip():
            diagnostics.append("completion does not start with '{' (strict mode)")
            return None
        try:
            obj, _end = decoder.raw_decode(raw, brace)
        except json.JSONDecodeError:
            obj = None
        if isinstance(obj, dict):
            if not first_candidate:
                diagnostics.append("skipped unparseable text before the JSON object")
            return obj
        if strict:
            diagnostics.append("completion starts with '{' but is not a parseable object")
            return None
        first_candidate = False
        start = brace + 1
