"""Case records: one task instance with its context, evidence and references."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

from .errors import InputError, PreconditionError

DOMAINS = ("medical", "legal")


@dataclass(frozen=True)
class CaseRecord:
    """A single scoreable case.

    ``anchor`` is the core framing (chief complaint + history, or the legal
    fact pattern) and is prepended to every premise during grounding.
    ``sections`` are supplementary note sections in source order;
    ``evidence`` holds retrieved passages, possibly empty.
    """

    id: str
    anchor: str
    domain: str = "medical"
    sections: tuple[tuple[str, str], ...] = ()
    evidence: tuple[str, ...] = ()
    references: tuple[str, ...] = ()
    gold_passage: str | None = None

    def __post_init__(self):
        if not self.anchor or not self.anchor.strip():
            raise PreconditionError(f"case {self.id!r}: anchor must be non-empty")
        if self.domain not in DOMAINS:
            raise PreconditionError(
                f"case {self.id!r}: domain must be one of {DOMAINS}, got {self.domain!r}"
            )

    @classmethod
    def from_dict(cls, obj: dict[str, Any], default_domain: str = "medical") -> "CaseRecord":
        if not isinstance(obj, dict):
            raise InputError(f"case must be a JSON object, got {type(obj).__name__}")
        if "id" not in obj or "anchor" not in obj:
            raise InputError("case requires 'id' and 'anchor' fields")
        sections = obj.get("sections", [])
        try:
            sections = tuple((str(name), str(text)) for name, text in sections)
        except (TypeError, ValueError):
            raise InputError("'sections' must be a list of [name, text] pairs") from None
        return cls(
            id=str(obj["id"]),
            anchor=str(obj["anchor"]),
            domain=str(obj.get("domain", default_domain)),
            sections=sections,
            evidence=tuple(str(e) for e in obj.get("evidence", [])),
            references=tuple(str(r) for r in obj.get("references", [])),
            gold_passage=(str(obj["gold_passage"]) if obj.get("gold_passage") else None),
        )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "id": self.id,
            "domain": self.domain,
            "anchor": self.anchor,
            "sections": [list(pair) for pair in self.sections],
            "evidence": list(self.evidence),
            "references": list(self.references),
        }
        if self.gold_passage is not None:
            out["gold_passage"] = self.gold_passage
        return out


def load_cases(path: str | Path, default_domain: str = "medical") -> list[CaseRecord]:
    """Load a JSONL corpus of cases, enforcing unique ids.

    Invalid bytes are replaced rather than rejected so that a single bad
    character cannot take down a whole evaluation run.
    """
    cases: list[CaseRecord] = []
    seen: set[str] = set()
    for lineno, obj in iter_jsonl(path):
        try:
            case = CaseRecord.from_dict(obj, default_domain=default_domain)
        except (InputError, PreconditionError) as exc:
            raise InputError(str(exc), line=lineno) from exc
        if case.id in seen:
            raise InputError(f"duplicate case id {case.id!r}", line=lineno)
        seen.add(case.id)
        cases.append(case)
    return cases


def iter_jsonl(path: str | Path) -> Iterable[tuple[int, Any]]:
    """Yield (line_number, parsed_object) for each non-blank JSONL line."""
    try:
        fh = open(path, encoding="utf-8", errors="replace")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"invalid JSON: {exc.msg}", line=lineno) from exc
