"""HTTP reward service for online trainer integration.

One stateless endpoint scores a sampled completion group exactly the way
the offline CLI does (both call straight into score_group), so online and
offline records are bit-identical for identical inputs.
"""

from __future__ import annotations

from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .cases import CaseRecord
from .config import EngineConfig, make_backend
from .errors import EngineError, InputError, PreconditionError, TransportError
from .rewards import score_group


def create_app(config: EngineConfig | None = None, backend=None) -> FastAPI:
    config = config or EngineConfig()
    backend = backend or make_backend(config)
    app = FastAPI(title="groundeval reward service")

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/v1/score-group")
    async def score_group_endpoint(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "request body must be valid JSON")
        try:
            case, completions, effective = _parse_request(body, config)
            records = score_group(
                case, completions,
                weights=effective.weights,
                backend=backend,
                tau=effective.tau,
                top_k=effective.top_k,
                sigma_floor=effective.sigma_floor,
                strict_parse=effective.strict_parse,
                include_label=effective.include_label_in_hypothesis,
            )
        except TransportError as exc:
            return _error(503, str(exc))
        except (InputError, PreconditionError) as exc:
            return _error(400, str(exc))
        except EngineError as exc:
            return _error(500, str(exc))
        return {
            "case_id": case.id,
            "backend": backend.identifier,
            "records": [r.to_dict() for r in records],
        }

    return app


def _parse_request(body: Any, config: EngineConfig):
    if not isinstance(body, dict):
        raise InputError("request body must be a JSON object")
    if "case" not in body or "completions" not in body:
        raise InputError("request requires 'case' and 'completions'")
    case = CaseRecord.from_dict(body["case"], default_domain=config.domain)
    completions = body["completions"]
    if (not isinstance(completions, list)
            or not all(isinstance(c, str) for c in completions)):
        raise InputError("'completions' must be a list of strings")
    if len(completions) < 2:
        raise InputError(
            f"a group needs at least 2 completions, got {len(completions)}")
    overrides = body.get("overrides") or {}
    if not isinstance(overrides, dict):
        raise InputError("'overrides' must be an object")
    effective = config.updated(overrides) if overrides else config
    return case, completions, effective


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": {"status": status, "message": message}})
