"""Command-line front end.

Subcommands: score, evaluate, aggregate-sc, index, query, serve. Bulk I/O
is JSONL (one case or rollout per line). Exit codes: 0 success, 2 input
error, 3 backend error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import aggregate as sc
from .cases import CaseRecord, iter_jsonl, load_cases
from .config import EngineConfig, load_config, make_backend
from .errors import EngineError, InputError, ProtocolError, TransportError
from .metrics import evaluate_corpus
from .parsing import parse_legal, parse_medical, to_canonical_json
from .retrieval import build_index, chunk_document, load_index, query, save_index
from .rewards import score_group

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_BACKEND = 3


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_OK
    try:
        config = load_config(args.config, flags=_config_flags(args))
        return args.handler(args, config)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (TransportError, ProtocolError) as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groundeval",
        description="Reward scoring and grounding evaluation for structured completions",
    )
    parser.set_defaults(command=None)
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--domain", choices=["medical", "legal"])
        p.add_argument("--backend-url", dest="backend_url")
        p.add_argument("--mock", action="store_true", default=None,
                       help="use the deterministic in-process backend")
        p.add_argument("--seed", type=int)
        p.add_argument("--k", dest="top_k", type=int)
        p.add_argument("--tau", type=float)
        p.add_argument("--group-size", dest="group_size", type=int)
        p.add_argument("--strict", dest="strict_parse", action="store_true", default=None)

    p_score = sub.add_parser("score", help="score rollout groups into reward records")
    common(p_score)
    p_score.add_argument("--cases", required=True)
    p_score.add_argument("--rollouts", required=True)
    p_score.add_argument("--output", "-o", help="rewards JSONL (default stdout)")
    p_score.set_defaults(handler=cmd_score)

    p_eval = sub.add_parser("evaluate", help="compute corpus metrics and taxonomy rates")
    common(p_eval)
    p_eval.add_argument("--cases", required=True)
    p_eval.add_argument("--rollouts", required=True)
    p_eval.add_argument("--format", choices=["json", "csv"], default="json")
    p_eval.add_argument("--label", help="row label for CSV output")
    p_eval.add_argument("--output", "-o", help="report path (default stdout)")
    p_eval.set_defaults(handler=cmd_evaluate)

    p_sc = sub.add_parser("aggregate-sc", help="self-consistency aggregation of N samples")
    common(p_sc)
    p_sc.add_argument("--samples", required=True, help="JSONL of {'completion': ...}")
    p_sc.add_argument("--output", "-o")
    p_sc.set_defaults(handler=cmd_aggregate_sc)

    p_index = sub.add_parser("index", help="chunk and embed a document corpus")
    common(p_index)
    p_index.add_argument("--corpus", required=True, help="JSONL of {'doc_id', 'text'}")
    p_index.add_argument("--output", "-o", required=True)
    p_index.add_argument("--size", type=int, default=None, help="chunk size in tokens")
    p_index.add_argument("--overlap", type=int, default=None, help="chunk overlap in tokens")
    p_index.set_defaults(handler=cmd_index)

    p_query = sub.add_parser("query", help="top-k cosine search against a saved index")
    common(p_query)
    p_query.add_argument("--index", required=True)
    p_query.add_argument("--query", required=True)
    p_query.set_defaults(handler=cmd_query)

    p_serve = sub.add_parser("serve", help="run the HTTP reward service")
    common(p_serve)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8080)
    p_serve.set_defaults(handler=cmd_serve)

    return parser


def _config_flags(args) -> dict:
    names = ("domain", "backend_url", "mock", "seed", "top_k", "tau",
             "group_size", "strict_parse")
    return {name: getattr(args, name, None) for name in names}


# -- commands -----------------------------------------------------------------


def cmd_score(args, config: EngineConfig) -> int:
    backend = make_backend(config)
    cases = {case.id: case for case in load_cases(args.cases, config.domain)}
    lines = []
    for lineno, obj in iter_jsonl(args.rollouts):
        case, completions = _rollout_group(obj, cases, lineno)
        records = score_group(
            case, completions, weights=config.weights, backend=backend,
            tau=config.tau, top_k=config.top_k, sigma_floor=config.sigma_floor,
            strict_parse=config.strict_parse,
            include_label=config.include_label_in_hypothesis,
        )
        for record in records:
            lines.append(json.dumps({"case_id": case.id, **record.to_dict()}))
    _write_lines(lines, args.output)
    return EXIT_OK


def cmd_evaluate(args, config: EngineConfig) -> int:
    backend = make_backend(config)
    cases = load_cases(args.cases, config.domain)
    by_id = {case.id: case for case in cases}
    outputs = {}
    for lineno, obj in iter_jsonl(args.rollouts):
        case_id, completion = _rollout_single(obj, by_id, lineno)
        parse = parse_legal if by_id[case_id].domain == "legal" else parse_medical
        outputs[case_id] = parse(completion, strict=config.strict_parse)
    report = evaluate_corpus(cases, outputs, config.eval_options(), backend)
    if args.format == "csv":
        text = report.to_csv(label=args.label)
    else:
        text = json.dumps(report.to_dict(), indent=2) + "\n"
    _write_text(text, args.output)
    return EXIT_OK


def cmd_aggregate_sc(args, config: EngineConfig) -> int:
    if config.domain != "medical":
        raise InputError("aggregate-sc operates on medical 5-prediction outputs")
    backend = make_backend(config)
    samples = []
    for lineno, obj in iter_jsonl(args.samples):
        if not isinstance(obj, dict) or "completion" not in obj:
            raise InputError("sample line requires a 'completion' field", line=lineno)
        samples.append(parse_medical(str(obj["completion"]), strict=config.strict_parse))
    if not samples:
        _write_text(to_canonical_json(
            sc.aggregate([_empty_sample()], backend), "medical") + "\n", args.output)
        return EXIT_OK
    result = sc.aggregate(samples, backend, threshold=config.cluster_threshold,
                          top_n=config.sc_top_n)
    for note in result.parse_diagnostics:
        print(f"warning: {note}", file=sys.stderr)
    _write_text(to_canonical_json(result, "medical") + "\n", args.output)
    return EXIT_OK


def cmd_index(args, config: EngineConfig) -> int:
    backend = make_backend(config)
    chunks = []
    for lineno, obj in iter_jsonl(args.corpus):
        if not isinstance(obj, dict) or "doc_id" not in obj or "text" not in obj:
            raise InputError("corpus line requires 'doc_id' and 'text'", line=lineno)
        chunks.extend(chunk_document(
            str(obj["text"]), backend, doc_id=str(obj["doc_id"]),
            size=args.size or config.chunk_size,
            overlap=args.overlap if args.overlap is not None else config.chunk_overlap,
        ))
    index = build_index(chunks, backend)
    save_index(index, args.output)
    print(f"indexed {len(index)} chunks (dim {index.dimension}) -> {args.output}",
          file=sys.stderr)
    return EXIT_OK


def cmd_query(args, config: EngineConfig) -> int:
    backend = make_backend(config)
    index = load_index(args.index)
    hits = query(index, args.query, backend, k=config.top_k)
    for chunk, similarity in hits:
        print(json.dumps({
            "doc_id": chunk.doc_id,
            "chunk_index": chunk.chunk_index,
            "similarity": similarity,
            "text": chunk.text,
        }))
    return EXIT_OK


def cmd_serve(args, config: EngineConfig) -> int:
    import uvicorn

    from .service import create_app

    backend = make_backend(config)
    if hasattr(backend, "ping") and not backend.ping():
        raise TransportError(f"backend at {config.backend_url} is unreachable")
    app = create_app(config, backend)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


# -- I/O helpers ---------------------------------------------------------------


def _rollout_group(obj, cases: dict[str, CaseRecord], lineno: int):
    if not isinstance(obj, dict) or "case_id" not in obj:
        raise InputError("rollout line requires 'case_id'", line=lineno)
    case = cases.get(str(obj["case_id"]))
    if case is None:
        raise InputError(f"unknown case id {obj['case_id']!r}", line=lineno)
    completions = obj.get("completions")
    if not isinstance(completions, list) or not all(isinstance(c, str) for c in completions):
        raise InputError("'completions' must be a list of strings", line=lineno)
    if len(completions) < 2:
        raise InputError("a group needs at least 2 completions", line=lineno)
    return case, completions


def _rollout_single(obj, cases: dict[str, CaseRecord], lineno: int):
    if not isinstance(obj, dict) or "case_id" not in obj:
        raise InputError("rollout line requires 'case_id'", line=lineno)
    case_id = str(obj["case_id"])
    if case_id not in cases:
        raise InputError(f"unknown case id {case_id!r}", line=lineno)
    if "completion" in obj:
        completion = obj["completion"]
    elif isinstance(obj.get("completions"), list) and len(obj["completions"]) == 1:
        completion = obj["completions"][0]
    else:
        raise InputError("evaluation expects one 'completion' per case", line=lineno)
    if not isinstance(completion, str):
        raise InputError("'completion' must be a string", line=lineno)
    return case_id, completion


def _empty_sample():
    from .parsing import ParsedOutput
    return ParsedOutput([], False, 0, ["empty samples file"])


def _write_lines(lines: list[str], path: str | None):
    _write_text("".join(line + "\n" for line in lines), path)


def _write_text(text: str, path: str | None):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    sys.exit(main())
