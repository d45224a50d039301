"""Corpus chunking and exact top-k cosine retrieval.

Documents are cut into fixed-stride token windows (size 320, overlap 64 by
default, in the active backend's token units) and embedded into a flat
index. Search is an exact scan: at desk scale there is no reason to pay
the accuracy cost of an approximate structure, and exactness doubles as a
trivially checkable contract.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .backends import ScorerBackend
from .errors import InputError, PreconditionError, ProtocolError

CHUNK_SIZE_TOKENS = 320
CHUNK_OVERLAP_TOKENS = 64
INDEX_FORMAT_VERSION = 1


@dataclass
class Chunk:
    doc_id: str
    chunk_index: int
    token_span: tuple[int, int]
    text: str
    embedding: np.ndarray | None = None


@dataclass
class VectorIndex:
    chunks: list[Chunk]
    dimension: int
    backend_id: str
    metric: str = "cosine"
    _matrix: np.ndarray | None = field(default=None, repr=False)

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            if not self.chunks:
                self._matrix = np.zeros((0, self.dimension))
            else:
                self._matrix = np.stack([c.embedding for c in self.chunks])
        return self._matrix

    def __len__(self) -> int:
        return len(self.chunks)


def chunk_document(text: str, backend: ScorerBackend, doc_id: str = "doc",
                   size: int = CHUNK_SIZE_TOKENS,
                   overlap: int = CHUNK_OVERLAP_TOKENS) -> list[Chunk]:
    """Cut a document into overlapping token windows.

    Windows start every (size - overlap) tokens; a final partial window is
    kept only if it covers at least one token the previous window did not.
    Chunk text is sliced from the original document at token character
    boundaries, so no characters are invented or lost inside a span.
    """
    if size <= overlap or overlap < 0:
        raise PreconditionError(f"need size > overlap >= 0, got size={size}, overlap={overlap}")
    spans = backend.tokenize(text)
    n = spans.count
    if n == 0:
        return []
    stride = size - overlap
    chunks = []
    previous_end = 0
    for start in range(0, n, stride):
        end = min(start + size, n)
        if start > 0 and end <= previous_end:
            break
        char_start = spans.offsets[start][0]
        char_end = spans.offsets[end - 1][1]
        chunks.append(Chunk(
            doc_id=doc_id,
            chunk_index=len(chunks),
            token_span=(start, end),
            text=text[char_start:char_end],
        ))
        previous_end = end
        if end == n:
            break
    return chunks


def build_index(chunks: Sequence[Chunk], backend: ScorerBackend,
                batch_size: int = 64) -> VectorIndex:
    """Embed all chunks (batched) into a flat cosine index."""
    chunks = list(chunks)
    if not chunks:
        return VectorIndex([], dimension=0, backend_id=backend.identifier)
    dimension = None
    for offset in range(0, len(chunks), batch_size):
        batch = chunks[offset:offset + batch_size]
        vectors = backend.embed_batch([c.text for c in batch])
        if dimension is None:
            dimension = vectors.shape[1]
        elif vectors.shape[1] != dimension:
            raise ProtocolError(
                f"embedding dimension changed across batches: {dimension} -> {vectors.shape[1]}")
        for chunk, vector in zip(batch, vectors):
            chunk.embedding = vector
    return VectorIndex(chunks, dimension=int(dimension), backend_id=backend.identifier)


def query(index: VectorIndex, query_text: str, backend: ScorerBackend,
          k: int = 3) -> list[tuple[Chunk, float]]:
    """Exact top-k scan: cosine against every chunk, descending.

    Ties resolve to the lowest insertion index; k is clipped to the index
    size.
    """
    if len(index) == 0:
        raise PreconditionError("cannot query an empty index")
    if k < 1:
        raise PreconditionError(f"k must be >= 1, got {k}")
    if backend.identifier != index.backend_id:
        raise PreconditionError(
            f"index was built with backend {index.backend_id!r}, "
            f"queried with {backend.identifier!r}")
    query_vector = backend.embed_batch([query_text])[0]
    similarities = index.matrix @ query_vector
    order = np.argsort(-similarities, kind="stable")[:min(k, len(index))]
    return [(index.chunks[int(i)], float(similarities[int(i)])) for i in order]


def save_index(index: VectorIndex, path: str | Path):
    payload = {
        "version": INDEX_FORMAT_VERSION,
        "dimension": index.dimension,
        "backend_id": index.backend_id,
        "metric": index.metric,
        "chunks": [
            {
                "doc_id": c.doc_id,
                "chunk_index": c.chunk_index,
                "token_span": list(c.token_span),
                "text": c.text,
                "embedding": [float(x) for x in c.embedding],
            }
            for c in index.chunks
        ],
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_index(path: str | Path) -> VectorIndex:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read index file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"index file is not valid JSON: {exc.msg}") from exc
    if payload.get("version") != INDEX_FORMAT_VERSION:
        raise InputError(f"unsupported index version {payload.get('version')!r}")
    chunks = [
        Chunk(
            doc_id=row["doc_id"],
            chunk_index=row["chunk_index"],
            token_span=tuple(row["token_span"]),
            text=row["text"],
            embedding=np.asarray(row["embedding"], dtype=np.float64),
        )
        for row in payload["chunks"]
    ]
    return VectorIndex(chunks, dimension=payload["dimension"],
                       backend_id=payload["backend_id"], metric=payload.get("metric", "cosine"))
