"""Lexical chunk retrieval: BM25 ranking plus a pluggable rerank stage.

Tokens are maximal runs of Unicode letters and digits, lowercased. BM25
uses IDF = ln(1 + (N - df + 0.5) / (df + 0.5)), which is positive for
every df <= N. retrieve() keeps the top_lexical best BM25 chunks (zero
scores are dropped), reranks them, and returns the top_final results
ordered by (rerank desc, lexical desc, chunk ref asc). A failing
reranker flags the affected results and scores them 0.0 so lexical
order prevails.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Protocol

from .corpus import Chunk, ChunkRef, Document, chunk_document
from .errors import ConfigError, LtnOfferError, RetrievalError

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return [m.group(0).lower() for m in _TOKEN_RE.finditer(text)]


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    """Jaccard similarity of two token multisets' supports; empty/empty -> 0."""
    sa, sb = set(a), set(b)
    if not sa and not sb:
        return 0.0
    return len(sa & sb) / len(sa | sb)


class Bm25Index:
    """Inverted index over tokenized chunks with BM25 scoring."""

    def __init__(self, k1: float = 1.2, b: float = 0.75):
        if k1 < 0 or not 0.0 <= b <= 1.0:
            raise ConfigError(f"invalid BM25 parameters k1={k1}, b={b}")
        self.k1 = k1
        self.b = b
        self.postings: dict[str, dict[ChunkRef, int]] = {}
        self.lengths: dict[ChunkRef, int] = {}
        self.avg_length = 0.0

    def add(self, ref: ChunkRef, tokens: list[str]) -> None:
        if ref in self.lengths:
            raise RetrievalError(f"chunk {ref} indexed twice")
        self.lengths[ref] = len(tokens)
        for tok in tokens:
            bucket = self.postings.setdefault(tok, {})
            bucket[ref] = bucket.get(ref, 0) + 1
        self._total_length = getattr(self, "_total_length", 0) + len(tokens)
        self.avg_length = self._total_length / len(self.lengths)

    @property
    def n_chunks(self) -> int:
        return len(self.lengths)

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, {}))
        return math.log(1.0 + (self.n_chunks - df + 0.5) / (df + 0.5))

    def score(self, query_tokens: list[str], ref: ChunkRef) -> float:
        """BM25 score of one chunk; sums over query tokens in order."""
        if ref not in self.lengths:
            raise RetrievalError(f"unknown chunk {ref}")
        if self.n_chunks == 0:
            return 0.0
        norm = self.lengths[ref] / self.avg_length if self.avg_length else 0.0
        total = 0.0
        for term in query_tokens:
            tf = self.postings.get(term, {}).get(ref, 0)
            if tf == 0:
                continue
            denom = tf + self.k1 * (1.0 - self.b + self.b * norm)
            total += self.idf(term) * tf * (self.k1 + 1.0) / denom
        return total

    def rank(self, query_tokens: list[str]) -> list[tuple[ChunkRef, float]]:
        """All chunks by (score desc, ref asc)."""
        scored = [(ref, self.score(query_tokens, ref)) for ref in self.lengths]
        scored.sort(key=lambda item: (-item[1], item[0].doc_id, item[0].index))
        return scored


def build_index(chunks: Iterable[Chunk], k1: float = 1.2, b: float = 0.75) -> Bm25Index:
    index = Bm25Index(k1=k1, b=b)
    for chunk in chunks:
        index.add(chunk.ref, tokenize(chunk.text))
    return index


# ---------------------------------------------------------------------------
# rerank stage


class Reranker(Protocol):
    def score(self, query: str, chunk_text: str) -> float:
        """Relevance in [0, 1]; may raise LtnOfferError on failure."""
        ...


class JaccardReranker:
    """Token-set overlap between query and chunk; the default reranker."""

    def score(self, query: str, chunk_text: str) -> float:
        return jaccard(tokenize(query), tokenize(chunk_text))


@dataclass
class RetrievalResult:
    ref: ChunkRef
    text: str
    lexical_score: float
    rerank_score: float
    rank: int
    rerank_failed: bool = False


def retrieve(index: Bm25Index, chunks_by_ref: Mapping[ChunkRef, Chunk], query: str,
             reranker: Reranker, top_lexical: int = 20,
             top_final: int = 3) -> list[RetrievalResult]:
    """Two-stage retrieval; chunks that match no query term are dropped."""
    if top_final > top_lexical:
        raise ConfigError(f"top_final {top_final} exceeds top_lexical {top_lexical}")
    query_tokens = tokenize(query)
    survivors = [(ref, s) for ref, s in index.rank(query_tokens) if s > 0.0]
    survivors = survivors[:top_lexical]

    interim = []
    for ref, lexical in survivors:
        text = chunks_by_ref[ref].text
        try:
            rerank = float(reranker.score(query, text))
            rerank = min(1.0, max(0.0, rerank))
            failed = False
        except LtnOfferError:
            rerank = 0.0
            failed = True
        interim.append((ref, text, lexical, rerank, failed))

    interim.sort(key=lambda item: (-item[3], -item[2], item[0].doc_id, item[0].index))
    return [
        RetrievalResult(ref, text, lexical, rerank, rank, failed)
        for rank, (ref, text, lexical, rerank, failed) in enumerate(interim[:top_final])
    ]


# ---------------------------------------------------------------------------
# per-document convenience wrapper


@dataclass
class ChunkRetriever:
    """Chunks documents on demand and answers queries against one document."""

    chunk_size: int = 1000
    overlap: int = 200
    k1: float = 1.2
    b: float = 0.75
    top_lexical: int = 20
    top_final: int = 3
    reranker: Reranker = field(default_factory=JaccardReranker)

    def __post_init__(self):
        self._cache: dict[str, tuple[dict[ChunkRef, Chunk], Bm25Index]] = {}

    def _entry(self, doc: Document) -> tuple[dict[ChunkRef, Chunk], Bm25Index]:
        entry = self._cache.get(doc.id)
        if entry is None:
            chunks = chunk_document(doc, self.chunk_size, self.overlap)
            by_ref = {chunk.ref: chunk for chunk in chunks}
            entry = (by_ref, build_index(chunks, self.k1, self.b))
            self._cache[doc.id] = entry
        return entry

    def chunks(self, doc: Document) -> list[Chunk]:
        by_ref, _ = self._entry(doc)
        return list(by_ref.values())

    def retrieve(self, doc: Document, query: str) -> list[RetrievalResult]:
        by_ref, index = self._entry(doc)
        return retrieve(index, by_ref, query, self.reranker,
                        self.top_lexical, self.top_final)
