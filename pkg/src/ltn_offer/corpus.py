"""Documents, chunking and JSONL corpus IO.

A corpus is one JSON object per line with fields id (unique string),
text, optional integer label (1 = valid offer) and optional flat string
meta. Chunking slides a fixed window with overlap and snaps interior
boundaries back to whitespace so words are not split; chunk spans always
cover the full text.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ConfigError, CorpusError


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    label: int | None = None
    meta: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class ChunkRef:
    """Stable pointer to one chunk of one document."""

    doc_id: str
    index: int

    def __str__(self) -> str:
        return f"{self.doc_id}#{self.index}"

    @classmethod
    def parse(cls, text: str) -> "ChunkRef":
        doc_id, sep, idx = text.rpartition("#")
        if not sep or not doc_id or not idx.isdigit():
            raise CorpusError(f"malformed chunk ref '{text}'")
        return cls(doc_id, int(idx))


@dataclass(frozen=True)
class Chunk:
    ref: ChunkRef
    start: int
    end: int
    text: str


@dataclass(frozen=True)
class CorpusStats:
    n_docs: int
    n_positive: int
    n_unlabeled: int

    @property
    def positive_rate(self) -> float:
        labeled = self.n_docs - self.n_unlabeled
        return self.n_positive / labeled if labeled else 0.0


def corpus_stats(docs: Iterable[Document]) -> CorpusStats:
    n = pos = unlabeled = 0
    for doc in docs:
        n += 1
        if doc.label is None:
            unlabeled += 1
        elif doc.label == 1:
            pos += 1
    return CorpusStats(n, pos, unlabeled)


def load_corpus(path: str | Path) -> list[Document]:
    """Read a JSONL corpus; malformed lines raise CorpusError with the line number."""
    docs: list[Document] = []
    seen: set[str] = set()
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"corpus file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise CorpusError(f"line {lineno}: expected a JSON object")
            doc = _parse_doc(obj, lineno)
            if doc.id in seen:
                raise CorpusError(f"line {lineno}: duplicate id '{doc.id}'")
            seen.add(doc.id)
            docs.append(doc)
    return docs


def _parse_doc(obj: dict, lineno: int) -> Document:
    doc_id = obj.get("id")
    if not isinstance(doc_id, str) or not doc_id:
        raise CorpusError(f"line {lineno}: missing or invalid id")
    text = obj.get("text")
    if not isinstance(text, str):
        raise CorpusError(f"line {lineno}: missing or invalid text")
    label = obj.get("label")
    if label is not None:
        if isinstance(label, bool) or label not in (0, 1):
            raise CorpusError(f"line {lineno}: label must be 0 or 1")
    meta = obj.get("meta") or {}
    if not isinstance(meta, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in meta.items()
    ):
        raise CorpusError(f"line {lineno}: meta must map strings to strings")
    return Document(doc_id, text, label, meta)


def write_corpus(docs: Iterable[Document], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc_to_json(doc), ensure_ascii=False) + "\n")


def doc_to_json(doc: Document) -> dict:
    obj: dict = {"id": doc.id, "text": doc.text}
    if doc.label is not None:
        obj["label"] = doc.label
    if doc.meta:
        obj["meta"] = dict(doc.meta)
    return obj


# ---------------------------------------------------------------------------
# chunking

SNAP_WINDOW = 50


def chunk_document(doc: Document, size: int = 1000, overlap: int = 200) -> list[Chunk]:
    """Split doc.text into overlapping chunks.

    Window starts advance by size - overlap. Interior boundaries that would
    split a word are snapped back to the nearest whitespace within
    min(SNAP_WINDOW, overlap) characters; the text start and end are never
    moved, so the union of spans always covers the whole text.
    """
    if size <= 0:
        raise ConfigError(f"chunk size must be positive, got {size}")
    if overlap < 0 or overlap >= size:
        raise ConfigError(f"overlap must be in [0, size), got {overlap}")
    text = doc.text
    n = len(text)
    if n == 0:
        return []
    window = min(SNAP_WINDOW, overlap)
    stride = size - overlap

    starts = [0]
    while starts[-1] + size < n:
        starts.append(starts[-1] + stride)

    chunks: list[Chunk] = []
    for i, s0 in enumerate(starts):
        e0 = min(s0 + size, n)
        s1 = _snap(text, s0, window) if s0 > 0 else 0
        e1 = _snap(text, e0, window) if e0 < n else n
        if s1 >= e1:
            s1, e1 = s0, e0
        chunks.append(Chunk(ChunkRef(doc.id, i), s1, e1, text[s1:e1]))
    return chunks


def _snap(text: str, pos: int, window: int) -> int:
    """Move pos back to just after a whitespace run, at most window chars."""
    if window == 0 or text[pos - 1].isspace() or text[pos].isspace():
        return pos
    for j in range(pos - 1, max(pos - window, 1) - 1, -1):
        if text[j].isspace():
            return j + 1
    return pos
