"""Corpus IO, chunk refs, and the chunker coverage contract."""

import random

import pytest

from ltn_offer.corpus import (
    Chunk, ChunkRef, Document, chunk_document, corpus_stats, load_corpus,
    write_corpus,
)
from ltn_offer.errors import ConfigError, CorpusError


def test_roundtrip(tmp_path):
    docs = [
        Document(id="a", text="Angebot Nr. 1", label=1, meta={"template": "offer"}),
        Document(id="b", text="Rechnung über 100 €", label=0),
        Document(id="c", text="unlabeled"),
    ]
    path = tmp_path / "corpus.jsonl"
    write_corpus(docs, path)
    back = load_corpus(path)
    assert back == docs
    stats = corpus_stats(back)
    assert (stats.n_docs, stats.n_positive, stats.n_unlabeled) == (3, 1, 1)


def test_load_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": "a", "text": "x"}\nnot json\n', encoding="utf-8")
    with pytest.raises(CorpusError, match="line 2"):
        load_corpus(path)


@pytest.mark.parametrize("row", [
    '{"text": "x"}',                          # missing id
    '{"id": "a"}',                            # missing text
    '{"id": 3, "text": "x"}',                 # non-string id
    '{"id": "a", "text": "x", "label": 2}',   # label outside {0,1}
    '{"id": "a", "text": "x", "label": true}',  # bool is not an int label
    '{"id": "a", "text": "x", "meta": {"k": 1}}',  # non-string meta value
])
def test_load_rejects_malformed_rows(tmp_path, row):
    path = tmp_path / "bad.jsonl"
    path.write_text(row + "\n", encoding="utf-8")
    with pytest.raises(CorpusError):
        load_corpus(path)


def test_load_rejects_duplicate_ids(tmp_path):
    path = tmp_path / "dup.jsonl"
    path.write_text('{"id": "a", "text": "x"}\n{"id": "a", "text": "y"}\n',
                    encoding="utf-8")
    with pytest.raises(CorpusError, match="duplicate"):
        load_corpus(path)


def test_chunk_ref_string_form():
    ref = ChunkRef("doc-7", 3)
    assert str(ref) == "doc-7#3"
    assert ChunkRef.parse("doc-7#3") == ref
    # doc ids may contain '#': the last separator wins
    tricky = ChunkRef.parse("a#b#2")
    assert tricky.doc_id == "a#b" and tricky.index == 2
    with pytest.raises(CorpusError):
        ChunkRef.parse("no-separator")
    with pytest.raises(CorpusError):
        ChunkRef.parse("doc#notanint")


def test_short_document_single_chunk():
    doc = Document(id="d", text="short text")
    chunks = chunk_document(doc, size=100, overlap=20)
    assert len(chunks) == 1
    assert chunks[0] == Chunk(ChunkRef("d", 0), 0, 10, "short text")


def test_chunk_coverage_property():
    # every character position is inside at least one chunk; spans are
    # within bounds, ordered, and the text field mirrors the span
    rng = random.Random(2024)
    words = ["angebot", "nr", "netto", "liefer", "zahlung", "kontakt", "gmbh"]
    for trial in range(150):
        n_words = rng.randint(1, 400)
        text = " ".join(rng.choice(words) for _ in range(n_words))
        size = rng.randint(20, 200)
        overlap = rng.randint(0, size - 1)
        doc = Document(id=f"t{trial}", text=text)
        chunks = chunk_document(doc, size=size, overlap=overlap)
        assert chunks
        assert chunks[0].start == 0
        assert chunks[-1].end == len(text)
        covered = set()
        prev_start = 0
        for i, ch in enumerate(chunks):
            assert ch.ref == ChunkRef(doc.id, i)
            assert 0 <= ch.start <= ch.end <= len(text)
            assert ch.text == text[ch.start:ch.end]
            assert ch.start >= prev_start
            prev_start = ch.start
            covered.update(range(ch.start, ch.end))
        assert covered == set(range(len(text)))


def test_chunk_empty_text_yields_nothing():
    assert chunk_document(Document(id="d", text=""), size=10, overlap=2) == []


def test_chunk_boundaries_snap_to_whitespace():
    # inner boundaries move back to just after a space when one is close
    text = ("word " * 60).strip()
    doc = Document(id="d", text=text)
    chunks = chunk_document(doc, size=100, overlap=30)
    for ch in chunks[1:]:
        assert text[ch.start - 1] == " ", f"start {ch.start} not after whitespace"


def test_chunk_rejects_bad_geometry():
    doc = Document(id="d", text="x" * 50)
    with pytest.raises(ConfigError):
        chunk_document(doc, size=0, overlap=0)
    with pytest.raises(ConfigError):
        chunk_document(doc, size=10, overlap=10)
    with pytest.raises(ConfigError):
        chunk_document(doc, size=10, overlap=-1)
