"""Synthetic corpus: determinism, label balance, and marker ground truth."""

from collections import Counter

from ltn_offer.predicates import PREDICATE_KEYS
from ltn_offer.synthetic import (
    ENGLISH_SHARE, META_FEATURES, META_LANGUAGE, META_MARKER_PREFIX,
    META_TEMPLATE, generate_synthetic_corpus,
)


def test_deterministic_per_seed():
    a = generate_synthetic_corpus(50, 0.4, seed=3)
    b = generate_synthetic_corpus(50, 0.4, seed=3)
    c = generate_synthetic_corpus(50, 0.4, seed=4)
    assert a == b
    assert a != c


def test_exact_label_counts():
    for n, rate in ((50, 0.4), (200, 0.35), (10, 0.5), (7, 0.0), (7, 1.0)):
        docs = generate_synthetic_corpus(n, rate, seed=1)
        assert len(docs) == n
        assert sum(d.label for d in docs) == round(n * rate)
        assert all(d.label in (0, 1) for d in docs)
        assert len({d.id for d in docs}) == n


def test_language_mix():
    # each doc draws its language independently at ENGLISH_SHARE
    docs = generate_synthetic_corpus(200, 0.35, seed=7)
    langs = Counter(d.meta[META_LANGUAGE] for d in docs)
    assert set(langs) == {"de", "en"}
    expected = 200 * ENGLISH_SHARE
    assert abs(langs["en"] - expected) < 4 * (expected * (1 - ENGLISH_SHARE)) ** 0.5


def test_meta_feature_markers_appear_verbatim():
    docs = generate_synthetic_corpus(80, 0.5, seed=21)
    for doc in docs:
        features = [f for f in doc.meta[META_FEATURES].split(",") if f]
        assert set(features) <= set(PREDICATE_KEYS)
        for feat in features:
            phrase = doc.meta[META_MARKER_PREFIX + feat]
            assert phrase in doc.text, f"{doc.id}: marker for {feat} missing"
        # features absent from the list carry no marker key
        for key in PREDICATE_KEYS:
            if key not in features:
                assert META_MARKER_PREFIX + key not in doc.meta


def test_positive_documents_carry_core_markers():
    docs = generate_synthetic_corpus(120, 0.5, seed=5)
    for doc in docs:
        features = set(doc.meta[META_FEATURES].split(","))
        if doc.label == 1:
            assert {"TITLE", "NUMBER"} <= features
            assert "NOT_OFFER" not in features
        else:
            assert "NOT_OFFER" in features
            assert "TITLE" not in features


def test_templates_match_labels():
    docs = generate_synthetic_corpus(150, 0.4, seed=13)
    templates = Counter(d.meta[META_TEMPLATE] for d in docs)
    assert "offer" in templates
    assert len(templates) >= 3
    for doc in docs:
        if doc.label == 1:
            assert doc.meta[META_TEMPLATE] == "offer"
        else:
            assert doc.meta[META_TEMPLATE] != "offer"
