"""Evaluation protocol: metrics, repeated stratified CV and the pipelines.

A pipeline exposes fit(train_ids, labels, seed) -> fitted model with
score_many / threshold / alpha. During fit a pipeline may only touch its
training documents; the guard raises LeakageError otherwise. run_cv
drives a FoldPlan over a pipeline and collects per-fold metrics.

Pipelines:

* ChannelPipeline: precomputed channel vectors, trainable gates (or
  fixed gates for the pattern-matching baseline) plus train-set
  threshold calibration.
* TfidfLtnPipeline: fold-local TF-IDF vectorizer feeding 11 sigmoid
  affine heads trained jointly with the gates through the decision score.
* LlmDirectPipeline: single direct yes/no call per document, fixed 0.5
  threshold, nothing fitted.

The pattern-matching estimator (ie_predicates) also lives here: strong
patterns score 1.0 anywhere, head patterns score 1.0 inside the first
HEAD_LENGTH characters and 0.5 beyond it, weak patterns score 0.5.
"""

from __future__ import annotations

import json
import math
import random
import re
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .corpus import Document
from .errors import (
    CalibrationError, ConfigError, CorpusError, ExtractionError, LeakageError,
)
from .fuzzy import Backend
from .llm_client import CompletionRequest, JsonCallPolicy, LlmClient, ModelEndpoint
from .predicates import (
    DEFAULT_PREDICATES, N_CHANNELS, PREDICATE_KEYS, Method, PredicateEstimate,
    _prompt,
)
from .retrieval import tokenize
from .training import TrainConfig, bce_grad_scores, bce_loss, calibrate_threshold, train_gates

HEAD_LENGTH = 200
IE_FIXED_GATE_ALPHA = 4.0


# ---------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    accuracy: float


def compute_metrics(predictions: Sequence[int], labels: Sequence[int]) -> Metrics:
    """Positive-class precision/recall/F1 plus accuracy; 0/0 counts as 0."""
    if len(predictions) != len(labels) or not labels:
        raise CorpusError("predictions and labels must be equal-length and non-empty")
    tp = fp = fn = tn = 0
    for pred, y in zip(predictions, labels):
        if pred not in (0, 1) or y not in (0, 1):
            raise CorpusError("predictions and labels must be 0/1")
        if pred and y:
            tp += 1
        elif pred and not y:
            fp += 1
        elif not pred and y:
            fn += 1
        else:
            tn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = (tp + tn) / len(labels)
    return Metrics(precision, recall, f1, accuracy)


# ---------------------------------------------------------------------------
# fold plan


@dataclass(frozen=True)
class FoldPlan:
    k: int
    repetitions: int
    doc_ids: tuple[str, ...]
    assignments: tuple[Mapping[str, int], ...]   # one mapping per repetition

    def test_ids(self, rep: int, fold: int) -> list[str]:
        a = self.assignments[rep]
        return [d for d in self.doc_ids if a[d] == fold]

    def train_ids(self, rep: int, fold: int) -> list[str]:
        a = self.assignments[rep]
        return [d for d in self.doc_ids if a[d] != fold]


def make_fold_plan(labels: Mapping[str, int], k: int = 5, repetitions: int = 5,
                   seed: int = 0) -> FoldPlan:
    """Stratified k-fold assignments, reshuffled per repetition.

    Each class is shuffled with a repetition-specific seed and dealt
    round-robin over the folds, so per-fold class counts differ by at
    most one; with counts divisible by k they are exact.
    """
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    if repetitions < 1:
        raise ConfigError(f"repetitions must be >= 1, got {repetitions}")
    doc_ids = tuple(labels)
    positives = [d for d in doc_ids if labels[d] == 1]
    negatives = [d for d in doc_ids if labels[d] == 0]
    if min(len(positives), len(negatives)) < k:
        raise ConfigError(
            f"each class needs at least k={k} members, got "
            f"{len(positives)} positive / {len(negatives)} negative"
        )
    assignments = []
    for rep in range(repetitions):
        rng = random.Random(1_000_003 * seed + rep)
        fold_of: dict[str, int] = {}
        for group in (positives, negatives):
            shuffled = list(group)
            rng.shuffle(shuffled)
            for j, doc_id in enumerate(shuffled):
                fold_of[doc_id] = j % k
        assignments.append(fold_of)
    return FoldPlan(k, repetitions, doc_ids, tuple(assignments))


# ---------------------------------------------------------------------------
# CV driver


@dataclass(frozen=True)
class FoldResult:
    rep: int
    fold: int
    seed: int
    precision: float
    recall: float
    f1: float
    accuracy: float
    threshold: float
    alpha: tuple[float, ...] | None

    def to_json_dict(self) -> dict:
        return {
            "rep": self.rep, "fold": self.fold, "seed": self.seed,
            "precision": self.precision, "recall": self.recall,
            "f1": self.f1, "accuracy": self.accuracy,
            "threshold": self.threshold,
            "alpha": list(self.alpha) if self.alpha is not None else None,
        }


@dataclass(frozen=True)
class CvResult:
    backend: str
    per_fold: tuple[FoldResult, ...]

    def mean_std(self, metric: str) -> tuple[float, float]:
        values = np.array([getattr(f, metric) for f in self.per_fold])
        return float(values.mean()), float(values.std())

    def to_json_dict(self, config_hash: str) -> dict:
        mean, std = self.mean_std("f1")
        return {
            "config_hash": config_hash,
            "backend": self.backend,
            "per_fold": [f.to_json_dict() for f in self.per_fold],
            "summary": {"mean": mean, "std": std},
        }


def run_cv(pipeline, plan: FoldPlan, labels: Mapping[str, int],
           base_seed: int = 0, backend_name: str = "") -> CvResult:
    """Fit and score the pipeline on every (repetition, fold) pair.

    Per-fold seeds are base_seed + 1000 * rep + fold and are recorded in
    the results.
    """
    results = []
    for rep in range(plan.repetitions):
        for fold in range(plan.k):
            seed = base_seed + 1000 * rep + fold
            train_ids = plan.train_ids(rep, fold)
            test_ids = plan.test_ids(rep, fold)
            overlap = set(train_ids) & set(test_ids)
            if overlap:
                raise LeakageError(f"fold plan overlap: {sorted(overlap)[:3]}")
            fitted = pipeline.fit(train_ids, labels, seed)
            scores = fitted.score_many(test_ids)
            preds = [int(s >= fitted.threshold) for s in scores]
            m = compute_metrics(preds, [labels[d] for d in test_ids])
            alpha = getattr(fitted, "alpha", None)
            results.append(FoldResult(
                rep=rep, fold=fold, seed=seed,
                precision=m.precision, recall=m.recall, f1=m.f1,
                accuracy=m.accuracy, threshold=float(fitted.threshold),
                alpha=tuple(float(x) for x in alpha) if alpha is not None else None,
            ))
    return CvResult(backend=backend_name, per_fold=tuple(results))


# ---------------------------------------------------------------------------
# channel pipeline (oracle / IE / MCSR / CISC estimates)


class ChannelPipeline:
    """Scores documents from precomputed channel vectors.

    With fixed_alpha set the gates are frozen (pattern-matching baseline);
    otherwise they are trained on the fold's training channels. The
    decision threshold is always calibrated on training scores.
    """

    def __init__(self, channels_by_doc: Mapping[str, np.ndarray], backend: Backend,
                 train_config: TrainConfig | None = None, fixed_alpha=None):
        self.channels_by_doc = channels_by_doc
        self.backend = backend
        self.train_config = train_config or TrainConfig()
        self.fixed_alpha = (np.asarray(fixed_alpha, dtype=np.float64)
                            if fixed_alpha is not None else None)
        self._allowed: frozenset[str] | None = None

    def channels_for(self, doc_id: str) -> np.ndarray:
        if self._allowed is not None and doc_id not in self._allowed:
            raise LeakageError(f"document {doc_id} touched during fit outside its fold")
        try:
            return self.channels_by_doc[doc_id]
        except KeyError:
            raise CorpusError(f"no channel vector for document {doc_id}") from None

    def fit(self, train_ids: Iterable[str], labels: Mapping[str, int], seed: int):
        train_ids = list(train_ids)
        self._allowed = frozenset(train_ids)
        try:
            X = np.stack([self.channels_for(d) for d in train_ids])
            y = np.array([labels[d] for d in train_ids], dtype=np.float64)
            if self.fixed_alpha is not None:
                alpha = self.fixed_alpha.copy()
                curve: list[float] = []
            else:
                model = train_gates(X, y, self.backend,
                                    replace(self.train_config, seed=seed))
                alpha = model.alpha
                curve = model.loss_curve
            scores, _, _ = kernels.score_batch(X, alpha, self.backend)
            threshold = calibrate_threshold(scores.tolist(), y.astype(int).tolist())
        finally:
            self._allowed = None
        return FittedChannelModel(self, alpha, threshold, curve)


@dataclass
class FittedChannelModel:
    pipeline: ChannelPipeline
    alpha: np.ndarray
    threshold: float
    loss_curve: list[float]

    def score_many(self, doc_ids: Sequence[str]) -> np.ndarray:
        if not doc_ids:
            return np.zeros(0)
        X = np.stack([self.pipeline.channels_for(d) for d in doc_ids])
        scores, _, _ = kernels.score_batch(X, self.alpha, self.pipeline.backend)
        return scores


# ---------------------------------------------------------------------------
# pattern-matching estimator


@lru_cache(maxsize=1)
def _default_pattern_bank() -> dict:
    raw = resources.files("ltn_offer").joinpath("assets/ie_patterns.json").read_text("utf-8")
    return json.loads(raw)


@lru_cache(maxsize=8)
def _compiled_bank(bank_json: str) -> dict:
    bank = json.loads(bank_json)
    compiled = {}
    for key, groups in bank.items():
        compiled[key] = {
            kind: [re.compile(p, re.IGNORECASE | re.UNICODE) for p in groups.get(kind, [])]
            for kind in ("head", "strong", "weak")
        }
    return compiled


def ie_predicates(doc: Document, patterns: dict | None = None) -> list[PredicateEstimate]:
    """Pattern-bank predicate estimates: strong 1.0, weak 0.5, head-scoped 1.0."""
    bank = patterns if patterns is not None else _default_pattern_bank()
    missing = [k for k in PREDICATE_KEYS if k not in bank]
    if missing:
        raise ConfigError(f"pattern bank misses predicates: {missing}")
    compiled = _compiled_bank(json.dumps(bank, sort_keys=True))
    estimates = []
    for key in PREDICATE_KEYS:
        groups = compiled[key]
        value = 0.0
        if any(rx.search(doc.text) for rx in groups["strong"]):
            value = 1.0
        else:
            head_hit = None
            for rx in groups["head"]:
                m = rx.search(doc.text)
                if m is not None:
                    head_hit = m
                    if m.start() < HEAD_LENGTH:
                        value = 1.0
                        break
            if value == 0.0 and head_hit is not None:
                value = 0.5
            if value == 0.0 and any(rx.search(doc.text) for rx in groups["weak"]):
                value = 0.5
        estimates.append(PredicateEstimate(key, Method.IE, value))
    return estimates


# ---------------------------------------------------------------------------
# TF-IDF + gated decision layer baseline


class TfidfVectorizer:
    """Hand-rolled TF-IDF: smooth idf ln((1+N)/(1+df)) + 1, L2-normalized rows."""

    def __init__(self):
        self.vocabulary: dict[str, int] = {}
        self.idf: np.ndarray | None = None

    def fit(self, texts: Sequence[str]) -> "TfidfVectorizer":
        df: dict[str, int] = {}
        for text in texts:
            for term in set(tokenize(text)):
                df[term] = df.get(term, 0) + 1
        if not df:
            raise ConfigError("empty vocabulary: no tokens in training texts")
        self.vocabulary = {term: i for i, term in enumerate(sorted(df))}
        n = len(texts)
        self.idf = np.array(
            [math.log((1 + n) / (1 + df[term])) + 1.0 for term in sorted(df)]
        )
        return self

    def transform(self, texts: Sequence[str]) -> np.ndarray:
        if self.idf is None:
            raise ConfigError("vectorizer is not fitted")
        X = np.zeros((len(texts), len(self.vocabulary)))
        for row, text in enumerate(texts):
            for term in tokenize(text):
                col = self.vocabulary.get(term)
                if col is not None:
                    X[row, col] += 1.0
        X *= self.idf[None, :]
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        return X / norms


class TfidfLtnPipeline:
    """Fold-local TF-IDF features feeding 11 sigmoid heads and the gates.

    Heads (W, b) and gates alpha are trained jointly through the decision
    score with the same optimizer settings as the channel pipeline. Head
    biases start at logit(0.2) so every channel begins at 0.2; weights
    and gate parameters start at zero.
    """

    def __init__(self, texts_by_doc: Mapping[str, str], backend: Backend,
                 train_config: TrainConfig | None = None):
        self.texts_by_doc = texts_by_doc
        self.backend = backend
        self.train_config = train_config or TrainConfig()
        self._allowed: frozenset[str] | None = None

    def text_for(self, doc_id: str) -> str:
        if self._allowed is not None and doc_id not in self._allowed:
            raise LeakageError(f"document {doc_id} touched during fit outside its fold")
        try:
            return self.texts_by_doc[doc_id]
        except KeyError:
            raise CorpusError(f"no text for document {doc_id}") from None

    def fit(self, train_ids: Iterable[str], labels: Mapping[str, int], seed: int):
        train_ids = list(train_ids)
        self._allowed = frozenset(train_ids)
        try:
            texts = [self.text_for(d) for d in train_ids]
            y = np.array([labels[d] for d in train_ids], dtype=np.float64)
            if len(set(y.tolist())) < 2:
                raise CalibrationError("training fold contains a single class")
            vectorizer = TfidfVectorizer().fit(texts)
            X = vectorizer.transform(texts)
            W, b, alpha, curve = self._train(X, y)
            scores = self._scores(X, W, b, alpha)
            threshold = calibrate_threshold(scores.tolist(), y.astype(int).tolist())
        finally:
            self._allowed = None
        return FittedTfidfModel(self, vectorizer, W, b, alpha, threshold, curve)

    def _scores(self, X, W, b, alpha):
        P = 1.0 / (1.0 + np.exp(-(X @ W + b[None, :])))
        scores, _, _ = kernels.score_batch(P, alpha, self.backend)
        return scores

    def _train(self, X, y):
        cfg = self.train_config
        n_vocab = X.shape[1]
        W = np.zeros((n_vocab, N_CHANNELS))
        b = np.full(N_CHANNELS, math.log(0.2 / 0.8))
        alpha = np.zeros(N_CHANNELS)
        vel_w = np.zeros_like(W)
        vel_b = np.zeros_like(b)
        vel_a = np.zeros_like(alpha)
        best = (W.copy(), b.copy(), alpha.copy())
        best_loss = np.inf
        curve = []
        for _ in range(cfg.epochs):
            P = 1.0 / (1.0 + np.exp(-(X @ W + b[None, :])))
            scores, d_alpha, d_p = kernels.score_batch(P, alpha, self.backend,
                                                       want_channel_grad=True)
            loss = bce_loss(scores, y, cfg.eps_clamp)
            curve.append(loss)
            if loss < best_loss:
                best_loss = loss
                best = (W.copy(), b.copy(), alpha.copy())
            w_scores = bce_grad_scores(scores, y, cfg.eps_clamp)
            g_alpha = d_alpha.T @ w_scores
            g_p = d_p * w_scores[:, None]
            g_z = g_p * P * (1.0 - P)
            g_w = X.T @ g_z
            g_b = g_z.sum(axis=0)
            vel_w = cfg.momentum * vel_w + g_w
            vel_b = cfg.momentum * vel_b + g_b
            vel_a = cfg.momentum * vel_a + g_alpha
            W = W - cfg.learning_rate * vel_w
            b = b - cfg.learning_rate * vel_b
            alpha = alpha - cfg.learning_rate * vel_a
        final = bce_loss(self._scores(X, W, b, alpha), y, cfg.eps_clamp)
        curve.append(final)
        if final < best_loss:
            best = (W, b, alpha)
        return (*best, curve)


@dataclass
class FittedTfidfModel:
    pipeline: TfidfLtnPipeline
    vectorizer: TfidfVectorizer
    W: np.ndarray
    b: np.ndarray
    alpha: np.ndarray
    threshold: float
    loss_curve: list[float]

    def score_many(self, doc_ids: Sequence[str]) -> np.ndarray:
        if not doc_ids:
            return np.zeros(0)
        X = self.vectorizer.transform([self.pipeline.text_for(d) for d in doc_ids])
        return self.pipeline._scores(X, self.W, self.b, self.alpha)


# ---------------------------------------------------------------------------
# direct LLM decision baseline


@dataclass(frozen=True)
class DirectDecision:
    label: int
    confidence: float
    flags: tuple[str, ...] = ()

    @property
    def score(self) -> float:
        return self.confidence * self.label


def _direct_validator(value) -> bool:
    if not isinstance(value, dict):
        return False
    flag = value.get("is_valid_offer")
    conf = value.get("confidence")
    return (
        isinstance(flag, bool)
        and isinstance(conf, (int, float)) and not isinstance(conf, bool)
        and 0.0 <= float(conf) <= 1.0
    )


def llm_direct_decide(doc: Document, client: LlmClient, endpoint: ModelEndpoint,
                      policy: JsonCallPolicy | None = None,
                      seed: int = 0) -> DirectDecision:
    """One yes/no call over the full document text."""
    criteria = "\n".join(f"- {DEFAULT_PREDICATES[k].question}" for k in PREDICATE_KEYS)
    user = _prompt("direct_user").format(criteria=criteria, document=doc.text)
    request = CompletionRequest(system=_prompt("direct_system").strip(),
                                user=user, seed=seed)
    try:
        obj = client.complete_json(endpoint, request, _direct_validator, policy)
    except ExtractionError:
        return DirectDecision(label=0, confidence=0.0, flags=("extraction_failed",))
    return DirectDecision(label=int(bool(obj["is_valid_offer"])),
                          confidence=float(obj["confidence"]))


class LlmDirectPipeline:
    """No fitting; scores are confidence * label, thresholded at 0.5."""

    def __init__(self, docs_by_id: Mapping[str, Document], client: LlmClient,
                 endpoint: ModelEndpoint, policy: JsonCallPolicy | None = None):
        self.docs_by_id = docs_by_id
        self.client = client
        self.endpoint = endpoint
        self.policy = policy
        self._cache: dict[str, DirectDecision] = {}

    def decide(self, doc_id: str) -> DirectDecision:
        if doc_id not in self._cache:
            try:
                doc = self.docs_by_id[doc_id]
            except KeyError:
                raise CorpusError(f"unknown document {doc_id}") from None
            self._cache[doc_id] = llm_direct_decide(doc, self.client,
                                                    self.endpoint, self.policy)
        return self._cache[doc_id]

    def fit(self, train_ids: Iterable[str], labels: Mapping[str, int], seed: int):
        return FittedLlmDirect(self)


@dataclass
class FittedLlmDirect:
    pipeline: LlmDirectPipeline
    threshold: float = 0.5
    alpha: None = None

    def score_many(self, doc_ids: Sequence[str]) -> np.ndarray:
        return np.array([self.pipeline.decide(d).score for d in doc_ids])
