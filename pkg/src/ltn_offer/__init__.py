"""Neurosymbolic validation of offer documents.

Predicate truth values extracted from document text (LLM protocols,
pattern matching or a synthetic oracle) feed a gated fuzzy decision
layer with three selectable logic backends; gates and a decision
threshold are trained per fold and every decision can be rendered as a
full audit report.
"""

from .corpus import Chunk, ChunkRef, Document, chunk_document, load_corpus, write_corpus
from .errors import LtnOfferError
from .evaluation import (
    ChannelPipeline, FoldPlan, LlmDirectPipeline, Metrics, TfidfLtnPipeline,
    compute_metrics, ie_predicates, make_fold_plan, run_cv,
)
from .fuzzy import Backend, DualNumber
from .kernels import implementation_name, score_batch
from .llm_client import (
    CompletionRequest, HttpTransport, JsonCallPolicy, LlmClient, ModelEndpoint,
    ReplayTransport, StubTransport,
)
from .ltn import (
    AuditReport, Decision, build_audit_report, decide, evaluate_rules, o_base,
    o_base_dual,
)
from .predicates import (
    CHANNEL_NAMES, DEFAULT_PREDICATES, PREDICATE_KEYS, Method, PredicateEstimate,
    cisc_estimate, mcsr_estimate, oracle_estimates, to_channels,
)
from .retrieval import Bm25Index, ChunkRetriever, build_index, retrieve, tokenize
from .synthetic import generate_synthetic_corpus
from .training import TrainConfig, TrainedModel, bce_loss, calibrate_threshold, train_gates

__version__ = "0.1.0"

__all__ = [
    "AuditReport", "Backend", "Bm25Index", "CHANNEL_NAMES", "ChannelPipeline",
    "Chunk", "ChunkRef", "ChunkRetriever", "CompletionRequest", "DEFAULT_PREDICATES",
    "Decision", "Document", "DualNumber", "FoldPlan", "HttpTransport",
    "JsonCallPolicy", "LlmClient", "LlmDirectPipeline", "LtnOfferError", "Method",
    "Metrics", "ModelEndpoint", "PREDICATE_KEYS", "PredicateEstimate",
    "ReplayTransport", "StubTransport", "TfidfLtnPipeline", "TrainConfig",
    "TrainedModel", "bce_loss", "build_audit_report", "build_index",
    "calibrate_threshold", "chunk_document", "cisc_estimate", "compute_metrics",
    "decide", "evaluate_rules", "generate_synthetic_corpus", "ie_predicates",
    "implementation_name", "load_corpus", "make_fold_plan", "mcsr_estimate",
    "o_base", "o_base_dual", "oracle_estimates", "retrieve", "run_cv",
    "score_batch", "to_channels", "tokenize", "train_gates", "write_corpus",
]
