"""Gated fuzzy decision layer and per-document audit reports.

Each of the 11 channels p_i passes through a learned gate
g_i = sigmoid(alpha_i), giving q_i = g_i * p_i. The decision score is

    O = PosCore AND NOT(NegCore)
    PosCore = OR-fold of q over channels (0, 2, 4, 5, 6, 7, 8)
    NegCore = q_9 OR q_10

under the selected fuzzy backend. Six diagnostic rules are evaluated on
the ungated channels and the final score; they explain a decision but do
not influence it:

    R1: title_clear -> O
    R2: (validity_clear AND payment_present) -> O
    R3: ((title_clear OR number_clear) AND NOT not_offer_strong) -> O
    R4: PosFeature -> O      with PosFeature = OR-fold of the 7 positive channels
    R5: not_offer_strong -> NOT O
    R6: not_offer_vague -> NOT O

The scalar and dual-number paths below are the reference semantics; the
batch kernels in kernels.py follow the identical operation sequence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .corpus import Document, chunk_document
from .errors import DomainError, EvidenceError
from .fuzzy import (
    Backend, DualNumber, and_, dual_and, dual_fold_or, dual_not, dual_or,
    dual_sigmoid, fold_or, implies, not_, or_,
)
from .predicates import CHANNEL_NAMES, N_CHANNELS, PREDICATE_KEYS, PredicateEstimate, to_channels

POSITIVE_CHANNELS = (0, 2, 4, 5, 6, 7, 8)
NEGATIVE_CHANNELS = (9, 10)

ALPHA_PARAM = "alpha"
CHANNEL_PARAM = "p"


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=np.float64)))


def gates_from_alpha(alpha) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (N_CHANNELS,):
        raise DomainError(f"alpha must have shape ({N_CHANNELS},), got {alpha.shape}")
    return sigmoid(alpha)


def _check_channels(channels) -> np.ndarray:
    p = np.asarray(channels, dtype=np.float64)
    if p.shape != (N_CHANNELS,):
        raise DomainError(f"channels must have shape ({N_CHANNELS},), got {p.shape}")
    if p.min() < -1e-9 or p.max() > 1.0 + 1e-9:
        raise DomainError("channel value outside [0, 1]")
    return np.clip(p, 0.0, 1.0)


def o_base(channels, alpha, backend: Backend) -> float:
    """Scalar reference implementation of the gated decision score."""
    p = _check_channels(channels)
    g = gates_from_alpha(alpha)
    q = g * p
    pos = fold_or(backend, [q[i] for i in POSITIVE_CHANNELS])
    neg = or_(backend, q[NEGATIVE_CHANNELS[0]], q[NEGATIVE_CHANNELS[1]])
    return and_(backend, pos, not_(neg))


def o_base_dual(channels, alpha, backend: Backend,
                channel_params: bool = False) -> DualNumber:
    """Forward-mode score with exact partials w.r.t. alpha (and channels)."""
    p = _check_channels(channels)
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (N_CHANNELS,):
        raise DomainError(f"alpha must have shape ({N_CHANNELS},), got {alpha.shape}")
    q = []
    for i in range(N_CHANNELS):
        g_i = dual_sigmoid(DualNumber.var(alpha[i], (ALPHA_PARAM, i)))
        p_i = (DualNumber.var(p[i], (CHANNEL_PARAM, i))
               if channel_params else DualNumber.const(p[i]))
        q.append(g_i * p_i)
    pos = dual_fold_or(backend, [q[i] for i in POSITIVE_CHANNELS])
    neg = dual_or(backend, q[NEGATIVE_CHANNELS[0]], q[NEGATIVE_CHANNELS[1]])
    return dual_and(backend, pos, dual_not(neg))


def pos_feature(channels, backend: Backend) -> float:
    """Ungated OR-fold of the seven positive channels."""
    p = _check_channels(channels)
    return fold_or(backend, [p[i] for i in POSITIVE_CHANNELS])


@dataclass(frozen=True)
class RuleReport:
    r1: float
    r2: float
    r3: float
    r4: float
    r5: float
    r6: float
    pos_feature: float

    def to_json_dict(self) -> dict:
        return {
            "r1": self.r1, "r2": self.r2, "r3": self.r3, "r4": self.r4,
            "r5": self.r5, "r6": self.r6, "pos_feature": self.pos_feature,
        }


def evaluate_rules(channels, o: float, backend: Backend) -> RuleReport:
    """Diagnostic rule truth values on the ungated channels."""
    p = _check_channels(channels)
    t_c, n_c, v_c = p[0], p[1], p[3]
    p_p = p[6]
    not_s, not_v = p[9], p[10]
    pf = pos_feature(channels, backend)
    return RuleReport(
        r1=implies(backend, t_c, o),
        r2=implies(backend, and_(backend, v_c, p_p), o),
        r3=implies(backend, and_(backend, or_(backend, t_c, n_c), not_(not_s)), o),
        r4=implies(backend, pf, o),
        r5=implies(backend, not_s, not_(o)),
        r6=implies(backend, not_v, not_(o)),
        pos_feature=pf,
    )


@dataclass(frozen=True)
class Decision:
    o_base: float
    threshold: float
    label: int


def decide(channels, alpha, backend: Backend, threshold: float) -> Decision:
    score = o_base(channels, alpha, backend)
    return Decision(o_base=score, threshold=threshold,
                    label=int(score >= threshold))


# ---------------------------------------------------------------------------
# audit reports


@dataclass(frozen=True)
class AuditPredicate:
    key: str
    method: str
    value: float
    evidence: tuple[dict, ...]            # {"chunk": "...", "text": "..."}
    class_masses: tuple[float, ...] | None
    flags: tuple[str, ...]


@dataclass(frozen=True)
class AuditReport:
    doc_id: str
    backend: str
    o_base: float
    threshold: float
    label: int
    gates: tuple[float, ...]
    channels_pre: tuple[float, ...]
    channels_post: tuple[float, ...]
    rules: RuleReport
    predicates: tuple[AuditPredicate, ...]

    def to_json_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "backend": self.backend,
            "o_base": self.o_base,
            "threshold": self.threshold,
            "label": self.label,
            "gates": list(self.gates),
            "channels_pre": list(self.channels_pre),
            "channels_post": list(self.channels_post),
            "rules": self.rules.to_json_dict(),
            "predicates": [
                {
                    "key": ap.key,
                    "method": ap.method,
                    "value": ap.value,
                    "evidence": [dict(e) for e in ap.evidence],
                    **({"class_masses": list(ap.class_masses)}
                       if ap.class_masses is not None else {}),
                    **({"flags": list(ap.flags)} if ap.flags else {}),
                }
                for ap in self.predicates
            ],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "AuditReport":
        rules = RuleReport(**obj["rules"])
        preds = tuple(
            AuditPredicate(
                key=p["key"],
                method=p["method"],
                value=p["value"],
                evidence=tuple(p["evidence"]),
                class_masses=tuple(p["class_masses"]) if "class_masses" in p else None,
                flags=tuple(p.get("flags", ())),
            )
            for p in obj["predicates"]
        )
        return cls(
            doc_id=obj["doc_id"], backend=obj["backend"], o_base=obj["o_base"],
            threshold=obj["threshold"], label=obj["label"],
            gates=tuple(obj["gates"]), channels_pre=tuple(obj["channels_pre"]),
            channels_post=tuple(obj["channels_post"]), rules=rules, predicates=preds,
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, ensure_ascii=False, indent=2)
            fh.write("\n")


def build_audit_report(doc: Document, estimates: Iterable[PredicateEstimate],
                       alpha, backend: Backend, threshold: float,
                       chunk_size: int = 1000, overlap: int = 200) -> AuditReport:
    """Full per-document decision trace with resolved evidence texts."""
    estimates = list(estimates)
    channels = to_channels(estimates)
    g = gates_from_alpha(alpha)
    post = g * channels
    decision = decide(channels, alpha, backend, threshold)
    rules = evaluate_rules(channels, decision.o_base, backend)

    chunks = {c.ref.index: c for c in chunk_document(doc, chunk_size, overlap)}
    by_key = {est.key: est for est in estimates}
    preds = []
    for key in PREDICATE_KEYS:
        est = by_key[key]
        evidence = []
        for ref in est.evidence:
            if ref.doc_id != doc.id or ref.index not in chunks:
                raise EvidenceError(f"evidence ref {ref} does not resolve in {doc.id}")
            evidence.append({"chunk": str(ref), "text": chunks[ref.index].text})
        preds.append(AuditPredicate(
            key=key, method=est.method.value, value=float(est.value),
            evidence=tuple(evidence),
            class_masses=est.class_masses,
            flags=tuple(est.flags),
        ))

    return AuditReport(
        doc_id=doc.id,
        backend=backend.value,
        o_base=decision.o_base,
        threshold=float(threshold),
        label=decision.label,
        gates=tuple(float(x) for x in g),
        channels_pre=tuple(float(x) for x in channels),
        channels_post=tuple(float(x) for x in post),
        rules=rules,
        predicates=tuple(preds),
    )


_NUMBER_01 = {"type": "number", "minimum": 0.0, "maximum": 1.0}
_ARRAY_11 = {"type": "array", "items": _NUMBER_01,
             "minItems": N_CHANNELS, "maxItems": N_CHANNELS}

AUDIT_REPORT_SCHEMA = {
    "type": "object",
    "required": ["doc_id", "backend", "o_base", "threshold", "label",
                 "gates", "channels_pre", "channels_post", "rules", "predicates"],
    "additionalProperties": False,
    "properties": {
        "doc_id": {"type": "string", "minLength": 1},
        "backend": {"enum": [b.value for b in Backend]},
        "o_base": _NUMBER_01,
        "threshold": _NUMBER_01,
        "label": {"enum": [0, 1]},
        "gates": _ARRAY_11,
        "channels_pre": _ARRAY_11,
        "channels_post": _ARRAY_11,
        "rules": {
            "type": "object",
            "required": ["r1", "r2", "r3", "r4", "r5", "r6", "pos_feature"],
            "additionalProperties": False,
            "properties": {name: _NUMBER_01 for name in
                           ("r1", "r2", "r3", "r4", "r5", "r6", "pos_feature")},
        },
        "predicates": {
            "type": "array",
            "minItems": len(PREDICATE_KEYS),
            "maxItems": len(PREDICATE_KEYS),
            "items": {
                "type": "object",
                "required": ["key", "method", "value", "evidence"],
                "additionalProperties": False,
                "properties": {
                    "key": {"enum": list(PREDICATE_KEYS)},
                    "method": {"type": "string"},
                    "value": _NUMBER_01,
                    "class_masses": {"type": "array", "items": _NUMBER_01,
                                     "minItems": 3, "maxItems": 3},
                    "flags": {"type": "array", "items": {"type": "string"}},
                    "evidence": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["chunk", "text"],
                            "additionalProperties": False,
                            "properties": {
                                "chunk": {"type": "string"},
                                "text": {"type": "string"},
                            },
                        },
                    },
                },
            },
        },
    },
}
