"""Predicate definitions, estimation methods and the channel mapping.

Eight document predicates are estimated per document and mapped onto 11
truth channels consumed by the decision layer:

    index  channel            source predicate
    0      title_clear        TITLE
    1      number_clear       NUMBER
    2      number_present     NUMBER
    3      validity_clear     VALIDITY
    4      validity_vague     VALIDITY
    5      reservation_clear  RESERVATION
    6      payment_present    PAYMENT
    7      delivery_present   DELIVERY
    8      contact_present    CONTACT
    9      not_offer_strong   NOT_OFFER
    10     not_offer_vague    NOT_OFFER

Mass-based estimates (MCSR) split as clear = m2, present = min(1, m1+m2).
Scalar estimates (CISC, IE, oracle; value s) split as clear = max(0, 2s-1)
and present = min(1, 2s); single "present" channels take s directly.

Estimation methods:

* MCSR: one evaluate-reflect-conclude JSON call over the retrieved
  excerpts, yielding three class masses. The BestConf variant scores the
  winning class's reflected mass (0 if the winner is "absent"); the
  TopProb variant scores the winner's normalized mass share.
* CISC: independent yes/no votes with self-reported confidence, several
  samples per retrieved chunk, aggregated as a confidence-weighted mean.
* oracle: reads synthetic ground truth from document meta.
* IE (pattern matching) lives in evaluation.py next to the baselines.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .corpus import ChunkRef, Document
from .errors import CorpusError, ExtractionError
from .llm_client import CompletionRequest, JsonCallPolicy, LlmClient, ModelEndpoint
from .retrieval import ChunkRetriever

PREDICATE_KEYS = (
    "TITLE", "NUMBER", "VALIDITY", "RESERVATION",
    "PAYMENT", "DELIVERY", "CONTACT", "NOT_OFFER",
)

CHANNEL_NAMES = (
    "title_clear", "number_clear", "number_present", "validity_clear",
    "validity_vague", "reservation_clear", "payment_present",
    "delivery_present", "contact_present", "not_offer_strong", "not_offer_vague",
)

N_CHANNELS = len(CHANNEL_NAMES)

NO_EVIDENCE = "no_evidence"
EXTRACTION_FAILED = "extraction_failed"

# sampling seeds of distinct logical calls are spaced apart so retry bumps
# (seed + attempt - 1) can never collide with another call's seed
SEED_STRIDE = 1000


class Method(enum.Enum):
    MCSR_BESTCONF = "mcsr_bestconf"
    MCSR_TOPPROB = "mcsr_topprob"
    CISC = "cisc"
    IE = "ie"
    ORACLE = "oracle"

    @classmethod
    def parse(cls, name: str) -> "Method":
        for member in cls:
            if member.value == name:
                return member
        valid = ", ".join(m.value for m in cls)
        raise CorpusError(f"unknown estimation method '{name}' (one of: {valid})")


@dataclass(frozen=True)
class PredicateDef:
    key: str
    query: str                       # retrieval query
    question: str                    # property / yes-no question
    class_absent: str
    class_vague: str
    class_clear: str


DEFAULT_PREDICATES: dict[str, PredicateDef] = {
    p.key: p for p in (
        PredicateDef(
            "TITLE",
            "Angebot Titel Überschrift quotation offer title",
            "Does the document carry an offer or quotation title?",
            "no offer or quotation heading anywhere in the document",
            "offer-like wording but no explicit heading",
            "an explicit offer or quotation heading",
        ),
        PredicateDef(
            "NUMBER",
            "Angebotsnummer Angebots-Nr. offer number quotation number",
            "Does the document state an offer or quotation number?",
            "no offer or quotation number",
            "a document number whose kind is unclear",
            "an explicit offer or quotation number",
        ),
        PredicateDef(
            "VALIDITY",
            "gültig bis Gültigkeit Bindefrist gebunden valid until validity",
            "Does the document state how long the offer remains valid?",
            "no validity period",
            "an implied or partial validity period",
            "an explicit validity period or binding date",
        ),
        PredicateDef(
            "RESERVATION",
            "freibleibend unverbindlich vorbehalten subject to change non-binding",
            "Does the document contain a reservation clause such as non-binding or subject to change?",
            "no reservation clause",
            "wording that hints at a reservation",
            "an explicit reservation clause",
        ),
        PredicateDef(
            "PAYMENT",
            "Zahlungsbedingungen zahlbar Skonto payment terms payable",
            "Does the document state payment terms?",
            "no payment terms",
            "a vague mention of payment",
            "explicit payment terms",
        ),
        PredicateDef(
            "DELIVERY",
            "Lieferzeit Liefertermin frei Haus delivery time delivery date",
            "Does the document state delivery terms or a delivery date?",
            "no delivery terms",
            "a vague mention of delivery",
            "explicit delivery terms or a delivery date",
        ),
        PredicateDef(
            "CONTACT",
            "Ansprechpartner Rückfragen contact person phone",
            "Does the document name a contact person for questions?",
            "no contact person",
            "a generic contact hint without a person",
            "a named contact person",
        ),
        PredicateDef(
            "NOT_OFFER",
            "Rechnung Lieferschein Auftragsbestätigung Preisliste invoice delivery note order confirmation price list",
            "Is the document something other than an offer, such as an invoice, delivery note, order confirmation or price list?",
            "nothing indicates another document type",
            "weak hints of another document type",
            "clearly another document type",
        ),
    )
}


@dataclass
class Vote:
    chunk: ChunkRef
    vote: int
    confidence: float


@dataclass
class PredicateEstimate:
    key: str
    method: Method
    value: float
    class_masses: tuple[float, float, float] | None = None
    votes: list[Vote] | None = None
    evidence: list[ChunkRef] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# prompts


@lru_cache(maxsize=None)
def _prompt(name: str) -> str:
    return resources.files("ltn_offer").joinpath(f"prompts/{name}.txt").read_text("utf-8")


def render_mcsr_prompt(pred: PredicateDef, chunks_block: str) -> CompletionRequest:
    user = _prompt("mcsr_user").format(
        question=pred.question,
        class_absent=pred.class_absent,
        class_vague=pred.class_vague,
        class_clear=pred.class_clear,
        chunks=chunks_block,
    )
    return CompletionRequest(system=_prompt("mcsr_system").strip(), user=user)


def render_cisc_prompt(pred: PredicateDef, chunk_text: str, seed: int) -> CompletionRequest:
    user = _prompt("cisc_user").format(question=pred.question, chunk=chunk_text)
    return CompletionRequest(system=_prompt("cisc_system").strip(), user=user, seed=seed)


# ---------------------------------------------------------------------------
# MCSR


def _is_mass_triple(value) -> bool:
    return (
        isinstance(value, (list, tuple)) and len(value) == 3
        and all(isinstance(x, (int, float)) and not isinstance(x, bool)
                and 0.0 <= float(x) <= 1.0 for x in value)
    )


def _mcsr_validator(value) -> bool:
    if not isinstance(value, dict):
        return False
    if not (_is_mass_triple(value.get("initial")) and _is_mass_triple(value.get("reflected"))):
        return False
    evidence = value.get("evidence", [])
    return isinstance(evidence, list) and all(isinstance(x, str) for x in evidence)


def winning_class(masses: tuple[float, float, float]) -> int:
    """Argmax with ties resolved toward the lower class index."""
    return masses.index(max(masses))


def bestconf_value(masses: tuple[float, float, float]) -> float:
    winner = winning_class(masses)
    return float(masses[winner]) if winner in (1, 2) else 0.0


def topprob_value(masses: tuple[float, float, float]) -> float:
    winner = winning_class(masses)
    total = float(sum(masses))
    if winner == 0 or total <= 0.0:
        return 0.0
    return float(masses[winner]) / total


def mcsr_estimate(doc: Document, pred: PredicateDef, retriever: ChunkRetriever,
                  client: LlmClient, endpoint: ModelEndpoint,
                  policy: JsonCallPolicy | None = None,
                  variant: Method = Method.MCSR_BESTCONF,
                  seed: int = 0) -> PredicateEstimate:
    if variant not in (Method.MCSR_BESTCONF, Method.MCSR_TOPPROB):
        raise ExtractionError(f"not an MCSR variant: {variant}")
    results = retriever.retrieve(doc, pred.query)
    if not results:
        masses = (1.0, 0.0, 0.0)
        return PredicateEstimate(pred.key, variant, 0.0, class_masses=masses,
                                 flags=[NO_EVIDENCE])
    block = "\n\n".join(f"[{r.ref}] {r.text}" for r in results)
    request = render_mcsr_prompt(pred, block)
    request = CompletionRequest(request.system, request.user, seed=seed)
    try:
        obj = client.complete_json(endpoint, request, _mcsr_validator, policy)
    except ExtractionError:
        return PredicateEstimate(pred.key, variant, 0.0,
                                 evidence=[r.ref for r in results],
                                 flags=[EXTRACTION_FAILED])
    masses = tuple(float(x) for x in obj["reflected"])
    value = bestconf_value(masses) if variant is Method.MCSR_BESTCONF else topprob_value(masses)
    return PredicateEstimate(pred.key, variant, value, class_masses=masses,
                             evidence=[r.ref for r in results])


# ---------------------------------------------------------------------------
# CISC


def _cisc_validator(value) -> bool:
    if not isinstance(value, dict):
        return False
    vote = value.get("vote")
    conf = value.get("confidence")
    return (
        not isinstance(vote, bool) and vote in (0, 1)
        and isinstance(conf, (int, float)) and not isinstance(conf, bool)
        and 0.0 <= float(conf) <= 1.0
    )


def cisc_value(votes: Iterable[Vote]) -> float:
    """Confidence-weighted vote mean, in sequence order; 0 on zero weight."""
    votes = list(votes)
    num = sum(v.confidence * v.vote for v in votes)
    den = sum(v.confidence for v in votes)
    return num / den if den > 0.0 else 0.0


def cisc_estimate(doc: Document, pred: PredicateDef, retriever: ChunkRetriever,
                  client: LlmClient, endpoint: ModelEndpoint,
                  policy: JsonCallPolicy | None = None,
                  samples_per_chunk: int = 3, seed: int = 0) -> PredicateEstimate:
    results = retriever.retrieve(doc, pred.query)
    votes: list[Vote] = []
    flags: list[str] = []
    call = 0
    for r in results:
        for _ in range(samples_per_chunk):
            request = render_cisc_prompt(pred, r.text, seed=seed + call * SEED_STRIDE)
            call += 1
            try:
                obj = client.complete_json(endpoint, request, _cisc_validator, policy)
            except ExtractionError:
                flags.append(f"{EXTRACTION_FAILED}:{r.ref}")
                continue
            votes.append(Vote(r.ref, int(obj["vote"]), float(obj["confidence"])))
    value = cisc_value(votes)
    if not votes or sum(v.confidence for v in votes) <= 0.0:
        flags.append(NO_EVIDENCE)
    return PredicateEstimate(pred.key, Method.CISC, value, votes=votes,
                             evidence=[r.ref for r in results], flags=flags)


# ---------------------------------------------------------------------------
# oracle (synthetic ground truth)


def oracle_estimates(doc: Document, chunk_size: int = 1000,
                     overlap: int = 200) -> list[PredicateEstimate]:
    """Perfect estimates read from synthetic meta, with marker evidence."""
    from . import synthetic  # imported lazily; synthetic imports our keys
    from .corpus import chunk_document

    meta = doc.meta or {}
    if synthetic.META_FEATURES not in meta:
        raise CorpusError(f"document {doc.id} carries no synthetic ground truth")
    features = {f for f in meta[synthetic.META_FEATURES].split(",") if f}
    chunks = chunk_document(doc, chunk_size, overlap)
    estimates = []
    for key in PREDICATE_KEYS:
        value = 1.0 if key in features else 0.0
        evidence: list[ChunkRef] = []
        marker = meta.get(synthetic.META_MARKER_PREFIX + key)
        if value and marker:
            pos = doc.text.find(marker)
            if pos >= 0:
                for chunk in chunks:
                    if chunk.start <= pos < chunk.end:
                        evidence = [chunk.ref]
                        break
        estimates.append(PredicateEstimate(key, Method.ORACLE, value, evidence=evidence))
    return estimates


# ---------------------------------------------------------------------------
# channel mapping


def _masses_clear(masses) -> float:
    return float(masses[2])


def _masses_present(masses) -> float:
    return min(1.0, float(masses[1]) + float(masses[2]))


def _scalar_clear(s: float) -> float:
    return max(0.0, 2.0 * s - 1.0)


def _scalar_present(s: float) -> float:
    return min(1.0, 2.0 * s)


def to_channels(estimates: Iterable[PredicateEstimate]) -> np.ndarray:
    """Map exactly one estimate per predicate onto the 11 channels."""
    by_key: dict[str, PredicateEstimate] = {}
    for est in estimates:
        if est.key in by_key:
            raise CorpusError(f"duplicate estimate for predicate {est.key}")
        by_key[est.key] = est
    missing = [k for k in PREDICATE_KEYS if k not in by_key]
    extra = [k for k in by_key if k not in PREDICATE_KEYS]
    if missing or extra:
        raise CorpusError(f"bad estimate set: missing={missing} extra={extra}")

    def clear(key: str) -> float:
        est = by_key[key]
        if est.class_masses is not None:
            return _masses_clear(est.class_masses)
        return _scalar_clear(est.value)

    def present(key: str) -> float:
        est = by_key[key]
        if est.class_masses is not None:
            return _masses_present(est.class_masses)
        return _scalar_present(est.value)

    def present_direct(key: str) -> float:
        est = by_key[key]
        if est.class_masses is not None:
            return _masses_present(est.class_masses)
        return float(est.value)

    channels = np.array([
        clear("TITLE"),
        clear("NUMBER"),
        present("NUMBER"),
        clear("VALIDITY"),
        present("VALIDITY"),
        clear("RESERVATION"),
        present_direct("PAYMENT"),
        present_direct("DELIVERY"),
        present_direct("CONTACT"),
        clear("NOT_OFFER"),
        present("NOT_OFFER"),
    ], dtype=np.float64)
    return np.clip(channels, 0.0, 1.0)


# ---------------------------------------------------------------------------
# estimates file IO


def estimate_to_json(doc_id: str, est: PredicateEstimate) -> dict:
    obj: dict = {
        "doc_id": doc_id,
        "predicate": est.key,
        "method": est.method.value,
        "value": est.value,
        "evidence_chunks": [str(ref) for ref in est.evidence],
    }
    if est.class_masses is not None:
        obj["class_masses"] = list(est.class_masses)
    if est.votes is not None:
        obj["votes"] = [
            {"chunk": str(v.chunk), "vote": v.vote, "confidence": v.confidence}
            for v in est.votes
        ]
    if est.flags:
        obj["flags"] = list(est.flags)
    return obj


def estimate_from_json(obj: dict) -> tuple[str, PredicateEstimate]:
    masses = obj.get("class_masses")
    votes = obj.get("votes")
    est = PredicateEstimate(
        key=obj["predicate"],
        method=Method.parse(obj["method"]),
        value=float(obj["value"]),
        class_masses=tuple(float(x) for x in masses) if masses is not None else None,
        votes=[Vote(ChunkRef.parse(v["chunk"]), int(v["vote"]), float(v["confidence"]))
               for v in votes] if votes is not None else None,
        evidence=[ChunkRef.parse(ref) for ref in obj.get("evidence_chunks", [])],
        flags=list(obj.get("flags", [])),
    )
    return obj["doc_id"], est


def write_estimates(estimates_by_doc: Mapping[str, list[PredicateEstimate]],
                    path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id, ests in estimates_by_doc.items():
            for est in ests:
                fh.write(json.dumps(estimate_to_json(doc_id, est), ensure_ascii=False) + "\n")


def load_estimates(path: str | Path) -> dict[str, dict[str, PredicateEstimate]]:
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"estimates file not found: {path}")
    out: dict[str, dict[str, PredicateEstimate]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc_id, est = estimate_from_json(json.loads(line))
            except (ValueError, KeyError) as exc:
                raise CorpusError(f"estimates line {lineno}: {exc}") from exc
            out.setdefault(doc_id, {})[est.key] = est
    return out
