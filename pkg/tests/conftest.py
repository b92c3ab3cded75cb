"""Shared fixtures: tiny documents, stub payload builders, endpoints."""

import json

import pytest

from ltn_offer.corpus import Document
from ltn_offer.llm_client import ModelEndpoint
from ltn_offer.retrieval import ChunkRetriever

OFFER_TEXT = (
    "Angebot Nr. 2024-117. Zahlungsbedingungen: 30 Tage netto. "
    "Lieferzeit: 2 Wochen ab Bestelleingang. Kontakt: vertrieb@firma.de. "
    "Dieses Angebot ist freibleibend und unverbindlich. "
    "Das Angebot ist gueltig bis 31.12.2024."
)

INVOICE_TEXT = (
    "Rechnung Nr. 88121. Rechnungsbetrag: 1.190,00 EUR. "
    "Zahlbar innerhalb von 14 Tagen ohne Abzug. "
    "Bei Fragen wenden Sie sich an buchhaltung@firma.de."
)


@pytest.fixture
def offer_doc():
    return Document(id="d1", text=OFFER_TEXT, label=1)


@pytest.fixture
def invoice_doc():
    return Document(id="d2", text=INVOICE_TEXT, label=0)


@pytest.fixture
def retriever():
    return ChunkRetriever(chunk_size=80, overlap=20, top_lexical=8, top_final=4)


@pytest.fixture
def endpoint():
    return ModelEndpoint(base_url="stub://local", model_name="stub-model")


def mcsr_json(initial, reflected, evidence=()):
    return json.dumps({"initial": list(initial), "reflected": list(reflected),
                       "evidence": list(evidence)})


def cisc_json(vote, confidence):
    return json.dumps({"vote": vote, "confidence": confidence})


def direct_json(is_valid_offer, confidence):
    return json.dumps({"is_valid_offer": is_valid_offer, "confidence": confidence})
