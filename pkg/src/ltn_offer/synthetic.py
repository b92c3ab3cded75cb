"""Synthetic corpus of German (and some English) business documents.

Positive documents are price offers; negatives are invoices, delivery
notes, order confirmations and price lists. Every positive carries an
explicit offer title and offer number plus a random subset of validity,
reservation, payment, delivery and contact lines. Every negative carries
a counter-indicator title in the head region and may carry realistic
feature noise (an invoice states payment terms, a delivery note states a
delivery date, ...).

Ground truth is recorded in doc.meta:

* synthetic_template: offer | invoice | delivery_note | order_confirmation | price_list
* synthetic_language: de | en
* synthetic_features: comma-joined feature keys present in the text
* synthetic_marker_<KEY>: the exact phrase that realises the feature,
  used to resolve oracle evidence back to a chunk.

Generation is fully determined by (n, positive_rate, seed).
"""

from __future__ import annotations

import random

from .corpus import Document
from .errors import ConfigError
from .predicates import PREDICATE_KEYS as FEATURE_KEYS

META_TEMPLATE = "synthetic_template"
META_LANGUAGE = "synthetic_language"
META_FEATURES = "synthetic_features"
META_MARKER_PREFIX = "synthetic_marker_"

ENGLISH_SHARE = 0.10

# probability that an optional feature line appears on a positive
_FEATURE_P = {
    "VALIDITY": 0.9,
    "RESERVATION": 0.6,
    "PAYMENT": 0.9,
    "DELIVERY": 0.85,
    "CONTACT": 0.85,
}

_COMPANIES = [
    "Müller Bürotechnik GmbH", "TechnoService AG", "Laborbedarf Schmidt KG",
    "IT-Systemhaus Weber GmbH & Co. KG", "Hanse Medical Service GmbH",
    "Elektro Brandt e.K.", "Nordlicht Software GmbH", "Berger & Sohn OHG",
]

_CITIES = ["Hamburg", "Berlin", "München", "Köln", "Bremen", "Leipzig"]

_ITEMS_DE = [
    "Laborgeräte", "Büromöbel", "Netzwerktechnik", "Software-Lizenzen",
    "Notebooks", "Messtechnik", "Druckerzubehör", "Konferenztechnik",
]
_ITEMS_EN = [
    "laboratory equipment", "office furniture", "network hardware",
    "software licenses", "notebooks", "measurement instruments",
]

_PERSONS_DE = ["Herr Schneider", "Frau Dr. Krause", "Herr Lehmann",
               "Frau Vogel", "Herr Dr. Brandt", "Frau Albers"]
_PERSONS_EN = ["Mr. Smith", "Ms. Johnson", "Dr. Miller", "Ms. Clarke"]

_MONTHS_EN = ["January", "February", "March", "April", "May", "June", "July",
              "August", "September", "October", "November", "December"]


def generate_synthetic_corpus(n: int, positive_rate: float, seed: int) -> list[Document]:
    """Generate n labeled documents with round(n * positive_rate) positives."""
    if n < 0:
        raise ConfigError(f"corpus size must be >= 0, got {n}")
    if not 0.0 <= positive_rate <= 1.0:
        raise ConfigError(f"positive rate must be in [0, 1], got {positive_rate}")
    rng = random.Random(seed)
    n_pos = int(round(n * positive_rate))
    labels = [1] * n_pos + [0] * (n - n_pos)
    rng.shuffle(labels)
    docs = []
    for i, label in enumerate(labels):
        doc_id = f"doc-{i:04d}"
        lang = "en" if rng.random() < ENGLISH_SHARE else "de"
        if label == 1:
            docs.append(_make_offer(rng, doc_id, lang))
        else:
            template = rng.choice(["invoice", "delivery_note",
                                   "order_confirmation", "price_list"])
            docs.append(_NEGATIVE_BUILDERS[template](rng, doc_id, lang))
    return docs


# ---------------------------------------------------------------------------
# shared snippets


def _date(rng: random.Random, lang: str) -> str:
    d, m, y = rng.randint(1, 28), rng.randint(1, 12), rng.randint(2023, 2025)
    if lang == "en":
        return f"{d} {_MONTHS_EN[m - 1]} {y}"
    return f"{d:02d}.{m:02d}.{y}"


def _number(rng: random.Random, prefix: str) -> str:
    return f"{prefix}-{rng.randint(2023, 2025)}-{rng.randint(100, 9999):04d}"


def _amount(rng: random.Random, lang: str) -> str:
    whole, cents = rng.randint(40, 24000), rng.randint(0, 99)
    if lang == "en":
        return f"{whole}.{cents:02d} EUR"
    return f"{whole},{cents:02d} EUR"


def _item_lines(rng: random.Random, lang: str) -> list[str]:
    items = _ITEMS_EN if lang == "en" else _ITEMS_DE
    lines = []
    for pos in range(1, rng.randint(2, 4) + 1):
        item = rng.choice(items)
        qty = rng.randint(1, 40)
        if lang == "en":
            lines.append(f"Item {pos}: {item}, {qty} units, unit price {_amount(rng, lang)}")
        else:
            lines.append(f"Pos. {pos}: {item}, {qty} Stück, Einzelpreis {_amount(rng, lang)}")
    return lines


def _letterhead(rng: random.Random, lang: str) -> list[str]:
    company = rng.choice(_COMPANIES)
    city = rng.choice(_CITIES)
    if lang == "en":
        return [company, f"{city}, {_date(rng, lang)}", ""]
    return [company, f"{city}, den {_date(rng, lang)}", ""]


def _assemble(doc_id: str, template: str, lang: str, lines: list[str],
              label: int, markers: dict[str, str]) -> Document:
    text = "\n".join(lines)
    meta = {
        META_TEMPLATE: template,
        META_LANGUAGE: lang,
        META_FEATURES: ",".join(k for k in FEATURE_KEYS if k in markers),
    }
    for key, phrase in markers.items():
        assert phrase in text, f"marker for {key} not present in text"
        meta[META_MARKER_PREFIX + key] = phrase
    return Document(doc_id, text, label, meta)


# ---------------------------------------------------------------------------
# positive template


def _make_offer(rng: random.Random, doc_id: str, lang: str) -> Document:
    markers: dict[str, str] = {}
    lines = _letterhead(rng, lang)

    item = rng.choice(_ITEMS_EN if lang == "en" else _ITEMS_DE)
    if lang == "en":
        title = rng.choice(["Quotation", f"Quotation for {item}",
                            "Offer for your inquiry"])
        number = rng.choice([f"Quotation number: {_number(rng, 'Q')}",
                             f"Offer no. {_number(rng, 'Q')}"])
    else:
        title = rng.choice(["Angebot", f"Angebot über {item}",
                            "Unser Angebot für Ihre Anfrage"])
        number = rng.choice([f"Angebotsnummer: {_number(rng, 'AN')}",
                             f"Angebots-Nr. {_number(rng, 'AN')}"])
    lines += [title, number, ""]
    markers["TITLE"] = title
    markers["NUMBER"] = number

    if lang == "en":
        lines += ["Dear Sir or Madam,", "",
                  "thank you for your inquiry. We are pleased to submit the following:", ""]
    else:
        lines += ["Sehr geehrte Damen und Herren,", "",
                  "vielen Dank für Ihre Anfrage. Gerne unterbreiten wir Ihnen folgendes Angebot:", ""]
    lines += _item_lines(rng, lang)
    if lang == "en":
        lines += [f"Total net: {_amount(rng, lang)} plus 19% VAT.", ""]
    else:
        lines += [f"Gesamtsumme netto: {_amount(rng, lang)} zzgl. 19 % MwSt.", ""]

    optional = {
        "VALIDITY": [
            f"Dieses Angebot ist gültig bis zum {_date(rng, 'de')}.",
            f"An dieses Angebot halten wir uns bis zum {_date(rng, 'de')} gebunden.",
            "Gültigkeit: 30 Tage ab Angebotsdatum.",
        ] if lang == "de" else [
            f"This offer is valid until {_date(rng, 'en')}.",
            "Validity: 30 days from the date of this quotation.",
        ],
        "RESERVATION": [
            "Dieses Angebot ist freibleibend.",
            "Irrtümer und Zwischenverkauf vorbehalten.",
            "Änderungen und Irrtümer vorbehalten.",
        ] if lang == "de" else [
            "This offer is subject to change without notice.",
            "Errors excepted, subject to prior sale.",
        ],
        "PAYMENT": [
            "Zahlungsbedingungen: 30 Tage netto.",
            "Zahlbar innerhalb von 14 Tagen ohne Abzug.",
            "Bei Zahlung innerhalb von 7 Tagen gewähren wir 2 % Skonto.",
        ] if lang == "de" else [
            "Payment terms: net 30 days.",
            "Payable within 14 days without deduction.",
        ],
        "DELIVERY": [
            "Lieferzeit: ca. 3 Wochen nach Auftragseingang.",
            f"Liefertermin: {_date(rng, 'de')}.",
            "Lieferung frei Haus.",
        ] if lang == "de" else [
            "Delivery time: approx. 3 weeks after receipt of order.",
            "Delivery: free of charge to your site.",
        ],
        "CONTACT": [
            f"Ihr Ansprechpartner: {rng.choice(_PERSONS_DE)}, Tel. 0{rng.randint(30, 89)} {rng.randint(100000, 999999)}.",
            f"Bei Rückfragen erreichen Sie {rng.choice(_PERSONS_DE)} unter 0{rng.randint(30, 89)} {rng.randint(100000, 999999)}.",
        ] if lang == "de" else [
            f"Your contact: {rng.choice(_PERSONS_EN)}, phone +44 20 {rng.randint(1000, 9999)}.",
            f"For questions please contact {rng.choice(_PERSONS_EN)}.",
        ],
    }
    for key in ("VALIDITY", "RESERVATION", "PAYMENT", "DELIVERY", "CONTACT"):
        if rng.random() < _FEATURE_P[key]:
            phrase = rng.choice(optional[key])
            lines.append(phrase)
            markers[key] = phrase
    lines.append("")
    if lang == "en":
        lines += ["We look forward to your order.", "Kind regards"]
    else:
        lines += ["Wir freuen uns auf Ihren Auftrag.", "Mit freundlichen Grüßen"]
    lines.append(rng.choice(_COMPANIES))
    return _assemble(doc_id, "offer", lang, lines, 1, markers)


# ---------------------------------------------------------------------------
# negative templates


def _make_invoice(rng: random.Random, doc_id: str, lang: str) -> Document:
    markers: dict[str, str] = {}
    lines = _letterhead(rng, lang)
    if lang == "en":
        title = rng.choice(["Invoice", f"Invoice no. {_number(rng, 'INV')}"])
        lines += [title, f"Invoice number: {_number(rng, 'INV')}",
                  f"Invoice date: {_date(rng, lang)}", ""]
    else:
        title = rng.choice(["Rechnung", f"Rechnung Nr. {_number(rng, 'RE')}"])
        lines += [title, f"Rechnungsnummer: {_number(rng, 'RE')}",
                  f"Rechnungsdatum: {_date(rng, lang)}", ""]
    markers["NOT_OFFER"] = title
    lines += _item_lines(rng, lang)
    if lang == "en":
        lines += [f"Total amount due: {_amount(rng, lang)} including 19% VAT.", ""]
        if rng.random() < 0.9:
            pay = f"Payable within {rng.choice([14, 30])} days to our account."
            lines.append(pay)
            markers["PAYMENT"] = pay
        lines.append("Please quote the invoice number with your transfer.")
    else:
        lines += [f"Rechnungsbetrag: {_amount(rng, lang)} inkl. 19 % MwSt.", ""]
        if rng.random() < 0.9:
            pay = f"Zahlbar innerhalb von {rng.choice([14, 30])} Tagen auf unser Konto."
            lines.append(pay)
            markers["PAYMENT"] = pay
        lines.append("Bitte überweisen Sie den Betrag unter Angabe der Rechnungsnummer.")
    return _assemble(doc_id, "invoice", lang, lines, 0, markers)


def _make_delivery_note(rng: random.Random, doc_id: str, lang: str) -> Document:
    markers: dict[str, str] = {}
    lines = _letterhead(rng, lang)
    if lang == "en":
        title = f"Delivery note no. {_number(rng, 'DN')}"
        lines += [title, ""]
        markers["NOT_OFFER"] = title
        lines.append("We have shipped the following goods to your address:")
    else:
        title = rng.choice(["Lieferschein", f"Lieferschein Nr. {_number(rng, 'LS')}"])
        lines += [title, ""]
        markers["NOT_OFFER"] = title
        lines.append("Wir haben Ihnen folgende Artikel zugestellt:")
    items = _ITEMS_EN if lang == "en" else _ITEMS_DE
    for pos in range(1, rng.randint(2, 4) + 1):
        unit = "units" if lang == "en" else "Stück"
        lines.append(f"{pos}. {rng.choice(items)}, {rng.randint(1, 40)} {unit}")
    lines.append("")
    if rng.random() < 0.7:
        if lang == "en":
            phrase = f"Delivery date: {_date(rng, lang)}."
        else:
            phrase = f"Liefertermin: {_date(rng, lang)}."
        lines.append(phrase)
        markers["DELIVERY"] = phrase
    if rng.random() < 0.4:
        if lang == "en":
            phrase = f"Your contact: {rng.choice(_PERSONS_EN)}."
        else:
            phrase = f"Ihr Ansprechpartner: {rng.choice(_PERSONS_DE)}."
        lines.append(phrase)
        markers["CONTACT"] = phrase
    lines.append("Bitte prüfen Sie die Ware bei Erhalt." if lang == "de"
                 else "Please check the goods on receipt.")
    return _assemble(doc_id, "delivery_note", lang, lines, 0, markers)


def _make_order_confirmation(rng: random.Random, doc_id: str, lang: str) -> Document:
    markers: dict[str, str] = {}
    lines = _letterhead(rng, lang)
    if lang == "en":
        title = "Order confirmation"
        lines += [title, ""]
        markers["NOT_OFFER"] = title
        lines.append(f"We confirm your order dated {_date(rng, lang)}.")
    else:
        title = rng.choice(["Auftragsbestätigung",
                            f"Auftragsbestätigung Nr. {_number(rng, 'AB')}"])
        lines += [title, ""]
        markers["NOT_OFFER"] = title
        lines.append(f"Wir bestätigen Ihren Auftrag vom {_date(rng, lang)}.")
    lines += _item_lines(rng, lang)
    lines.append("")
    if rng.random() < 0.6:
        if lang == "en":
            phrase = "Delivery time: approx. 4 weeks."
        else:
            phrase = "Lieferzeit: ca. 4 Wochen."
        lines.append(phrase)
        markers["DELIVERY"] = phrase
    if rng.random() < 0.5:
        if lang == "en":
            phrase = "Payment terms: net 30 days."
        else:
            phrase = "Zahlungsbedingungen: 30 Tage netto."
        lines.append(phrase)
        markers["PAYMENT"] = phrase
    lines.append("Vielen Dank für Ihren Auftrag." if lang == "de"
                 else "Thank you for your order.")
    return _assemble(doc_id, "order_confirmation", lang, lines, 0, markers)


def _make_price_list(rng: random.Random, doc_id: str, lang: str) -> Document:
    markers: dict[str, str] = {}
    lines = _letterhead(rng, lang)
    year = rng.randint(2023, 2025)
    if lang == "en":
        title = f"Price list {year}"
    else:
        title = rng.choice([f"Preisliste {year}", "Aktuelle Preisliste"])
    lines += [title, ""]
    markers["NOT_OFFER"] = title
    items = _ITEMS_EN if lang == "en" else _ITEMS_DE
    for item in rng.sample(items, k=rng.randint(3, 5)):
        lines.append(f"{item}: {_amount(rng, lang)}")
    lines.append("")
    lines.append("Alle Preise verstehen sich zzgl. MwSt." if lang == "de"
                 else "All prices are subject to VAT.")
    if rng.random() < 0.5:
        if lang == "en":
            phrase = f"Prices valid until {_date(rng, lang)}."
        else:
            phrase = f"Preise gültig bis {_date(rng, lang)}."
        lines.append(phrase)
        markers["VALIDITY"] = phrase
    if rng.random() < 0.3:
        phrase = ("Unverbindliche Preisempfehlung." if lang == "de"
                  else "Non-binding recommended prices.")
        lines.append(phrase)
        markers["RESERVATION"] = phrase
    return _assemble(doc_id, "price_list", lang, lines, 0, markers)


_NEGATIVE_BUILDERS = {
    "invoice": _make_invoice,
    "delivery_note": _make_delivery_note,
    "order_confirmation": _make_order_confirmation,
    "price_list": _make_price_list,
}
