"""Command-line interface.

Subcommands: generate (write a synthetic corpus), extract (predicate
estimates to JSONL), train (fit gates + threshold on the full corpus),
evaluate (repeated stratified CV, results per backend), explain (audit
report for one document). Exit codes: 0 success, 1 runtime failure,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import kernels
from .config import (
    EXTRACT_METHODS, config_hash, load_config, needs_llm, require_llm_settings,
)
from .corpus import Document, corpus_stats, load_corpus, write_corpus
from .errors import ConfigError, CorpusError, LtnOfferError
from .evaluation import (
    ChannelPipeline, IE_FIXED_GATE_ALPHA, LlmDirectPipeline, TfidfLtnPipeline,
    ie_predicates, make_fold_plan, run_cv,
)
from .fuzzy import Backend
from .llm_client import (
    HttpTransport, JsonCallPolicy, LlmClient, ModelEndpoint, ReplayTransport,
)
from .ltn import build_audit_report
from .predicates import (
    CHANNEL_NAMES, DEFAULT_PREDICATES, PREDICATE_KEYS, Method, cisc_estimate,
    load_estimates, mcsr_estimate, oracle_estimates, to_channels, write_estimates,
)
from .retrieval import ChunkRetriever, JaccardReranker
from .synthetic import generate_synthetic_corpus
from .training import TrainConfig, TrainedModel, calibrate_threshold, train_gates


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ltn-offer",
        description="Neurosymbolic validation of offer documents.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", default=None, help="JSON config file")
        sp.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY.PATH=VALUE", help="override one config value")
        sp.add_argument("--seed", type=int, default=None, help="override config seed")
        sp.add_argument("--jobs", type=int, default=1, help="parallel workers")

    sp = sub.add_parser("generate", help="write a synthetic labeled corpus")
    common(sp)

    sp = sub.add_parser("extract", help="compute predicate estimates")
    common(sp)

    sp = sub.add_parser("train", help="train gates and threshold on the full corpus")
    common(sp)

    sp = sub.add_parser("evaluate", help="repeated stratified cross-validation")
    common(sp)

    sp = sub.add_parser("explain", help="audit report for one document")
    common(sp)
    sp.add_argument("doc_id", help="document id to explain")
    sp.add_argument("--model", default=None, help="trained model JSON path")
    sp.add_argument("--text", action="store_true", help="human-readable rendering")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config, args.overrides, args.seed)
        handler = _COMMANDS[args.command]
        return handler(cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LtnOfferError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


# ---------------------------------------------------------------------------
# shared plumbing


def _out_dir(cfg) -> Path:
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_docs(cfg) -> list[Document]:
    path = cfg["corpus"]["path"]
    if path:
        if not Path(path).exists():
            raise ConfigError(f"corpus file not found: {path}")
        return load_corpus(path)
    syn = cfg["corpus"]["synthetic"]
    if syn:
        return generate_synthetic_corpus(syn["n"], syn["positive_rate"], cfg["seed"])
    raise ConfigError("no corpus configured: set corpus.path or corpus.synthetic")


def _require_labels(docs) -> dict[str, int]:
    missing = [d.id for d in docs if d.label is None]
    if missing:
        raise ConfigError(
            f"{len(missing)} documents lack labels (e.g. {missing[:3]}); "
            "a fully labeled corpus is required"
        )
    return {d.id: d.label for d in docs}


def _retriever(cfg) -> ChunkRetriever:
    r = cfg["retrieval"]
    ch = cfg["chunking"]
    return ChunkRetriever(
        chunk_size=ch["size"], overlap=ch["overlap"], k1=r["k1"], b=r["b"],
        top_lexical=r["top_lexical"], top_final=r["top_final"],
        reranker=JaccardReranker(),
    )


def _build_client(cfg) -> tuple[LlmClient, ModelEndpoint, JsonCallPolicy]:
    llm = cfg["llm"]
    require_llm_settings(cfg)
    if llm["replay_path"]:
        transport = ReplayTransport(llm["replay_path"])
    else:
        transport = HttpTransport()
    client = LlmClient(transport, recorder_path=llm["record_path"],
                       max_in_flight=llm["max_in_flight"])
    base_url = llm["url"] or "replay://local"
    endpoint = ModelEndpoint(
        base_url=base_url, model_name=llm["model"],
        temperature=llm["temperature"], max_tokens=llm["max_tokens"],
        timeout=llm["timeout"],
    )
    fallback = None
    if llm["fallback_model"]:
        fallback = ModelEndpoint(
            base_url=base_url, model_name=llm["fallback_model"],
            temperature=llm["temperature"], max_tokens=llm["max_tokens"],
            timeout=llm["timeout"],
        )
    policy = JsonCallPolicy(max_attempts=llm["max_attempts"], fallback=fallback)
    return client, endpoint, policy


def _train_config(cfg) -> TrainConfig:
    t = cfg["train"]
    return TrainConfig(
        learning_rate=t["learning_rate"], momentum=t["momentum"],
        epochs=t["epochs"], alpha_init=t["alpha_init"],
        eps_clamp=t["eps_clamp"], seed=cfg["seed"],
    )


def _compute_estimates(cfg, docs, jobs: int):
    """Predicate estimates per document, keyed by doc id, in corpus order."""
    method = cfg["extraction"]["method"]
    ch = cfg["chunking"]
    if method == "oracle":
        return {d.id: oracle_estimates(d, ch["size"], ch["overlap"]) for d in docs}
    if method == "ie":
        return {d.id: ie_predicates(d) for d in docs}
    if method not in EXTRACT_METHODS:
        raise ConfigError(f"method '{method}' does not produce predicate estimates")

    client, endpoint, policy = _build_client(cfg)
    retriever = _retriever(cfg)
    samples = cfg["extraction"]["samples_per_chunk"]
    variant = Method.parse(method)

    def work(doc: Document):
        ests = []
        for key in PREDICATE_KEYS:
            pred = DEFAULT_PREDICATES[key]
            if variant is Method.CISC:
                est = cisc_estimate(doc, pred, retriever, client, endpoint,
                                    policy, samples_per_chunk=samples)
            else:
                est = mcsr_estimate(doc, pred, retriever, client, endpoint,
                                    policy, variant=variant)
            ests.append(est)
        return doc.id, ests

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            pairs = list(pool.map(work, docs))
    else:
        pairs = [work(d) for d in docs]
    return dict(pairs)


def _estimates_for(cfg, docs, jobs: int):
    """Load estimates from the configured path when present, else compute."""
    path = cfg["extraction"]["estimates_path"]
    if path and Path(path).exists():
        loaded = load_estimates(path)
        out = {}
        for doc in docs:
            if doc.id not in loaded:
                raise CorpusError(f"estimates file lacks document {doc.id}")
            by_key = loaded[doc.id]
            missing = [k for k in PREDICATE_KEYS if k not in by_key]
            if missing:
                raise CorpusError(f"estimates for {doc.id} miss predicates {missing}")
            out[doc.id] = [by_key[k] for k in PREDICATE_KEYS]
        return out
    return _compute_estimates(cfg, docs, jobs)


def _channels_map(estimates_by_doc) -> dict[str, np.ndarray]:
    return {doc_id: to_channels(ests) for doc_id, ests in estimates_by_doc.items()}


def _backends(cfg) -> list[Backend]:
    name = cfg["ltn"]["backend"]
    if name == "all":
        return list(Backend)
    return [Backend.parse(name)]


# ---------------------------------------------------------------------------
# commands


def cmd_generate(cfg, args) -> int:
    syn = cfg["corpus"]["synthetic"]
    if not syn:
        raise ConfigError("generate needs corpus.synthetic settings")
    docs = generate_synthetic_corpus(syn["n"], syn["positive_rate"], cfg["seed"])
    dest = cfg["corpus"]["path"] or str(_out_dir(cfg) / "corpus.jsonl")
    Path(dest).parent.mkdir(parents=True, exist_ok=True)
    write_corpus(docs, dest)
    stats = corpus_stats(docs)
    print(f"wrote {stats.n_docs} documents ({stats.n_positive} positive) to {dest}")
    return 0


def cmd_extract(cfg, args) -> int:
    method = cfg["extraction"]["method"]
    if method not in EXTRACT_METHODS:
        raise ConfigError(
            f"extract supports methods {', '.join(EXTRACT_METHODS)}; "
            f"'{method}' is evaluation-only"
        )
    docs = _load_docs(cfg)
    estimates = _compute_estimates(cfg, docs, args.jobs)
    dest = cfg["extraction"]["estimates_path"] or str(
        _out_dir(cfg) / f"estimates_{method}.jsonl"
    )
    Path(dest).parent.mkdir(parents=True, exist_ok=True)
    write_estimates(estimates, dest)
    n_lines = sum(len(v) for v in estimates.values())
    print(f"wrote {n_lines} estimates for {len(docs)} documents to {dest}")
    return 0


def cmd_train(cfg, args) -> int:
    backends = _backends(cfg)
    if len(backends) != 1:
        raise ConfigError("train needs a single ltn.backend, not 'all'")
    backend = backends[0]
    docs = _load_docs(cfg)
    labels = _require_labels(docs)
    estimates = _estimates_for(cfg, docs, args.jobs)
    channels = _channels_map(estimates)
    X = np.stack([channels[d.id] for d in docs])
    y = np.array([labels[d.id] for d in docs], dtype=np.float64)
    model = train_gates(X, y, backend, _train_config(cfg))
    scores, _, _ = kernels.score_batch(X, model.alpha, backend)
    model.threshold = calibrate_threshold(scores.tolist(), y.astype(int).tolist())
    dest = _out_dir(cfg) / f"model_{backend.value}.json"
    model.save(dest)
    print(
        f"trained backend={backend.value} on {len(docs)} documents: "
        f"loss {model.loss_curve[0]:.4f} -> {model.loss_curve[-1]:.4f}, "
        f"threshold {model.threshold:.4f}, saved to {dest}"
    )
    return 0


def cmd_evaluate(cfg, args) -> int:
    docs = _load_docs(cfg)
    labels = _require_labels(docs)
    method = cfg["extraction"]["method"]
    plan = make_fold_plan(labels, cfg["cv"]["k"], cfg["cv"]["repetitions"], cfg["seed"])
    out = _out_dir(cfg)
    cfg_hash = config_hash(cfg)

    channels = None
    if method in EXTRACT_METHODS:
        channels = _channels_map(_estimates_for(cfg, docs, args.jobs))
    direct_pipeline = None
    if method == "llm_direct":
        client, endpoint, policy = _build_client(cfg)
        direct_pipeline = LlmDirectPipeline({d.id: d for d in docs}, client,
                                            endpoint, policy)

    for backend in _backends(cfg):
        if method == "ie":
            fixed = np.full(len(CHANNEL_NAMES), float(cfg["ie"]["fixed_gate_alpha"]))
            pipeline = ChannelPipeline(channels, backend, _train_config(cfg),
                                       fixed_alpha=fixed)
        elif method in EXTRACT_METHODS:
            pipeline = ChannelPipeline(channels, backend, _train_config(cfg))
        elif method == "tfidf_ltn":
            pipeline = TfidfLtnPipeline({d.id: d.text for d in docs}, backend,
                                        _train_config(cfg))
        elif method == "llm_direct":
            pipeline = direct_pipeline
        else:
            raise ConfigError(f"unknown evaluation method '{method}'")

        result = run_cv(pipeline, plan, labels, base_seed=cfg["seed"],
                        backend_name=backend.value)
        dest = out / f"results_{backend.value}.json"
        with open(dest, "w", encoding="utf-8") as fh:
            json.dump(result.to_json_dict(cfg_hash), fh, indent=2)
            fh.write("\n")
        f1_m, f1_s = result.mean_std("f1")
        p_m, _ = result.mean_std("precision")
        r_m, _ = result.mean_std("recall")
        a_m, _ = result.mean_std("accuracy")
        print(
            f"method={method} backend={backend.value} folds={len(result.per_fold)} "
            f"f1={f1_m:.3f}±{f1_s:.3f} precision={p_m:.3f} recall={r_m:.3f} "
            f"accuracy={a_m:.3f} -> {dest}"
        )
    return 0


def cmd_explain(cfg, args) -> int:
    backends = _backends(cfg)
    if len(backends) != 1:
        raise ConfigError("explain needs a single ltn.backend, not 'all'")
    backend = backends[0]
    docs = _load_docs(cfg)
    doc = next((d for d in docs if d.id == args.doc_id), None)
    if doc is None:
        raise CorpusError(f"document '{args.doc_id}' not found in corpus")

    model_path = Path(args.model) if args.model else _out_dir(cfg) / f"model_{backend.value}.json"
    if not model_path.exists():
        raise ConfigError(f"model file not found: {model_path}; run `ltn-offer train` first")
    model = TrainedModel.load(model_path)
    if model.backend is not backend:
        raise ConfigError(
            f"model backend {model.backend.value} does not match ltn.backend {backend.value}"
        )
    if model.threshold is None:
        raise ConfigError("model has no calibrated threshold; re-run train")

    estimates = _estimates_for(cfg, [doc], args.jobs)[doc.id]
    ch = cfg["chunking"]
    report = build_audit_report(doc, estimates, model.alpha, backend,
                                model.threshold, ch["size"], ch["overlap"])
    dest = _out_dir(cfg) / f"audit_{doc.id}.json"
    report.save(dest)
    if args.text:
        print(_render_report(report))
    else:
        print(json.dumps(report.to_json_dict(), ensure_ascii=False, indent=2))
    print(f"audit report saved to {dest}", file=sys.stderr)
    return 0


def _render_report(report) -> str:
    verdict = "VALID OFFER" if report.label == 1 else "not an offer"
    lines = [
        f"doc {report.doc_id}: {verdict} "
        f"(o_base={report.o_base:.4f}, threshold={report.threshold:.4f}, "
        f"backend={report.backend})",
        "",
        "channels (pre -> gated):",
    ]
    for name, pre, post, gate in zip(CHANNEL_NAMES, report.channels_pre,
                                     report.channels_post, report.gates):
        lines.append(f"  {name:18s} {pre:.3f} -> {post:.3f}   gate {gate:.3f}")
    r = report.rules
    lines += [
        "",
        f"rules: R1={r.r1:.3f} R2={r.r2:.3f} R3={r.r3:.3f} "
        f"R4={r.r4:.3f} R5={r.r5:.3f} R6={r.r6:.3f} "
        f"pos_feature={r.pos_feature:.3f}",
        "",
        "predicates:",
    ]
    for p in report.predicates:
        refs = ", ".join(e["chunk"] for e in p.evidence) or "-"
        flags = f" [{', '.join(p.flags)}]" if p.flags else ""
        lines.append(f"  {p.key:12s} {p.method:13s} {p.value:.3f}  evidence: {refs}{flags}")
    return "\n".join(lines)


_COMMANDS = {
    "generate": cmd_generate,
    "extract": cmd_extract,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "explain": cmd_explain,
}


if __name__ == "__main__":
    sys.exit(main())
