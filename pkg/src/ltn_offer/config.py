"""Run configuration: defaults, JSON config files, env vars, --set overrides.

Precedence (lowest to highest): built-in defaults, config file,
environment variables (LTN_OFFER_LLM_URL, LTN_OFFER_LLM_MODEL,
LTN_OFFER_LLM_FALLBACK_MODEL), --set key.path=value overrides. Unknown
keys are rejected so typos fail loudly. config_hash() fingerprints the
fully merged configuration.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
from pathlib import Path

from .errors import ConfigError
from .fuzzy import Backend

DEFAULTS: dict = {
    "seed": 0,
    "output_dir": "runs",
    "corpus": {
        "path": None,
        "synthetic": {"n": 200, "positive_rate": 0.35},
    },
    "chunking": {"size": 1000, "overlap": 200},
    "retrieval": {
        "k1": 1.2,
        "b": 0.75,
        "top_lexical": 20,
        "top_final": 3,
        "reranker": "jaccard",
    },
    "extraction": {
        "method": "oracle",
        "samples_per_chunk": 3,
        "estimates_path": None,
    },
    "ltn": {"backend": "lukasiewicz"},
    "train": {
        "learning_rate": 0.05,
        "momentum": 0.9,
        "epochs": 300,
        "alpha_init": 0.0,
        "eps_clamp": 1e-6,
    },
    "cv": {"k": 5, "repetitions": 5},
    "ie": {"fixed_gate_alpha": 4.0},
    "llm": {
        "url": None,
        "model": None,
        "fallback_model": None,
        "temperature": 0.0,
        "max_tokens": 512,
        "timeout": 60.0,
        "max_attempts": 3,
        "max_in_flight": 4,
        "replay_path": None,
        "record_path": None,
    },
}

ENV_VARS = {
    "LTN_OFFER_LLM_URL": ("llm", "url"),
    "LTN_OFFER_LLM_MODEL": ("llm", "model"),
    "LTN_OFFER_LLM_FALLBACK_MODEL": ("llm", "fallback_model"),
}

EXTRACT_METHODS = ("oracle", "ie", "mcsr_bestconf", "mcsr_topprob", "cisc")
EVAL_METHODS = EXTRACT_METHODS + ("tfidf_ltn", "llm_direct")
LLM_METHODS = ("mcsr_bestconf", "mcsr_topprob", "cisc", "llm_direct")
BACKEND_CHOICES = tuple(b.value for b in Backend) + ("all",)


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key '{where}'")
        if isinstance(base[key], dict):
            if value is None:
                out[key] = None
            elif isinstance(value, dict):
                out[key] = _merge(base[key], value, where)
            else:
                raise ConfigError(f"config key '{where}' expects an object or null")
        else:
            out[key] = value
    return out


def _apply_set(cfg: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"--set expects key.path=value, got '{assignment}'")
    key_path, raw = assignment.split("=", 1)
    keys = key_path.strip().split(".")
    node = cfg
    for key in keys[:-1]:
        if not isinstance(node, dict) or key not in node:
            raise ConfigError(f"unknown config key '{key_path}'")
        node = node[key]
    leaf = keys[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise ConfigError(f"unknown config key '{key_path}'")
    if isinstance(node[leaf], dict):
        raise ConfigError(f"config key '{key_path}' is an object, not a value")
    try:
        value = json.loads(raw)
    except ValueError:
        value = raw
    node[leaf] = value


def load_config(path: str | Path | None = None,
                overrides: list[str] | None = None,
                seed: int | None = None,
                environ: dict | None = None) -> dict:
    """Merged configuration dict with all sources applied."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            with open(path, encoding="utf-8") as fh:
                user = json.load(fh)
        except ValueError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        cfg = _merge(cfg, user)
    env = os.environ if environ is None else environ
    for var, (section, key) in ENV_VARS.items():
        if env.get(var):
            cfg[section][key] = env[var]
    for assignment in overrides or []:
        _apply_set(cfg, assignment)
    if seed is not None:
        cfg["seed"] = seed
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    backend = cfg["ltn"]["backend"]
    if backend not in BACKEND_CHOICES:
        raise ConfigError(
            f"ltn.backend must be one of {', '.join(BACKEND_CHOICES)}, got '{backend}'"
        )
    method = cfg["extraction"]["method"]
    if method not in EVAL_METHODS:
        raise ConfigError(
            f"extraction.method must be one of {', '.join(EVAL_METHODS)}, got '{method}'"
        )
    ch = cfg["chunking"]
    if ch["size"] <= 0 or not 0 <= ch["overlap"] < ch["size"]:
        raise ConfigError(f"invalid chunking: size={ch['size']} overlap={ch['overlap']}")
    r = cfg["retrieval"]
    if r["top_final"] > r["top_lexical"]:
        raise ConfigError("retrieval.top_final may not exceed retrieval.top_lexical")
    if r["reranker"] not in ("jaccard", "none"):
        raise ConfigError(f"unknown reranker '{r['reranker']}'")
    syn = cfg["corpus"]["synthetic"]
    if syn is not None:
        if syn["n"] < 0 or not 0.0 <= syn["positive_rate"] <= 1.0:
            raise ConfigError("invalid corpus.synthetic settings")
    if cfg["cv"]["k"] < 2 or cfg["cv"]["repetitions"] < 1:
        raise ConfigError("cv.k must be >= 2 and cv.repetitions >= 1")
    if cfg["llm"]["max_attempts"] < 1:
        raise ConfigError("llm.max_attempts must be >= 1")


def needs_llm(method: str) -> bool:
    return method in LLM_METHODS


def require_llm_settings(cfg: dict) -> None:
    llm = cfg["llm"]
    if not llm["model"]:
        raise ConfigError(
            "this method needs llm.model (request hashes include the model "
            "name); set it in the config, via LTN_OFFER_LLM_MODEL, or with --set"
        )
    if not llm["replay_path"] and not llm["url"]:
        raise ConfigError(
            "this method needs llm.url for live calls or llm.replay_path for "
            "offline replay; set one in the config, via LTN_OFFER_LLM_URL, or "
            "with --set"
        )


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()
