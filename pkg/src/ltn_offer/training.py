"""Gate training and decision-threshold calibration.

Gates are trained with full-batch gradient descent plus heavy-ball
momentum (v = mu*v + grad; alpha -= lr*v) on binary cross-entropy over
the decision scores. Scores are clamped to [eps, 1-eps] inside the loss;
outside the clamp the gradient is zero. Training returns the best-loss
iterate seen, so the final loss never exceeds the initial one.

The decision threshold maximizes F1 of the positive class under the
predict-positive-iff-score>=threshold rule. Candidates are 0, the
midpoints between consecutive distinct sorted scores, and 1; this set
hits every achievable confusion matrix, so the result is exactly optimal.
Ties go to the smallest candidate.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .errors import CalibrationError, ConfigError, CorpusError, TrainingError
from .fuzzy import Backend
from .predicates import N_CHANNELS


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    momentum: float = 0.9
    epochs: int = 300
    alpha_init: float = 0.0
    eps_clamp: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if not 0.0 < self.eps_clamp < 0.5:
            raise ConfigError(f"eps_clamp must be in (0, 0.5), got {self.eps_clamp}")


def bce_loss(scores, labels, eps: float = 1e-6) -> float:
    """Mean binary cross-entropy with scores clamped to [eps, 1-eps]."""
    s = np.clip(np.asarray(scores, dtype=np.float64), eps, 1.0 - eps)
    y = np.asarray(labels, dtype=np.float64)
    if s.shape != y.shape:
        raise CalibrationError(f"scores {s.shape} and labels {y.shape} differ")
    if s.size == 0:
        raise CalibrationError("empty batch")
    return float(np.mean(-(y * np.log(s) + (1.0 - y) * np.log(1.0 - s))))


def bce_grad_scores(scores, labels, eps: float = 1e-6) -> np.ndarray:
    """dLoss/dscore per item (mean reduction included); zero outside the clamp."""
    s_raw = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    s = np.clip(s_raw, eps, 1.0 - eps)
    grad = (s - y) / (s * (1.0 - s)) / s_raw.size
    inside = (s_raw >= eps) & (s_raw <= 1.0 - eps)
    return np.where(inside, grad, 0.0)


@dataclass
class TrainedModel:
    alpha: np.ndarray
    threshold: float | None
    backend: Backend
    config: TrainConfig
    loss_curve: list[float] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "alpha": [float(x) for x in self.alpha],
            "threshold": self.threshold,
            "backend": self.backend.value,
            "config": asdict(self.config),
            "loss_curve": [float(x) for x in self.loss_curve],
        }

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "TrainedModel":
        path = Path(path)
        if not path.exists():
            raise CorpusError(f"model file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        try:
            return cls(
                alpha=np.asarray(obj["alpha"], dtype=np.float64),
                threshold=obj["threshold"],
                backend=Backend.parse(obj["backend"]),
                config=TrainConfig(**obj["config"]),
                loss_curve=[float(x) for x in obj["loss_curve"]],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusError(f"malformed model file {path}: {exc}") from exc


def train_gates(channels, labels, backend: Backend,
                config: TrainConfig | None = None) -> TrainedModel:
    """Fit the 11 gate parameters; returns the best-loss iterate."""
    config = config or TrainConfig()
    X = np.asarray(channels, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != N_CHANNELS:
        raise CalibrationError(f"channels must be (N, {N_CHANNELS}), got {X.shape}")
    if y.shape != (X.shape[0],):
        raise CalibrationError("labels must match channels rows")
    if X.shape[0] == 0:
        raise CalibrationError("empty training set")
    if len(set(y.tolist())) < 2:
        raise CalibrationError("training set contains a single class")

    alpha = np.full(N_CHANNELS, config.alpha_init, dtype=np.float64)
    velocity = np.zeros(N_CHANNELS)
    curve: list[float] = []
    best_alpha = alpha.copy()
    best_loss = np.inf

    for _ in range(config.epochs):
        scores, d_alpha, _ = kernels.score_batch(X, alpha, backend)
        loss = bce_loss(scores, y, config.eps_clamp)
        if not np.isfinite(loss) or not np.all(np.isfinite(alpha)):
            raise TrainingError("non-finite loss or parameters during training")
        curve.append(loss)
        if loss < best_loss:
            best_loss = loss
            best_alpha = alpha.copy()
        grad = d_alpha.T @ bce_grad_scores(scores, y, config.eps_clamp)
        velocity = config.momentum * velocity + grad
        alpha = alpha - config.learning_rate * velocity

    scores, _, _ = kernels.score_batch(X, alpha, backend)
    final_loss = bce_loss(scores, y, config.eps_clamp)
    if not np.isfinite(final_loss):
        raise TrainingError("non-finite final loss")
    curve.append(final_loss)
    if final_loss < best_loss:
        best_loss = final_loss
        best_alpha = alpha.copy()

    return TrainedModel(alpha=best_alpha, threshold=None, backend=backend,
                        config=config, loss_curve=curve)


def _positive_f1(scores: Sequence[float], labels: Sequence[int], threshold: float) -> float:
    tp = fp = fn = 0
    for s, y in zip(scores, labels):
        pred = 1 if s >= threshold else 0
        if pred and y:
            tp += 1
        elif pred and not y:
            fp += 1
        elif not pred and y:
            fn += 1
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def calibrate_threshold(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Exact F1-optimal threshold; ties resolved toward the smallest value."""
    scores = [float(s) for s in scores]
    labels = [int(y) for y in labels]
    if len(scores) != len(labels) or not scores:
        raise CalibrationError("scores and labels must be equal-length and non-empty")
    if not any(labels):
        raise CalibrationError("threshold calibration needs at least one positive label")
    uniq = sorted(set(scores))
    candidates = [0.0]
    candidates += [(a + b) / 2.0 for a, b in zip(uniq, uniq[1:])]
    candidates.append(1.0)

    best_t = candidates[0]
    best_f1 = -1.0
    for t in candidates:
        f1 = _positive_f1(scores, labels, t)
        if f1 > best_f1:
            best_f1 = f1
            best_t = t
    return best_t
