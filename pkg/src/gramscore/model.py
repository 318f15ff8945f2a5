"""Regression model contract and the featurizer backend.

Two backends satisfy the same contract: the transformer-encoder backend in
`gramscore.encoder` (the production path) and the linear featurizer here.
The featurizer is a plain gradient-descent linear model over the
deterministic text features from `gramscore.textfeatures`; it exists so the
training loop can be tested quickly, bitwise-reproducibly, and against a
finite-difference gradient oracle.

Predictions are unbounded reals; clamping to the 1-5 scale happens at
reporting time only.
"""

from __future__ import annotations

import json
import math
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .exceptions import TrainingDivergenceError, ValidationError
from .textfeatures import FEATURE_NAMES, extract_features


class RegressionModel(ABC):
    """Text-to-score regressor with weighted gradient training.

    Contract:
    * ``predict`` is deterministic between ``train_step`` calls;
    * ``predict_batch(texts)[k]`` equals ``predict(texts[k])``;
    * ``train_step`` returns the weighted batch loss evaluated at the
      pre-update parameters, then applies one gradient step on it.
    """

    @abstractmethod
    def predict(self, text: str) -> float: ...

    @abstractmethod
    def predict_batch(self, texts) -> np.ndarray: ...

    @abstractmethod
    def train_step(self, batch, learning_rate: float) -> float: ...

    @abstractmethod
    def snapshot(self) -> dict: ...

    @abstractmethod
    def restore(self, snap: dict) -> None: ...


def weighted_batch_loss(predictions, targets, weights) -> float:
    """(1/|B|) * sum_i w_i * (pred_i - y_i)^2."""
    preds = np.asarray(predictions, dtype=float)
    ys = np.asarray(targets, dtype=float)
    ws = np.asarray(weights, dtype=float)
    return float(np.sum(ws * (preds - ys) ** 2) / len(preds))


@dataclass(frozen=True)
class FeaturizerConfig:
    learning_rate: float = 1.0
    seed: int = 0
    init_scale: float = 0.01
    init_bias: float = 3.0


class FeaturizerRegressor(RegressionModel):
    """Linear regression over the fixed feature set, trained by plain GD.

    Plain (non-adaptive) gradient descent keeps the analytic gradient exactly
    checkable by central finite differences. Feature vectors are memoized per
    text, so repeated epochs over a fixed corpus cost one extraction each.
    """

    backend_name = "featurizer"

    def __init__(self, config: FeaturizerConfig = FeaturizerConfig(), weights=None, bias=None):
        self.config = config
        rng = np.random.default_rng(config.seed)
        if weights is None:
            weights = rng.normal(0.0, config.init_scale, size=len(FEATURE_NAMES))
        self.weights = np.asarray(weights, dtype=float).copy()
        if self.weights.shape != (len(FEATURE_NAMES),):
            raise ValidationError(
                f"weights must have shape ({len(FEATURE_NAMES)},), got {self.weights.shape}"
            )
        self.bias = float(config.init_bias if bias is None else bias)
        self._feature_cache: dict[str, np.ndarray] = {}

    def features(self, text: str) -> np.ndarray:
        if not text.split():
            raise ValidationError("cannot predict on an empty text")
        cached = self._feature_cache.get(text)
        if cached is None:
            cached = extract_features(text)
            self._feature_cache[text] = cached
        return cached

    def predict(self, text: str) -> float:
        return float(self.features(text) @ self.weights + self.bias)

    def predict_batch(self, texts) -> np.ndarray:
        return np.asarray([self.predict(t) for t in texts], dtype=float)

    def gradients(self, batch):
        """Weighted batch loss and its analytic gradient, without updating.

        ``batch`` is a sequence of (text, target, weight) triples.
        """
        if not batch:
            raise ValidationError("batch must be non-empty")
        phi = np.stack([self.features(text) for text, _, _ in batch])
        ys = np.asarray([y for _, y, _ in batch], dtype=float)
        ws = np.asarray([w for _, _, w in batch], dtype=float)
        if np.any(ws < 0):
            raise ValidationError("sample weights must be non-negative")
        residuals = phi @ self.weights + self.bias - ys
        b = len(batch)
        loss = float(np.sum(ws * residuals**2) / b)
        coef = 2.0 * ws * residuals / b
        grad_w = phi.T @ coef
        grad_b = float(np.sum(coef))
        return loss, grad_w, grad_b

    def train_step(self, batch, learning_rate: float | None = None) -> float:
        lr = self.config.learning_rate if learning_rate is None else float(learning_rate)
        loss, grad_w, grad_b = self.gradients(batch)
        if not math.isfinite(loss):
            bad = [
                k
                for k, (text, y, w) in enumerate(batch)
                if not math.isfinite(w * (self.predict(text) - y) ** 2)
            ]
            raise TrainingDivergenceError(
                f"non-finite batch loss {loss}", batch_positions=bad
            )
        self.weights = self.weights - lr * grad_w
        self.bias = self.bias - lr * grad_b
        return loss

    def snapshot(self) -> dict:
        return {
            "backend": self.backend_name,
            "config": asdict(self.config),
            "weights": self.weights.tolist(),
            "bias": self.bias,
        }

    def restore(self, snap: dict) -> None:
        if snap.get("backend") != self.backend_name:
            raise ValidationError(f"snapshot backend {snap.get('backend')!r} is not 'featurizer'")
        self.weights = np.asarray(snap["weights"], dtype=float).copy()
        self.bias = float(snap["bias"])


def recommended_learning_rate(n_samples: int, base: float = 0.25) -> float:
    """Step size that compensates the 1/N scale of normalized sample weights.

    The weighted batch loss carries weights that sum to one across the whole
    training set, so its gradient is roughly N times smaller than a plain
    MSE gradient; scale the step up accordingly.
    """
    if n_samples < 1:
        raise ValidationError("n_samples must be >= 1")
    return base * n_samples


def save_model(model: RegressionModel, path) -> None:
    """Persist a model to one self-describing file (JSON or torch binary)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if hasattr(model, "save_file"):  # encoder backend writes a torch checkpoint
        model.save_file(path)
        return
    snap = model.snapshot()
    if not isinstance(snap, dict) or "backend" not in snap:
        raise ValidationError("model snapshot must be a dict with a 'backend' key")
    path.write_text(json.dumps(snap, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path, **encoder_kwargs) -> RegressionModel:
    """Load a model file; JSON means featurizer, binary means encoder."""
    raw = Path(path).read_bytes()
    try:
        snap = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        from .encoder import EncoderRegressor

        return EncoderRegressor.load_file(path, **encoder_kwargs)
    backend = snap.get("backend")
    if backend == FeaturizerRegressor.backend_name:
        model = FeaturizerRegressor(FeaturizerConfig(**snap["config"]))
        model.restore(snap)
        return model
    raise ValidationError(f"unknown model backend {backend!r}")
