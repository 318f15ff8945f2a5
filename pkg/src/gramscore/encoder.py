"""Transformer-encoder regression backend.

A pre-trained encoder plus a single linear projection from the mean-pooled
final-layer token embeddings to a scalar score. Optimized with Adam; the
featurizer backend (plain GD) remains the reference for gradient checks.

torch and transformers are imported lazily: install the ``encoder`` extra to
use this backend. Tests can inject a small randomly initialized encoder and
tokenizer via ``from_modules`` instead of downloading pretrained weights.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .exceptions import TrainingDivergenceError, ValidationError
from .model import RegressionModel


def _require_torch():
    try:
        import torch  # noqa: F401
    except ImportError as exc:  # pragma: no cover
        raise ImportError(
            "the encoder backend needs torch and transformers; "
            "install gramscore[encoder]"
        ) from exc
    import torch

    return torch


@dataclass(frozen=True)
class EncoderConfig:
    encoder_name: str = "bert-base-uncased"
    max_tokens: int = 256
    learning_rate: float = 2e-5
    seed: int = 0

    def __post_init__(self):
        if self.max_tokens < 1:
            raise ValidationError("max_tokens must be >= 1")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")


class EncoderRegressor(RegressionModel):
    """Encoder + scalar projection head.

    Texts longer than ``max_tokens`` are truncated from the end. Predictions
    run in eval mode under no_grad, one sequence at a time, so
    ``predict_batch(texts)[k] == predict(texts[k])`` holds exactly.
    """

    backend_name = "encoder"

    def __init__(self, config: EncoderConfig, encoder=None, tokenizer=None):
        torch = _require_torch()
        self.config = config
        torch.manual_seed(config.seed)
        if encoder is None or tokenizer is None:
            from transformers import AutoModel, AutoTokenizer

            tokenizer = AutoTokenizer.from_pretrained(config.encoder_name)
            encoder = AutoModel.from_pretrained(config.encoder_name)
        self.tokenizer = tokenizer
        self.encoder = encoder
        hidden = int(self.encoder.config.hidden_size)
        self.projection = torch.nn.Linear(hidden, 1)
        self._optimizer = torch.optim.Adam(self.parameters(), lr=config.learning_rate)

    @classmethod
    def from_modules(cls, encoder, tokenizer, config: EncoderConfig | None = None):
        """Build a backend around externally constructed modules (test path)."""
        return cls(config or EncoderConfig(encoder_name="injected"), encoder=encoder, tokenizer=tokenizer)

    def parameters(self):
        yield from self.encoder.parameters()
        yield from self.projection.parameters()

    def _forward(self, text: str):
        torch = _require_torch()
        encoded = self.tokenizer(
            text,
            return_tensors="pt",
            truncation=True,
            max_length=self.config.max_tokens,
        )
        hidden = self.encoder(**encoded).last_hidden_state  # (1, T, H)
        mask = encoded["attention_mask"].unsqueeze(-1).to(hidden.dtype)
        pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1)
        return self.projection(pooled).squeeze()

    def predict(self, text: str) -> float:
        if not text.split():
            raise ValidationError("cannot predict on an empty text")
        torch = _require_torch()
        was_training = self.encoder.training
        self.encoder.eval()
        self.projection.eval()
        try:
            with torch.no_grad():
                value = float(self._forward(text))
        finally:
            if was_training:
                self.encoder.train()
                self.projection.train()
        return value

    def predict_batch(self, texts) -> np.ndarray:
        return np.asarray([self.predict(t) for t in texts], dtype=float)

    def train_step(self, batch, learning_rate: float | None = None) -> float:
        torch = _require_torch()
        if not batch:
            raise ValidationError("batch must be non-empty")
        weights = [w for _, _, w in batch]
        if any(w < 0 for w in weights):
            raise ValidationError("sample weights must be non-negative")
        if learning_rate is not None:
            for group in self._optimizer.param_groups:
                group["lr"] = float(learning_rate)
        self.encoder.train()
        self.projection.train()
        preds = torch.stack([self._forward(text) for text, _, _ in batch])
        ys = torch.tensor([y for _, y, _ in batch], dtype=preds.dtype)
        ws = torch.tensor(weights, dtype=preds.dtype)
        loss = (ws * (preds - ys) ** 2).sum() / len(batch)
        if not torch.isfinite(loss):
            bad = [k for k, p in enumerate(preds) if not torch.isfinite(p)]
            raise TrainingDivergenceError("non-finite batch loss", batch_positions=bad)
        self._optimizer.zero_grad()
        loss.backward()
        self._optimizer.step()
        return float(loss.detach())

    def snapshot(self) -> dict:
        return {
            "backend": self.backend_name,
            "config": asdict(self.config),
            "encoder_state": {k: v.detach().clone() for k, v in self.encoder.state_dict().items()},
            "projection_state": {
                k: v.detach().clone() for k, v in self.projection.state_dict().items()
            },
        }

    def restore(self, snap: dict) -> None:
        if snap.get("backend") != self.backend_name:
            raise ValidationError(f"snapshot backend {snap.get('backend')!r} is not 'encoder'")
        self.encoder.load_state_dict(snap["encoder_state"])
        self.projection.load_state_dict(snap["projection_state"])

    def save_file(self, path) -> None:
        torch = _require_torch()
        torch.save(self.snapshot(), Path(path))

    @classmethod
    def load_file(cls, path, encoder=None, tokenizer=None):
        """Load a checkpoint; pass modules to skip pretrained resolution."""
        torch = _require_torch()
        snap = torch.load(Path(path), map_location="cpu", weights_only=False)
        model = cls(EncoderConfig(**snap["config"]), encoder=encoder, tokenizer=tokenizer)
        model.restore(snap)
        return model
