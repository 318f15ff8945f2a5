"""Noise-robust training loop with adaptive sample weighting.

Training targets are pseudo scores, which are noisy. Each epoch:

1. every sample passes through seeded mini-batches; the batch loss is the
   weighted mean (1/|B|) * sum w_i * (pred_i - y_i)^2 under the current
   per-sample weights, and the model takes one gradient step per batch;
2. with parameters frozen at epoch end, squared-error losses are computed
   for all samples (zero-weight ones included, so they can come back);
3. samples are stably sorted by ascending loss (ties broken by index) and
   the lowest-loss fraction ``alpha`` is kept as the clean set;
4. weights for the next epoch are 1/|clean| on clean indices, 0 elsewhere.

A sample dropped in one epoch re-enters later if its loss falls back into
the retained fraction. Weights start uniform at 1/N, so epoch 0 is ordinary
uniformly weighted training.

When floor(alpha * N) is zero the selection is degenerate: the previous
weights are kept and the epoch is flagged, rather than dividing by zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .exceptions import TrainingDivergenceError, ValidationError
from .model import RegressionModel

_SUM_TOL = 1e-9


@dataclass(frozen=True)
class SampleWeights:
    """Per-sample weight vector for one epoch; the trainer's central state."""

    epoch: int
    weights: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if np.any(w < 0):
            raise ValidationError("sample weights must be non-negative")
        total = float(w.sum())
        if self.degenerate:
            if total != 0.0:
                raise ValidationError("degenerate weights must be all zero")
        elif abs(total - 1.0) > _SUM_TOL:
            raise ValidationError(f"weights must sum to 1, got {total}")


@dataclass(frozen=True)
class LossRecord:
    """End-of-epoch squared-error losses for every sample."""

    epoch: int
    losses: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.losses, dtype=float)
        object.__setattr__(self, "losses", arr)
        if arr.ndim != 1:
            raise ValidationError("losses must be a vector")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValidationError("losses must be finite and non-negative")


@dataclass(frozen=True)
class CleanSet:
    """Indices retained for the next epoch, in ascending-loss order."""

    epoch: int
    indices: tuple[int, ...]
    permutation: tuple[int, ...]

    def __len__(self):
        return len(self.indices)


@dataclass(frozen=True)
class TrainConfig:
    alpha: float = 0.3
    epochs: int = 10
    batch_size: int = 32
    learning_rate: float = 100.0
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError(f"alpha {self.alpha} outside [0, 1]")
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    mean_weighted_loss: float
    clean_set_size: int
    churn_fraction: float
    degenerate: bool
    losses: np.ndarray


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def any_degenerate(self) -> bool:
        return any(r.degenerate for r in self.records)


# ---------------------------------------------------------------------------
# The four core operations
# ---------------------------------------------------------------------------


def init_weights(n: int) -> SampleWeights:
    """Uniform 1/n weights for epoch 0."""
    if n < 1:
        raise ValidationError("dataset size must be >= 1")
    return SampleWeights(epoch=0, weights=np.full(n, 1.0 / n))


def per_sample_losses(model: RegressionModel, dataset: Dataset, epoch: int = 0) -> LossRecord:
    """Squared error against the pseudo score for every sample.

    Computed for the full dataset, including currently zero-weight samples:
    reinclusion needs fresh losses for everyone.
    """
    targets = np.asarray(dataset.pseudo_scores(), dtype=float)
    preds = np.asarray(model.predict_batch(dataset.texts()), dtype=float)
    return LossRecord(epoch=epoch, losses=(preds - targets) ** 2)


def clean_set_size(alpha: float, n: int) -> int:
    # floor(alpha * n) with a tolerance for float artifacts such as
    # 0.29 * 100 == 28.999999999999996.
    return min(n, int(math.floor(alpha * n + 1e-9)))


def select_clean(losses: LossRecord, alpha: float) -> CleanSet:
    """Keep the floor(alpha*N) lowest-loss indices; ties break by index."""
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError(f"alpha {alpha} outside [0, 1]")
    arr = losses.losses
    pi = np.argsort(arr, kind="stable")
    k = clean_set_size(alpha, len(arr))
    return CleanSet(
        epoch=losses.epoch,
        indices=tuple(int(i) for i in pi[:k]),
        permutation=tuple(int(i) for i in pi),
    )


def update_weights(clean: CleanSet, n: int) -> SampleWeights:
    """1/|clean| on clean indices, 0 elsewhere; all-zero when clean is empty."""
    indices = np.asarray(clean.indices, dtype=int)
    if indices.size and (indices.min() < 0 or indices.max() >= n):
        raise ValidationError("clean-set index out of range")
    weights = np.zeros(n)
    if indices.size == 0:
        return SampleWeights(epoch=clean.epoch + 1, weights=weights, degenerate=True)
    weights[indices] = 1.0 / indices.size
    return SampleWeights(epoch=clean.epoch + 1, weights=weights)


def _churn(previous: CleanSet | None, current: CleanSet) -> float:
    """Jaccard distance between consecutive clean sets (0.0 for the first)."""
    if previous is None:
        return 0.0
    a, b = set(previous.indices), set(current.indices)
    union = a | b
    if not union:
        return 0.0
    return len(a ^ b) / len(union)


def train(model: RegressionModel, dataset: Dataset, config: TrainConfig):
    """Run the adaptive reweighting loop; returns (model, TrainHistory)."""
    n = len(dataset)
    if n == 0:
        raise ValidationError("cannot train on an empty dataset")
    texts = dataset.texts()
    targets = dataset.pseudo_scores()

    rng = np.random.default_rng(config.seed)
    weights = init_weights(n)
    history = TrainHistory()
    previous_clean: CleanSet | None = None

    for epoch in range(config.epochs):
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        batch_losses = []
        for start in range(0, n, config.batch_size):
            members = order[start : start + config.batch_size]
            batch = [(texts[i], targets[i], weights.weights[i]) for i in members]
            try:
                batch_losses.append(model.train_step(batch, config.learning_rate))
            except TrainingDivergenceError as exc:
                raise TrainingDivergenceError(
                    f"diverged at epoch {epoch}, batch {start // config.batch_size}: {exc}",
                    batch_positions=[int(members[k]) for k in exc.batch_positions],
                    epoch=epoch,
                    batch_index=start // config.batch_size,
                ) from exc

        losses = per_sample_losses(model, dataset, epoch=epoch)
        clean = select_clean(losses, config.alpha)
        next_weights = update_weights(clean, n)
        degenerate = next_weights.degenerate
        if degenerate:
            # Keep the previous weights rather than zeroing out the dataset.
            next_weights = SampleWeights(epoch=epoch + 1, weights=weights.weights)

        history.records.append(
            EpochRecord(
                epoch=epoch,
                mean_weighted_loss=float(np.mean(batch_losses)),
                clean_set_size=len(clean),
                churn_fraction=_churn(previous_clean, clean),
                degenerate=degenerate,
                losses=losses.losses.copy(),
            )
        )
        weights = next_weights
        if not degenerate:
            previous_clean = clean

    return model, history
