"""Rater-agreement metrics: QWK, PLCC, SRCC, RMSE.

All four are implemented directly on numpy (no scipy/sklearn) so the test
suite can check them against independently coded references. Correlations on
zero-variance input are reported as explicitly undefined (never silently 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, SCORE_MAX, SCORE_MIN
from .exceptions import UndefinedCorrelationError, ValidationError

DEFAULT_LEVELS = (1, 2, 3, 4, 5)

ROUNDING_POLICIES = ("nearest_integer_clamped", "none")


def _paired(pred, gold):
    p = np.asarray(pred, dtype=float)
    g = np.asarray(gold, dtype=float)
    if p.ndim != 1 or g.ndim != 1:
        raise ValidationError("score lists must be one-dimensional")
    if len(p) != len(g):
        raise ValidationError(f"length mismatch: {len(p)} predictions vs {len(g)} references")
    if len(p) == 0:
        raise ValidationError("score lists must be non-empty")
    return p, g


def round_half_away(values) -> np.ndarray:
    """Round to the nearest integer, halves away from zero (scores are > 0)."""
    arr = np.asarray(values, dtype=float)
    return np.floor(arr + 0.5)


def to_levels(values, levels=DEFAULT_LEVELS, policy: str = "nearest_integer_clamped") -> np.ndarray:
    """Map continuous scores onto the ordinal rubric levels."""
    arr = np.asarray(values, dtype=float)
    if policy == "nearest_integer_clamped":
        arr = np.clip(round_half_away(arr), min(levels), max(levels))
    elif policy == "none":
        if not np.all(arr == np.round(arr)):
            raise ValidationError("rounding policy 'none' requires integer-level scores")
    else:
        raise ValidationError(f"unknown rounding policy {policy!r}")
    return arr.astype(int)


def qwk(pred, gold, levels=DEFAULT_LEVELS, policy: str = "nearest_integer_clamped") -> float:
    """Quadratic weighted kappa over the given ordinal levels.

    1 - sum(W*O) / sum(W*E) with quadratic distance weights
    W[i,j] = (i-j)^2 / (K-1)^2, observed paired counts O, and expected counts
    E from the outer product of the marginals. When both weighted sums are
    zero (identical constant inputs) the convention is perfect agreement, 1.0.
    """
    p, g = _paired(pred, gold)
    levels = list(levels)
    k = len(levels)
    if k < 2:
        raise ValidationError("need at least two rubric levels")
    index = {level: i for i, level in enumerate(levels)}
    p_levels = to_levels(p, levels, policy)
    g_levels = to_levels(g, levels, policy)
    for v in np.concatenate([p_levels, g_levels]):
        if int(v) not in index:
            raise ValidationError(f"score {v} is not one of the rubric levels {levels}")

    observed = np.zeros((k, k))
    for a, b in zip(p_levels, g_levels):
        observed[index[int(a)], index[int(b)]] += 1
    n = len(p)
    expected = np.outer(observed.sum(axis=1), observed.sum(axis=0)) / n

    ii, jj = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    weights = (ii - jj) ** 2 / (k - 1) ** 2

    num = float(np.sum(weights * observed))
    den = float(np.sum(weights * expected))
    if num == 0.0 and den == 0.0:
        return 1.0
    if den == 0.0:
        raise ValidationError("degenerate marginals with disagreement; kappa undefined")
    return 1.0 - num / den


def plcc(pred, gold) -> float:
    """Pearson linear correlation coefficient."""
    p, g = _paired(pred, gold)
    if len(p) < 2:
        raise ValidationError("correlation needs at least two pairs")
    dp = p - p.mean()
    dg = g - g.mean()
    denom = math.sqrt(float(dp @ dp)) * math.sqrt(float(dg @ dg))
    if denom == 0.0:
        raise UndefinedCorrelationError("constant input: linear correlation undefined")
    return float(np.clip((dp @ dg) / denom, -1.0, 1.0))


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def srcc(pred, gold) -> float:
    """Spearman rank correlation: Pearson over mid-ranks (ties averaged)."""
    p, g = _paired(pred, gold)
    if len(p) < 2:
        raise ValidationError("correlation needs at least two pairs")
    return plcc(_midranks(p), _midranks(g))


def rmse(pred, gold) -> float:
    """Root mean squared error."""
    p, g = _paired(pred, gold)
    return float(np.sqrt(np.mean((p - g) ** 2)))


@dataclass(frozen=True)
class AgreementReport:
    """Agreement of predictions with reference scores.

    ``plcc``/``srcc`` are None when undefined (zero-variance input).
    """

    n: int
    qwk: float
    plcc: float | None
    srcc: float | None
    rmse: float
    rounding_policy: str

    def summary(self) -> str:
        def fmt(x):
            return "undefined" if x is None else f"{x:.4f}"

        return (
            f"n={self.n}  qwk={fmt(self.qwk)}  plcc={fmt(self.plcc)}  "
            f"srcc={fmt(self.srcc)}  rmse={self.rmse:.4f}  "
            f"rounding={self.rounding_policy}"
        )


def clamp_scores(values) -> np.ndarray:
    return np.clip(np.asarray(values, dtype=float), SCORE_MIN, SCORE_MAX)


def agreement_report(pred, gold, policy: str = "nearest_integer_clamped") -> AgreementReport:
    """Compute the full metric suite on prediction/reference vectors.

    Predictions are clamped to [1, 5] for RMSE/PLCC/SRCC; QWK additionally
    maps both sides onto integer levels per the rounding policy.
    """
    p, g = _paired(pred, gold)
    p = clamp_scores(p)
    try:
        plcc_value = plcc(p, g)
    except UndefinedCorrelationError:
        plcc_value = None
    try:
        srcc_value = srcc(p, g)
    except UndefinedCorrelationError:
        srcc_value = None
    return AgreementReport(
        n=len(p),
        qwk=qwk(p, g, policy=policy),
        plcc=plcc_value,
        srcc=srcc_value,
        rmse=rmse(p, g),
        rounding_policy=policy,
    )


def evaluate(model, testset: Dataset, policy: str = "nearest_integer_clamped") -> AgreementReport:
    """Evaluate a model against a rated test set."""
    if len(testset) == 0:
        raise ValidationError("cannot evaluate on an empty test set")
    gold = testset.gold_scores()
    preds = model.predict_batch(testset.texts())
    return agreement_report(preds, gold, policy=policy)
