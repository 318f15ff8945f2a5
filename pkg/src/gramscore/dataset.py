"""Corpus loading, validation, and persistence.

A corpus is a JSONL file with one record per line:

    {"id": "s1", "candidate_id": "c1", "text": "...", "modality": "spoken",
     "ratings": [4.0, 5.0],                      # optional
     "pseudo_score": 4.5,                        # optional
     "pseudo_provenance": {"model": "...", "prompt_hash": "..."}}  # optional

Datasets are immutable after load and index-addressable: the position of a
record in the file is its canonical sample index, which the trainer's weight
vector refers to. Rating means are always recomputed here, never read from
the file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .exceptions import ValidationError

MODALITIES = ("spoken", "written")
SCORE_MIN = 1.0
SCORE_MAX = 5.0


@dataclass(frozen=True)
class Provenance:
    """Where a pseudo score came from."""

    model: str
    prompt_hash: str


@dataclass(frozen=True)
class Sample:
    """One text response, optionally expert-rated and/or pseudo-labeled."""

    id: str
    candidate_id: str
    text: str
    modality: str
    ratings: tuple[float, ...] | None = None
    pseudo_score: float | None = None
    pseudo_provenance: Provenance | None = None

    def __post_init__(self):
        if not self.id or not isinstance(self.id, str):
            raise ValidationError("sample id must be a non-empty string")
        if not isinstance(self.candidate_id, str) or not self.candidate_id:
            raise ValidationError(f"sample {self.id!r}: candidate_id must be a non-empty string")
        if not isinstance(self.text, str) or not self.text.split():
            raise ValidationError(f"sample {self.id!r}: text must contain at least one word")
        if self.modality not in MODALITIES:
            raise ValidationError(
                f"sample {self.id!r}: modality must be one of {MODALITIES}, got {self.modality!r}"
            )
        if self.ratings is not None:
            if len(self.ratings) == 0:
                raise ValidationError(f"sample {self.id!r}: ratings must be non-empty when present")
            for r in self.ratings:
                if not (SCORE_MIN <= float(r) <= SCORE_MAX):
                    raise ValidationError(
                        f"sample {self.id!r}: rating {r} outside [{SCORE_MIN}, {SCORE_MAX}]"
                    )
        if self.pseudo_score is not None and not (
            SCORE_MIN <= float(self.pseudo_score) <= SCORE_MAX
        ):
            raise ValidationError(
                f"sample {self.id!r}: pseudo_score {self.pseudo_score} outside "
                f"[{SCORE_MIN}, {SCORE_MAX}]"
            )

    @property
    def is_rated(self) -> bool:
        return self.ratings is not None

    @property
    def gold_score(self) -> float:
        """Arithmetic mean of the expert ratings; recomputed, never stored."""
        if self.ratings is None:
            raise ValidationError(f"sample {self.id!r} has no ratings")
        return float(sum(self.ratings) / len(self.ratings))

    @property
    def word_count(self) -> int:
        return len(self.text.split())


@dataclass(frozen=True)
class Dataset:
    """An ordered, index-addressable collection of samples."""

    samples: tuple[Sample, ...]
    split_tag: str = "train"

    def __post_init__(self):
        if self.split_tag not in ("train", "test"):
            raise ValidationError(f"split_tag must be 'train' or 'test', got {self.split_tag!r}")
        seen = set()
        for s in self.samples:
            if s.id in seen:
                raise ValidationError(f"duplicate sample id {s.id!r}")
            seen.add(s.id)

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, index: int) -> Sample:
        return self.samples[index]

    def __iter__(self):
        return iter(self.samples)

    def texts(self) -> list[str]:
        return [s.text for s in self.samples]

    def pseudo_scores(self) -> list[float]:
        out = []
        for s in self.samples:
            if s.pseudo_score is None:
                raise ValidationError(f"sample {s.id!r} has no pseudo_score")
            out.append(s.pseudo_score)
        return out

    def gold_scores(self) -> list[float]:
        return [s.gold_score for s in self.samples]

    def candidate_ids(self) -> set[str]:
        return {s.candidate_id for s in self.samples}

    def with_samples(self, samples) -> "Dataset":
        return Dataset(samples=tuple(samples), split_tag=self.split_tag)


def _format_score(x: float) -> str:
    """Serialize a score with >= 6 decimal digits without losing precision."""
    fixed = f"{float(x):.6f}"
    if float(fixed) == float(x):
        return fixed
    return repr(float(x))


def _record_to_line(sample: Sample) -> str:
    parts = [
        f'"id": {json.dumps(sample.id)}',
        f'"candidate_id": {json.dumps(sample.candidate_id)}',
        f'"text": {json.dumps(sample.text, ensure_ascii=False)}',
        f'"modality": {json.dumps(sample.modality)}',
    ]
    if sample.ratings is not None:
        ratings = ", ".join(_format_score(r) for r in sample.ratings)
        parts.append(f'"ratings": [{ratings}]')
    if sample.pseudo_score is not None:
        parts.append(f'"pseudo_score": {_format_score(sample.pseudo_score)}')
    if sample.pseudo_provenance is not None:
        prov = json.dumps(
            {
                "model": sample.pseudo_provenance.model,
                "prompt_hash": sample.pseudo_provenance.prompt_hash,
            },
            ensure_ascii=False,
        )
        parts.append(f'"pseudo_provenance": {prov}')
    return "{" + ", ".join(parts) + "}"


def _sample_from_record(record: dict, lineno: int) -> Sample:
    allowed = {"id", "candidate_id", "text", "modality", "ratings", "pseudo_score", "pseudo_provenance"}
    unknown = set(record) - allowed
    if unknown:
        raise ValidationError(f"line {lineno}: unknown fields {sorted(unknown)}")
    for key in ("id", "candidate_id", "text", "modality"):
        if key not in record:
            raise ValidationError(f"line {lineno}: missing required field {key!r}")
    ratings = record.get("ratings")
    if ratings is not None:
        if not isinstance(ratings, list):
            raise ValidationError(f"line {lineno}: ratings must be an array")
        ratings = tuple(float(r) for r in ratings)
    prov = record.get("pseudo_provenance")
    if prov is not None:
        if not isinstance(prov, dict) or set(prov) != {"model", "prompt_hash"}:
            raise ValidationError(f"line {lineno}: pseudo_provenance must have model and prompt_hash")
        prov = Provenance(model=str(prov["model"]), prompt_hash=str(prov["prompt_hash"]))
    pseudo = record.get("pseudo_score")
    try:
        return Sample(
            id=record["id"],
            candidate_id=record["candidate_id"],
            text=record["text"],
            modality=record["modality"],
            ratings=ratings,
            pseudo_score=float(pseudo) if pseudo is not None else None,
            pseudo_provenance=prov,
        )
    except ValidationError as exc:
        raise ValidationError(f"line {lineno}: {exc}") from exc


def load_dataset(path, expect_ratings: bool = False, split_tag: str = "train") -> Dataset:
    """Load a JSONL corpus, preserving file order.

    Raises ValidationError on malformed lines (with the line number),
    duplicate ids, or missing ratings when ``expect_ratings`` is set.
    """
    path = Path(path)
    samples = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: parse error on line {lineno}: {exc}") from exc
            if not isinstance(record, dict):
                raise ValidationError(f"{path}: line {lineno} is not a JSON object")
            sample = _sample_from_record(record, lineno)
            if expect_ratings and sample.ratings is None:
                raise ValidationError(f"{path}: line {lineno}: record {sample.id!r} has no ratings")
            samples.append(sample)
    return Dataset(samples=tuple(samples), split_tag=split_tag)


def save_dataset(dataset: Dataset, path) -> None:
    """Write a dataset back to JSONL; save/load round-trips field-for-field."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for sample in dataset:
            fh.write(_record_to_line(sample) + "\n")


def check_split_integrity(train: Dataset, test: Dataset) -> set[str]:
    """Candidate ids present in both splits (empty set means clean splits)."""
    return train.candidate_ids() & test.candidate_ids()


def score_histogram(dataset: Dataset, bin_width: float = 0.5) -> list[tuple[float, int]]:
    """Histogram of gold (preferred) or pseudo scores over [1, 5].

    Bins are left-closed with the given width starting at 1.0; the final bin
    absorbs the top of the scale so counts always sum to the dataset size.
    """
    if bin_width <= 0:
        raise ValidationError("bin_width must be positive")
    scores = []
    for s in dataset:
        if s.is_rated:
            scores.append(s.gold_score)
        elif s.pseudo_score is not None:
            scores.append(s.pseudo_score)
        else:
            raise ValidationError(f"sample {s.id!r} has neither ratings nor pseudo_score")
    if not scores:
        raise ValidationError("cannot build a histogram of an empty dataset")
    edges = []
    edge = SCORE_MIN
    while edge <= SCORE_MAX + 1e-9:
        edges.append(round(edge, 10))
        edge += bin_width
    counts = [0] * len(edges)
    for score in scores:
        idx = int((score - SCORE_MIN) / bin_width + 1e-9)
        idx = min(max(idx, 0), len(edges) - 1)
        counts[idx] += 1
    return list(zip(edges, counts))


def with_pseudo_label(sample: Sample, score: float, provenance: Provenance) -> Sample:
    return replace(sample, pseudo_score=float(score), pseudo_provenance=provenance)
