"""Seeded synthetic corpus generator.

Builds grammatically clean template sentences from the shared word banks,
then degrades a controlled fraction of each sample with the error injection
rules. The true score of a sample is the fixed marker-density rule applied
to its final text, so the corpus ships with exact reference scores: test
splits carry them as ratings, train splits stay unlabeled for the zero-shot
pipeline to pseudo-label.

Also provides label corruption with a known mask, the ground truth for
noise-robustness experiments.
"""

from __future__ import annotations

import random

import numpy as np

from . import textfeatures as tf
from .dataset import Dataset, Sample
from .exceptions import ValidationError
from .injection import ALL_ERROR_TYPES, ErrorSpec, inject
from .textfeatures import rule_score

_GO_VERBS = ("go", "walk", "drive")
_TRANSITIVE = (
    "buy", "find", "make", "bring", "take", "open", "clean", "cook",
    "paint", "repair", "carry", "watch", "visit", "prepare", "share",
    "keep", "write", "send", "build", "enjoy",
)
_PRONOUN_SUBJECTS = ("he", "she", "we", "they", "i")

_VERB_FORMS = {base: (base, third, past) for base, third, past, _ in tf.VERB_TABLE}


def _conjugate(base: str, tense: str, subject: str) -> str:
    forms = _VERB_FORMS[base]
    if tense == "past":
        return forms[2]
    if subject in ("he", "she", "it") or subject.startswith(("my ", "the ")):
        return forms[1]
    return forms[0]


def _be_form(tense: str, subject: str) -> str:
    singular = subject in ("he", "she", "it") or subject.startswith(("my ", "the "))
    if tense == "past":
        return "was" if singular or subject == "i" else "were"
    if subject == "i":
        return "am"
    return "is" if singular else "are"


def _subject(rng: random.Random) -> str:
    if rng.random() < 0.8:
        return rng.choice(_PRONOUN_SUBJECTS)
    head = rng.choice(("my", "the"))
    return f"{head} {rng.choice(tf.PERSON_NOUNS)}"


_INTRANSITIVE = ("arrive", "talk", "listen", "wait")

_PATTERNS = (0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11)
_PATTERN_WEIGHTS = (1.0, 1.0, 1.0, 0.7, 1.0, 0.8, 0.8, 0.8, 0.8, 1.2, 1.2, 1.2)


def _sentence(rng: random.Random, tense: str) -> str:
    # Short, marker-dense clauses: pronouns, verbs, collocation-bound
    # prepositions, determiners, and terminators make up most of every
    # sentence, so each injection rule has eligible sites in a typical
    # sample. The 2-4 word patterns push per-word verb and pronoun density
    # high enough for heavy corruption levels to stay reachable.
    subj = _subject(rng)
    noun = rng.choice(tf.NOUNS)
    noun2 = rng.choice(tf.NOUNS)
    adj = rng.choice(tf.ADJECTIVES)
    place = rng.choice(tf.NOUNS)
    obj = rng.choice(("me", "him", "her", "us", "them"))
    pattern = rng.choices(_PATTERNS, weights=_PATTERN_WEIGHTS)[0]
    if pattern == 0:
        v = _conjugate(rng.choice(_GO_VERBS), tense, subj)
        body = f"{subj} {v} to the {place}"
    elif pattern == 1:
        v = _conjugate(rng.choice(_TRANSITIVE), tense, subj)
        body = f"{subj} {v} a {adj} {noun}"
    elif pattern == 2:
        v = _conjugate(rng.choice(_TRANSITIVE), tense, subj)
        body = f"{subj} {v} the {noun} with {obj}"
    elif pattern == 3:
        v = _conjugate("arrive", tense, subj)
        body = f"{subj} {v} at the {place}"
    elif pattern == 4:
        v = _conjugate("wait", tense, subj)
        body = f"{subj} {v} for {obj}"
    elif pattern == 5:
        body = f"{subj} {_be_form(tense, subj)} {rng.choice(('proud', 'afraid'))} of the {noun}"
    elif pattern == 6:
        v1 = _conjugate(rng.choice(_TRANSITIVE), tense, subj)
        subj2 = rng.choice(_PRONOUN_SUBJECTS)
        v2 = _conjugate(rng.choice(_TRANSITIVE), tense, subj2)
        body = f"{subj} {v1} the {noun}, and {subj2} {v2} the {noun2}"
    elif pattern == 7:
        v = _conjugate("listen", tense, subj)
        body = f"{subj} {v} to {obj} {rng.choice(tf.ADVERBS)}"
    elif pattern == 8:
        v = _conjugate("talk", tense, subj)
        body = f"{subj} {v} about the {noun} with {obj}"
    elif pattern == 9:
        v = _conjugate(rng.choice(_INTRANSITIVE), tense, subj)
        body = f"{subj} {v}"
    elif pattern == 10:
        v = _conjugate(rng.choice(("help", "call", "watch", "visit")), tense, subj)
        body = f"{subj} {v} {obj}"
    else:
        v = _conjugate(rng.choice(_TRANSITIVE), tense, subj)
        body = f"{subj} {v} the {noun}"
    return body[0].upper() + body[1:] + "."


def make_clean_text(rng: random.Random, sentences: int | None = None) -> str:
    """A grammatically clean multi-sentence text with one consistent tense."""
    tense = rng.choice(("past", "present"))
    count = sentences if sentences is not None else rng.randint(6, 12)
    return " ".join(_sentence(rng, tense) for _ in range(count))


def _degrade(text: str, level: float, rng: random.Random) -> str:
    """Apply 1-3 error types whose intensities sum to ``level``."""
    if level <= 0:
        return text
    k = rng.randint(1, 3)
    types = rng.sample(list(ALL_ERROR_TYPES), k)
    cuts = sorted(rng.random() for _ in range(k - 1))
    shares = [b - a for a, b in zip([0.0] + cuts, cuts + [1.0])]
    for error_type, share in zip(types, shares):
        intensity = min(1.0, level * share)
        if intensity <= 0:
            continue
        spec = ErrorSpec(error_type=error_type, intensity=intensity, seed=rng.randrange(2**32))
        text = inject(text, spec).corrupted
    return text


def _build_sample(rng: random.Random, sample_id: str, candidate_id: str, rated: bool) -> Sample:
    text = make_clean_text(rng)
    if rng.random() < 0.2:
        level = 0.0
    else:
        level = rng.uniform(0.02, 0.55)
    text = _degrade(text, level, rng)
    modality = rng.choice(("spoken", "written"))
    ratings = (rule_score(text),) if rated else None
    return Sample(
        id=sample_id,
        candidate_id=candidate_id,
        text=text,
        modality=modality,
        ratings=ratings,
    )


def generate_corpus(n_train: int = 2000, n_test: int = 400, seed: int = 0):
    """Seeded (train, test) dataset pair with disjoint candidate pools.

    Train samples are unlabeled; test samples carry their exact rule score
    as a single rating.
    """
    if n_train < 1 or n_test < 1:
        raise ValidationError("corpus sizes must be >= 1")
    rng = random.Random(seed)
    train = tuple(
        _build_sample(rng, f"train-{i:05d}", f"cand-tr-{i:05d}", rated=False)
        for i in range(n_train)
    )
    test = tuple(
        _build_sample(rng, f"test-{i:05d}", f"cand-te-{i:05d}", rated=True)
        for i in range(n_test)
    )
    return Dataset(samples=train, split_tag="train"), Dataset(samples=test, split_tag="test")


def corrupt_labels(dataset: Dataset, fraction: float, seed: int = 0):
    """Replace a fraction of pseudo scores with uniform random values in [1, 5].

    Returns (corrupted_dataset, mask) where mask is the frozen set of sample
    indices whose labels were replaced; it is the ground truth for
    noise-identification checks.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValidationError(f"fraction {fraction} outside [0, 1]")
    n = len(dataset)
    rng = np.random.default_rng(seed)
    count = int(round(fraction * n))
    chosen = set(int(i) for i in rng.choice(n, size=count, replace=False)) if count else set()
    samples = []
    for idx, sample in enumerate(dataset):
        if idx in chosen:
            if sample.pseudo_score is None:
                raise ValidationError(f"sample {sample.id!r} has no pseudo_score to corrupt")
            noisy = float(rng.uniform(1.0, 5.0))
            samples.append(
                Sample(
                    id=sample.id,
                    candidate_id=sample.candidate_id,
                    text=sample.text,
                    modality=sample.modality,
                    ratings=sample.ratings,
                    pseudo_score=noisy,
                    pseudo_provenance=sample.pseudo_provenance,
                )
            )
        else:
            samples.append(sample)
    return dataset.with_samples(samples), frozenset(chosen)
