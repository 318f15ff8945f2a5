"""Controlled grammatical error injection.

Ten seeded, deterministic corruption rules operate on whitespace tokens
(punctuation stays attached to its word). Error intensity is the fraction of
the original word count affected; the number of words to corrupt is
round(intensity * word_count), capped by the rule's eligible sites. Sites
are sampled without replacement, so no word is corrupted twice in one call.

Every application is logged as an edit. Replaying the edit log against the
original text reproduces the corrupted text byte for byte. When edits are
applied, runs of whitespace in the original collapse to single spaces
(tokens are joined with " "); at intensity zero, or when a rule finds no
eligible site, the input string is returned untouched.

Each rule is built to leave at least one marker instance that the matching
detector in `gramscore.textfeatures` can count, which keeps the robustness
analysis closed under this module's corruptions.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from enum import Enum
from hashlib import sha256
from pathlib import Path

from . import textfeatures as tf
from .dataset import Dataset
from .exceptions import ValidationError


class ErrorType(str, Enum):
    FILLER_WORD = "filler_word"
    REDUNDANT_PHRASE = "redundant_phrase"
    WORD_ORDER = "word_order"
    VERB_FORM = "verb_form"
    PREPOSITION = "preposition"
    TENSE = "tense"
    SUBJECT_VERB_AGREEMENT = "subject_verb_agreement"
    SPELLING = "spelling"
    PUNCTUATION = "punctuation"
    PRONOUN = "pronoun"


ALL_ERROR_TYPES = tuple(ErrorType)


@dataclass(frozen=True)
class ErrorSpec:
    """One injection instruction."""

    error_type: ErrorType
    intensity: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.intensity <= 1.0:
            raise ValidationError(f"intensity {self.intensity} outside [0, 1]")


@dataclass(frozen=True)
class Edit:
    """Replace ``before`` (one or more tokens) at ``position`` with ``after``.

    Empty ``before`` means insertion before the token at ``position``.
    Positions refer to the token list state at application time; edits replay
    in recorded order.
    """

    position: int
    rule_id: str
    before: str
    after: str


@dataclass(frozen=True)
class CorruptionResult:
    original: str
    corrupted: str
    edits: tuple[Edit, ...]
    achieved_intensity: float
    shortfall: bool


@dataclass(frozen=True)
class _Site:
    position: int
    claims: frozenset
    affected: int
    before: str
    after: str  # may be resolved lazily; here everything is resolved at plan time


# ---------------------------------------------------------------------------
# Per-rule site enumeration
# ---------------------------------------------------------------------------

_THIRD_TO_BASE = {t: b for b, t, _, _ in tf.VERB_TABLE}
_BASE_TO_THIRD = {b: t for b, t, _, _ in tf.VERB_TABLE}
_FORM_TO_GERUND = {}
_FORM_TO_PAST = {}
for _b, _t, _p, _g in tf.VERB_TABLE:
    for _form in (_b, _t, _p):
        _FORM_TO_GERUND[_form] = _g
        _FORM_TO_PAST[_form] = _p
_TENSE_ELIGIBLE = tf.PAST_FORMS | tf.THIRD_FORMS | tf.BASE_FORMS | tf.BE_FORMS


def _match_case(template: str, word: str) -> str:
    if template[:1].isupper():
        return word[:1].upper() + word[1:]
    return word


def _split_affixes(token: str) -> tuple[str, str, str]:
    start = 0
    end = len(token)
    while start < end and not token[start].isalnum():
        start += 1
    while end > start and not token[end - 1].isalnum():
        end -= 1
    return token[:start], token[start:end], token[end:]


def _replace_core(token: str, new_core: str) -> str:
    prefix, core, suffix = _split_affixes(token)
    return prefix + _match_case(core, new_core) + suffix


def _filler_sites(tokens, cores, ends, rng):
    sites = []
    for gap in range(len(tokens) + 1):
        filler = rng.choice(tf.FILLER_WORDS)
        sites.append(_Site(gap, frozenset({("gap", gap)}), 1, "", filler))
    return sites


def _redundancy_sites(tokens, cores, ends, rng):
    starts = [0] + [i + 1 for i in range(len(tokens) - 1) if ends[i] or tokens[i].endswith(",")]
    sites = []
    for g in sorted(set(starts)):
        if g >= len(tokens) or not cores[g]:
            continue
        k = 1 if (ends[g] or g + 1 >= len(tokens) or not cores[g + 1]) else 2
        phrase = " ".join(cores[g : g + k])
        claims = frozenset(range(g, g + k)) | {("gap", g + k)}
        sites.append(_Site(g + k, claims, k, "", phrase))
    return sites


def _swap_breaks_order(cores, ends, i) -> bool:
    # Only swaps that land in a detectably bad order are eligible; swapping
    # e.g. an adjective with its noun is invisible to the shallow detectors.
    a, b = cores[i], cores[i + 1]
    after = cores[i + 2] if i + 2 < len(cores) and not ends[i + 1] else ""
    if b in tf.DETERMINERS and (a in tf.ALL_VERB_FORMS or a in tf.PREPOSITIONS):
        return True  # "went the" / "to the" reversed
    if a in tf.DETERMINERS and (not after or after in tf.ALL_VERB_FORMS or after in tf.PREPOSITIONS):
        return True  # determiner pushed against a verb/preposition/clause end
    if a in tf.SUBJECT_PRONOUNS and b in tf.ALL_VERB_FORMS:
        return True  # "they went" -> "went they"
    return False


def _word_order_sites(tokens, cores, ends, rng):
    sites = []
    for i in range(len(tokens) - 1):
        if not cores[i] or not cores[i + 1]:
            continue
        if ends[i] or ends[i + 1]:
            continue
        if not _swap_breaks_order(cores, ends, i):
            continue
        swapped = f"{tokens[i + 1]} {tokens[i]}"
        sites.append(
            _Site(i, frozenset({i, i + 1}), 2, f"{tokens[i]} {tokens[i + 1]}", swapped)
        )
    return sites


def _verb_form_sites(tokens, cores, ends, rng):
    sites = []
    for i, c in enumerate(cores):
        bad = None
        if c in _FORM_TO_GERUND:
            bad = _FORM_TO_GERUND[c]
            # irregular pasts and thirds sometimes get the over-regularised
            # form instead of the bare gerund
            alt = tf.OVERREGULAR_PASTS.get(c) or tf.NAIVE_THIRDS.get(c)
            if alt and rng.random() < 0.5:
                bad = alt
        if bad:
            sites.append(_Site(i, frozenset({i}), 1, tokens[i], _replace_core(tokens[i], bad)))
    return sites


def _preposition_sites(tokens, cores, ends, rng):
    choices = sorted(tf.PREPOSITIONS)
    sites = []
    for i, c in enumerate(cores):
        if c in tf.PREPOSITIONS:
            wrong = rng.choice([p for p in choices if p != c])
            sites.append(_Site(i, frozenset({i}), 1, tokens[i], _replace_core(tokens[i], wrong)))
    return sites


def _tense_sites(tokens, cores, ends, rng):
    # Prefix a future auxiliary onto a finite verb: "will went", "will goes",
    # "will cooked" all signal a broken tense.
    sites = []
    for i, c in enumerate(cores):
        if c in _TENSE_ELIGIBLE:
            prefix, core, suffix = _split_affixes(tokens[i])
            wrong = _FORM_TO_PAST.get(c, core.lower())
            after = f"{prefix}will {wrong}{suffix}"
            sites.append(_Site(i, frozenset({i}), 1, tokens[i], after))
    return sites


def _agreement_sites(tokens, cores, ends, rng):
    sites = []
    for i in range(len(tokens) - 1):
        if ends[i]:
            continue
        subj, verb = cores[i], cores[i + 1]
        wrong = None
        if subj in {"he", "she", "it"}:
            if verb in tf.THIRD_FORMS:
                wrong = _THIRD_TO_BASE[verb]
            elif verb == "is":
                wrong = "are"
            elif verb == "was":
                wrong = "were"
        elif subj in {"we", "they", "you"}:
            if verb in tf.BASE_FORMS:
                wrong = _BASE_TO_THIRD[verb]
            elif verb == "are":
                wrong = "is"
            elif verb == "were":
                wrong = "was"
        elif subj == "i":
            if verb in tf.BASE_FORMS:
                wrong = _BASE_TO_THIRD[verb]
            elif verb == "am":
                wrong = "is"
        if wrong:
            sites.append(
                _Site(i + 1, frozenset({i, i + 1}), 1, tokens[i + 1], _replace_core(tokens[i + 1], wrong))
            )
    return sites


def _misspell(core: str, rng) -> str | None:
    positions = list(range(1, len(core) - 1))
    rng.shuffle(positions)
    for p in positions:
        swapped = core[:p] + core[p + 1] + core[p] + core[p + 2 :]
        if swapped != core and swapped not in tf.VOCABULARY:
            return swapped
    for p in positions:
        for ch in ("x", "z", "q"):
            subst = core[:p] + ch + core[p + 1 :]
            if subst != core and subst not in tf.VOCABULARY:
                return subst
    return None


def _spelling_sites(tokens, cores, ends, rng):
    sites = []
    for i, c in enumerate(cores):
        if len(c) >= 4 and c.isalpha() and c.isascii() and c in tf.VOCABULARY:
            bad = _misspell(c, rng)
            if bad:
                sites.append(_Site(i, frozenset({i}), 1, tokens[i], _replace_core(tokens[i], bad)))
    return sites


def _punctuation_sites(tokens, cores, ends, rng):
    sites = []
    for i, token in enumerate(tokens):
        if not ends[i]:
            continue
        stripped = token.rstrip("\"')")
        trailer = token[len(stripped):]
        mark = stripped[-1]
        body = stripped[:-1]
        if not body:
            continue
        if mark == ".":
            after = body + "?" if rng.random() < 0.5 else body
        elif mark == "!":
            after = body + "." if rng.random() < 0.5 else body
        else:  # "?"
            after = body + "." if rng.random() < 0.5 else body
        sites.append(_Site(i, frozenset({i}), 1, token, after + trailer))
    return sites


def _pronoun_sites(tokens, cores, ends, rng):
    sites = []
    for i, c in enumerate(cores):
        swap = tf.PRONOUN_SWAP.get(c)
        if swap:
            sites.append(_Site(i, frozenset({i}), 1, tokens[i], _replace_core(tokens[i], swap)))
    return sites


_RULES = {
    ErrorType.FILLER_WORD: _filler_sites,
    ErrorType.REDUNDANT_PHRASE: _redundancy_sites,
    ErrorType.WORD_ORDER: _word_order_sites,
    ErrorType.VERB_FORM: _verb_form_sites,
    ErrorType.PREPOSITION: _preposition_sites,
    ErrorType.TENSE: _tense_sites,
    ErrorType.SUBJECT_VERB_AGREEMENT: _agreement_sites,
    ErrorType.SPELLING: _spelling_sites,
    ErrorType.PUNCTUATION: _punctuation_sites,
    ErrorType.PRONOUN: _pronoun_sites,
}


# ---------------------------------------------------------------------------
# The injection engine
# ---------------------------------------------------------------------------


def inject(text: str, spec: ErrorSpec) -> CorruptionResult:
    """Corrupt ``text`` with one error type at the requested intensity."""
    tokens = tf.tokenize(text)
    if not tokens:
        raise ValidationError("cannot inject errors into an empty text")
    wc = len(tokens)
    target = int(math.floor(spec.intensity * wc + 0.5))
    if target == 0:
        return CorruptionResult(text, text, (), 0.0, False)

    cores = [tf.core_of(t) for t in tokens]
    ends = [tf.has_terminator(t) for t in tokens]
    rng = random.Random(spec.seed)
    sites = _RULES[ErrorType(spec.error_type)](tokens, cores, ends, rng)

    order = list(range(len(sites)))
    rng.shuffle(order)
    chosen: list[_Site] = []
    claimed: set = set()
    affected = 0
    for idx in order:
        if affected >= target:
            break
        site = sites[idx]
        if site.claims & claimed:
            continue
        chosen.append(site)
        claimed |= site.claims
        affected += site.affected

    shortfall = affected < target
    if not chosen:
        return CorruptionResult(text, text, (), 0.0, shortfall)

    # Apply from the end of the token list so earlier positions stay valid.
    chosen.sort(key=lambda s: s.position, reverse=True)
    rule_id = ErrorType(spec.error_type).value
    out = list(tokens)
    edits = []
    for site in chosen:
        before_tokens = site.before.split(" ") if site.before else []
        after_tokens = site.after.split(" ") if site.after else []
        out[site.position : site.position + len(before_tokens)] = after_tokens
        edits.append(Edit(site.position, rule_id, site.before, site.after))

    corrupted = " ".join(out)
    return CorruptionResult(text, corrupted, tuple(edits), affected / wc, shortfall)


def apply_edits(original: str, edits) -> str:
    """Replay an edit log against the original text."""
    if not edits:
        return original
    tokens = tf.tokenize(original)
    for edit in edits:
        before_tokens = edit.before.split(" ") if edit.before else []
        after_tokens = edit.after.split(" ") if edit.after else []
        window = tokens[edit.position : edit.position + len(before_tokens)]
        if window != before_tokens:
            raise ValidationError(
                f"edit at position {edit.position} expects {before_tokens}, found {window}"
            )
        tokens[edit.position : edit.position + len(before_tokens)] = after_tokens
    return " ".join(tokens)


# ---------------------------------------------------------------------------
# Synthetic robustness suites
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorruptionRecord:
    sample_id: str
    error_type: ErrorType
    intensity: float
    original: str
    corrupted: str
    edits: tuple[Edit, ...]
    achieved_intensity: float
    shortfall: bool


def _derive_seed(base_seed: int, sample_id: str, error_type: ErrorType, intensity: float) -> int:
    key = f"{base_seed}:{sample_id}:{error_type.value}:{intensity:.6f}"
    return int.from_bytes(sha256(key.encode("utf-8")).digest()[:8], "big")


def build_synthetic_suite(
    dataset: Dataset,
    score_threshold: float = 4.5,
    intensities=(0.0, 0.05, 0.1, 0.2, 0.3),
    types=ALL_ERROR_TYPES,
    seed: int = 0,
) -> list[CorruptionRecord]:
    """Corrupt every high-scoring sample once per (type, intensity) pair."""
    if not 1.0 <= score_threshold <= 5.0:
        raise ValidationError(f"score_threshold {score_threshold} outside [1, 5]")
    keep = [s for s in dataset if s.is_rated and s.gold_score >= score_threshold]
    if not keep:
        raise ValidationError(f"no sample has a gold score >= {score_threshold}")
    records = []
    for sample in keep:
        for error_type in types:
            error_type = ErrorType(error_type)
            for intensity in intensities:
                spec = ErrorSpec(
                    error_type=error_type,
                    intensity=float(intensity),
                    seed=_derive_seed(seed, sample.id, error_type, float(intensity)),
                )
                result = inject(sample.text, spec)
                records.append(
                    CorruptionRecord(
                        sample_id=sample.id,
                        error_type=error_type,
                        intensity=float(intensity),
                        original=result.original,
                        corrupted=result.corrupted,
                        edits=result.edits,
                        achieved_intensity=result.achieved_intensity,
                        shortfall=result.shortfall,
                    )
                )
    return records


def save_suite(records, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(
                json.dumps(
                    {
                        "sample_id": r.sample_id,
                        "error_type": r.error_type.value,
                        "intensity": r.intensity,
                        "original": r.original,
                        "corrupted": r.corrupted,
                        "edits": [[e.position, e.rule_id, e.before, e.after] for e in r.edits],
                        "achieved_intensity": r.achieved_intensity,
                        "shortfall": r.shortfall,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_suite(path) -> list[CorruptionRecord]:
    records = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            records.append(
                CorruptionRecord(
                    sample_id=obj["sample_id"],
                    error_type=ErrorType(obj["error_type"]),
                    intensity=float(obj["intensity"]),
                    original=obj["original"],
                    corrupted=obj["corrupted"],
                    edits=tuple(Edit(int(p), r, b, a) for p, r, b, a in obj["edits"]),
                    achieved_intensity=float(obj["achieved_intensity"]),
                    shortfall=bool(obj["shortfall"]),
                )
            )
    return records


@dataclass(frozen=True)
class RobustnessRow:
    error_type: ErrorType
    intensity: float
    mean_pred: float
    mean_drop: float
    pct_impacted: float
    n: int


def robustness_report(model, suite, impact_threshold: float = 0.25) -> list[RobustnessRow]:
    """Mean prediction, mean drop, and impacted-sample rate per (type, intensity).

    Predictions are clamped to the 1-5 scale. A sample is impacted when its
    corrupted prediction moves more than ``impact_threshold`` score points
    away from its original prediction. Every error type gets an intensity-0
    baseline row computed from the uncorrupted originals.
    """
    if not suite:
        raise ValidationError("robustness_report needs a non-empty suite")

    originals: dict[str, str] = {}
    for r in suite:
        originals.setdefault(r.sample_id, r.original)
    ids = sorted(originals)
    base_preds = dict(zip(ids, _clamped_predictions(model, [originals[i] for i in ids])))

    cells: dict[tuple[ErrorType, float], list[tuple[str, str]]] = {}
    for r in suite:
        cells.setdefault((r.error_type, r.intensity), []).append((r.sample_id, r.corrupted))

    types_present = sorted({r.error_type for r in suite}, key=list(ErrorType).index)
    rows = []
    for error_type in types_present:
        intensities = sorted({i for (t, i) in cells if t == error_type} | {0.0})
        for intensity in intensities:
            members = cells.get((error_type, intensity))
            if intensity == 0.0 and members is None:
                members = [(sid, originals[sid]) for sid in ids]
            preds = _clamped_predictions(model, [text for _, text in members])
            drops = [base_preds[sid] - p for (sid, _), p in zip(members, preds)]
            impacted = [abs(d) > impact_threshold for d in drops]
            rows.append(
                RobustnessRow(
                    error_type=error_type,
                    intensity=intensity,
                    mean_pred=float(sum(preds) / len(preds)),
                    mean_drop=float(sum(drops) / len(drops)),
                    pct_impacted=100.0 * sum(impacted) / len(impacted),
                    n=len(members),
                )
            )
    return rows


def _clamped_predictions(model, texts):
    return [min(5.0, max(1.0, float(p))) for p in model.predict_batch(texts)]
