"""Lexicons, error-marker detectors, and text features.

Everything here is a pure function of the input text. The marker detectors
are deliberately shallow (closed word lists and bigram patterns, no parsing)
so that every count is auditable by eye. They power three consumers:

* the featurizer regression backend (`gramscore.model`),
* the deterministic mock scoring client (`gramscore.pseudolabel`),
* the synthetic corpus generator (`gramscore.synthetic`).

Marker categories line up one-to-one with the error injection rules in
`gramscore.injection`; each injected edit is designed to create at least one
detectable marker instance of its own category.
"""

from __future__ import annotations

import numpy as np

# ---------------------------------------------------------------------------
# Word banks
# ---------------------------------------------------------------------------

# (base, third person singular, past, gerund) quadruples. Kept small on
# purpose: the detectors only ever test membership, they never inflect
# unseen verbs.
VERB_TABLE = (
    ("go", "goes", "went", "going"),
    ("buy", "buys", "bought", "buying"),
    ("eat", "eats", "ate", "eating"),
    ("write", "writes", "wrote", "writing"),
    ("take", "takes", "took", "taking"),
    ("make", "makes", "made", "making"),
    ("find", "finds", "found", "finding"),
    ("speak", "speaks", "spoke", "speaking"),
    ("tell", "tells", "told", "telling"),
    ("give", "gives", "gave", "giving"),
    ("bring", "brings", "brought", "bringing"),
    ("meet", "meets", "met", "meeting"),
    ("drive", "drives", "drove", "driving"),
    ("sing", "sings", "sang", "singing"),
    ("build", "builds", "built", "building"),
    ("teach", "teaches", "taught", "teaching"),
    ("win", "wins", "won", "winning"),
    ("lose", "loses", "lost", "losing"),
    ("send", "sends", "sent", "sending"),
    ("see", "sees", "saw", "seeing"),
    ("keep", "keeps", "kept", "keeping"),
    ("walk", "walks", "walked", "walking"),
    ("open", "opens", "opened", "opening"),
    ("visit", "visits", "visited", "visiting"),
    ("watch", "watches", "watched", "watching"),
    ("play", "plays", "played", "playing"),
    ("clean", "cleans", "cleaned", "cleaning"),
    ("cook", "cooks", "cooked", "cooking"),
    ("finish", "finishes", "finished", "finishing"),
    ("enjoy", "enjoys", "enjoyed", "enjoying"),
    ("paint", "paints", "painted", "painting"),
    ("repair", "repairs", "repaired", "repairing"),
    ("carry", "carries", "carried", "carrying"),
    ("call", "calls", "called", "calling"),
    ("wait", "waits", "waited", "waiting"),
    ("listen", "listens", "listened", "listening"),
    ("help", "helps", "helped", "helping"),
    ("plan", "plans", "planned", "planning"),
    ("share", "shares", "shared", "sharing"),
    ("prepare", "prepares", "prepared", "preparing"),
    ("arrive", "arrives", "arrived", "arriving"),
    ("depend", "depends", "depended", "depending"),
    ("talk", "talks", "talked", "talking"),
    ("belong", "belongs", "belonged", "belonging"),
)

BASE_FORMS = frozenset(b for b, _, _, _ in VERB_TABLE)
THIRD_FORMS = frozenset(t for _, t, _, _ in VERB_TABLE)
PAST_FORMS = frozenset(p for _, _, p, _ in VERB_TABLE)
GERUND_FORMS = frozenset(g for _, _, _, g in VERB_TABLE)
BE_FORMS = frozenset({"is", "are", "was", "were", "am"})
ALL_VERB_FORMS = BASE_FORMS | THIRD_FORMS | PAST_FORMS | BE_FORMS


def _overregular_past(base: str) -> str:
    # "go" -> "goed", "write" -> "writed": the classic over-regularisation.
    return base + ("d" if base.endswith("e") else "ed")


def _naive_third(base: str) -> str:
    return base + "s"


# Wrong verb forms unique to the verb-form rule (bare gerunds are the other
# kind it produces; those live in GERUND_FORMS and are flagged when they
# appear without an auxiliary).
OVERREGULAR_PASTS = {}
NAIVE_THIRDS = {}
for _base, _third, _past, _ in VERB_TABLE:
    if _past != _base + "ed" and _past != _base + "d":  # irregular past
        OVERREGULAR_PASTS[_past] = _overregular_past(_base)
    if _third != _base + "s":  # "goes", "watches", "carries", ...
        NAIVE_THIRDS[_third] = _naive_third(_base)

BAD_VERB_FORMS = frozenset(OVERREGULAR_PASTS.values()) | frozenset(NAIVE_THIRDS.values())

SUBJECT_PRONOUNS = frozenset({"i", "he", "she", "it", "we", "they", "you"})
OBJECT_PRONOUNS = frozenset({"me", "him", "her", "us", "them"})
PRONOUN_SWAP = {
    "i": "me",
    "me": "i",
    "he": "him",
    "him": "he",
    "she": "her",
    "her": "she",
    "we": "us",
    "us": "we",
    "they": "them",
    "them": "they",
}

PREPOSITIONS = frozenset(
    {"about", "at", "by", "for", "from", "in", "near", "of", "on", "to", "with"}
)

# Heads with a fixed required preposition; any other preposition after the
# head counts as a preposition marker.
COLLOCATIONS = {
    "go": "to",
    "goes": "to",
    "went": "to",
    "walk": "to",
    "walks": "to",
    "walked": "to",
    "drive": "to",
    "drives": "to",
    "drove": "to",
    "arrive": "at",
    "arrives": "at",
    "arrived": "at",
    "listen": "to",
    "listens": "to",
    "listened": "to",
    "wait": "for",
    "waits": "for",
    "waited": "for",
    "depend": "on",
    "depends": "on",
    "depended": "on",
    "talk": "about",
    "talks": "about",
    "talked": "about",
    "belong": "to",
    "belongs": "to",
    "belonged": "to",
    "interested": "in",
    "proud": "of",
    "afraid": "of",
}

FILLER_WORDS = ("um", "uh", "like", "you know")
_FILLER_SINGLE = frozenset({"um", "uh", "like"})

DETERMINERS = frozenset({"the", "a", "an", "my", "our"})

QUESTION_OPENERS = frozenset(
    {
        "what", "where", "when", "why", "how", "who", "which",
        "do", "does", "did", "is", "are", "was", "were",
        "can", "could", "will", "would", "should", "am",
    }
)

NOUNS = (
    "market", "station", "garden", "kitchen", "letter", "picture", "ticket",
    "window", "basket", "library", "museum", "bridge", "village", "bicycle",
    "morning", "evening", "afternoon", "dinner", "song", "door", "wall",
    "fence", "house", "school", "office", "park", "river", "mountain",
    "table", "road", "concert", "story", "recipe", "map",
    "journey", "lesson", "festival", "harbor", "orchard",
)

PERSON_NOUNS = (
    "teacher", "friend", "neighbor", "sister", "brother", "cousin",
    "colleague", "gardener", "painter", "driver",
)

ADJECTIVES = (
    "fresh", "small", "bright", "quiet", "modern", "wooden", "friendly",
    "careful", "busy", "pleasant", "narrow", "shiny", "green", "heavy",
    "gentle", "warm", "tidy", "calm", "broad", "simple",
)

PREDICATE_ADJECTIVES = ("proud", "afraid", "interested")

ADVERBS = (
    "quietly", "quickly", "carefully", "happily", "slowly", "early",
    "often", "together", "yesterday", "today",
)

FUNCTION_WORDS = frozenset(
    {"and", "the", "a", "an", "my", "our", "this", "that", "will", "did",
     "had", "not", "very", "you", "know"}
)

# Every word the synthetic world can legitimately contain. Tokens outside
# this set (after stripping punctuation) are treated as spelling markers, so
# the wrong verb forms and fillers must be included here: they are claimed
# by their own detectors instead.
VOCABULARY = frozenset(
    set(ALL_VERB_FORMS)
    | GERUND_FORMS
    | BAD_VERB_FORMS
    | SUBJECT_PRONOUNS
    | OBJECT_PRONOUNS
    | PREPOSITIONS
    | set(COLLOCATIONS)
    | _FILLER_SINGLE
    | DETERMINERS
    | QUESTION_OPENERS
    | set(NOUNS)
    | set(PERSON_NOUNS)
    | set(ADJECTIVES)
    | set(PREDICATE_ADJECTIVES)
    | set(ADVERBS)
    | FUNCTION_WORDS
)

# ---------------------------------------------------------------------------
# Tokenization helpers
# ---------------------------------------------------------------------------

_TERMINATORS = ".!?"


def tokenize(text: str) -> list[str]:
    """Whitespace tokenization; punctuation stays attached to tokens."""
    return text.split()


def core_of(token: str) -> str:
    """Lowercased token with surrounding punctuation stripped."""
    return token.strip(".,!?;:\"'()").lower()


def has_terminator(token: str) -> bool:
    stripped = token.rstrip("\"')")
    return bool(stripped) and stripped[-1] in _TERMINATORS


def _prepare(tokens: list[str]):
    cores = [core_of(t) for t in tokens]
    ends = [has_terminator(t) for t in tokens]
    return cores, ends


# ---------------------------------------------------------------------------
# Marker detectors (counts per text)
# ---------------------------------------------------------------------------


def count_filler_markers(tokens, cores, ends) -> int:
    n = sum(1 for c in cores if c in _FILLER_SINGLE)
    n += sum(
        1
        for i in range(len(cores) - 1)
        if cores[i] == "you" and cores[i + 1] == "know"
    )
    return n


def count_redundancy_markers(tokens, cores, ends) -> int:
    n = 0
    for i in range(len(cores) - 1):
        if cores[i] and cores[i] == cores[i + 1]:
            n += 1
    for i in range(len(cores) - 3):
        if cores[i] and (cores[i], cores[i + 1]) == (cores[i + 2], cores[i + 3]):
            n += 1
    return n


def count_word_order_markers(tokens, cores, ends) -> int:
    n = 0
    last = len(cores) - 1
    for i, c in enumerate(cores):
        if c in DETERMINERS:
            # a determiner must be followed by more noun phrase
            if i == last or ends[i]:
                n += 1
            elif cores[i + 1] in ALL_VERB_FORMS or cores[i + 1] in PREPOSITIONS:
                n += 1
        elif c in PREPOSITIONS and (i == last or ends[i]):
            # dangling preposition at a clause end
            n += 1
        elif c in ALL_VERB_FORMS and i < last and cores[i + 1] in SUBJECT_PRONOUNS:
            if not ends[i]:
                n += 1
    return n


def count_verb_form_markers(tokens, cores, ends) -> int:
    n = sum(1 for c in cores if c in BAD_VERB_FORMS)
    for i, c in enumerate(cores):
        # a bare gerund where a finite verb belongs ("they cooking dinner")
        if c in GERUND_FORMS:
            prev = cores[i - 1] if i > 0 and not ends[i - 1] else ""
            if prev not in BE_FORMS:
                n += 1
    return n


def count_preposition_markers(tokens, cores, ends) -> int:
    n = 0
    for i in range(len(cores) - 1):
        expected = COLLOCATIONS.get(cores[i])
        if expected and not ends[i]:
            nxt = cores[i + 1]
            if nxt in PREPOSITIONS and nxt != expected:
                n += 1
    return n


def count_tense_markers(tokens, cores, ends) -> int:
    # "will" must govern a base form; "will went" / "will goes" are markers.
    n = 0
    for i in range(len(cores) - 1):
        if cores[i] == "will" and not ends[i]:
            nxt = cores[i + 1]
            if nxt in PAST_FORMS or nxt in THIRD_FORMS or nxt in BE_FORMS:
                n += 1
    return n


def count_agreement_markers(tokens, cores, ends) -> int:
    n = 0
    for i in range(len(cores) - 1):
        if ends[i]:
            continue
        subj, verb = cores[i], cores[i + 1]
        if subj in {"he", "she", "it"}:
            if verb in BASE_FORMS or verb in {"are", "were"}:
                n += 1
        elif subj in {"we", "they", "you"}:
            if verb in THIRD_FORMS or verb in {"is", "was"}:
                n += 1
        elif subj == "i":
            if verb in THIRD_FORMS or verb == "is":
                n += 1
    return n


def count_spelling_markers(tokens, cores, ends) -> int:
    n = 0
    for c in cores:
        if len(c) >= 2 and c.isalpha() and c.isascii() and c not in VOCABULARY:
            n += 1
    return n


def count_punctuation_markers(tokens, cores, ends) -> int:
    n = 0
    for i in range(1, len(tokens)):
        word = tokens[i].lstrip("\"'(")
        if not word or not word[0].isupper():
            continue
        if cores[i] == "i":
            continue
        if not ends[i - 1]:
            # capitalized sentence opener with no terminator before it
            n += 1
    # question marks on clauses that do not open like questions
    start = 0
    for i, token in enumerate(tokens):
        if has_terminator(token):
            stripped = token.rstrip("\"')")
            if stripped.endswith("?") and cores[start] not in QUESTION_OPENERS:
                n += 1
            start = i + 1
    return n


def count_pronoun_markers(tokens, cores, ends) -> int:
    n = 0
    for i in range(len(cores) - 1):
        if ends[i]:
            continue
        a, b = cores[i], cores[i + 1]
        if a in OBJECT_PRONOUNS and b in ALL_VERB_FORMS:
            n += 1
        elif a in PREPOSITIONS and b in SUBJECT_PRONOUNS and b != "you":
            n += 1
    return n


# Order matters: this is the canonical marker-category order used by the
# feature vector and mirrored by gramscore.injection.ErrorType.
MARKER_COUNTERS = (
    ("filler_word", count_filler_markers),
    ("redundant_phrase", count_redundancy_markers),
    ("word_order", count_word_order_markers),
    ("verb_form", count_verb_form_markers),
    ("preposition", count_preposition_markers),
    ("tense", count_tense_markers),
    ("subject_verb_agreement", count_agreement_markers),
    ("spelling", count_spelling_markers),
    ("punctuation", count_punctuation_markers),
    ("pronoun", count_pronoun_markers),
)

MARKER_NAMES = tuple(name for name, _ in MARKER_COUNTERS)


def marker_densities(text: str) -> dict[str, float]:
    """Per-category marker count divided by the text's word count."""
    tokens = tokenize(text)
    if not tokens:
        return {name: 0.0 for name in MARKER_NAMES}
    cores, ends = _prepare(tokens)
    wc = len(tokens)
    return {name: fn(tokens, cores, ends) / wc for name, fn in MARKER_COUNTERS}


def error_marker_density(text: str) -> float:
    """Total marker density: the sum over all ten categories."""
    return float(sum(marker_densities(text).values()))


# ---------------------------------------------------------------------------
# Feature vector and the deterministic scoring rule
# ---------------------------------------------------------------------------

FEATURE_NAMES = ("word_count", "mean_word_length", "type_token_ratio") + MARKER_NAMES

# Scale factors keep every feature O(1) so plain gradient descent behaves.
_WC_SCALE = 100.0
_MWL_SCALE = 10.0


def extract_features(text: str) -> np.ndarray:
    """Deterministic 13-dimensional feature vector for the featurizer backend."""
    tokens = tokenize(text)
    if not tokens:
        return np.zeros(len(FEATURE_NAMES))
    cores, ends = _prepare(tokens)
    wc = len(tokens)
    mean_len = sum(len(c) for c in cores) / wc
    ttr = len(set(cores)) / wc
    feats = [wc / _WC_SCALE, mean_len / _MWL_SCALE, ttr]
    feats.extend(fn(tokens, cores, ends) / wc for _, fn in MARKER_COUNTERS)
    return np.asarray(feats, dtype=float)


# Score drops by RULE_SLOPE per unit of marker density until the density
# saturates at RULE_SATURATION; the rubric floor and ceiling always apply.
RULE_SLOPE = 10.0
RULE_SATURATION = 0.4


def rule_score(text: str) -> float:
    """Rubric score of a text under the fixed marker-density rule.

    5.0 for marker-free text, decreasing linearly in total marker density
    and saturating at the bottom of the 1-5 scale.
    """
    density = error_marker_density(text)
    raw = 5.0 - RULE_SLOPE * min(density, RULE_SATURATION)
    return float(min(5.0, max(1.0, raw)))
