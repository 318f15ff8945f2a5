"""Rubric-prompted scoring of unlabeled text via a pluggable LLM client.

The flow: render a rubric prompt per sample, ask the client for a
completion, parse the first numeric token as a 1-5 score, and cache the
result keyed by (sample_id, prompt_hash, model_name) so reruns make no
client calls. Samples whose responses cannot be parsed after the configured
number of attempts are dropped into a rejection report rather than imputed.

The mock client is a deterministic offline stand-in: it scores by the fixed
marker-density rule and can corrupt a seeded fraction of its answers with a
uniform random integer score, which models pseudo-label noise end to end.
"""

from __future__ import annotations

import csv
import json
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from hashlib import sha256
from importlib import resources
from pathlib import Path
import re

from .dataset import Dataset, Provenance, Sample, with_pseudo_label
from .exceptions import ConfigurationError, OutOfRangeScore, ParseFailure, ValidationError
from .textfeatures import rule_score

RESPONSE_BEGIN = "<<<RESPONSE>>>"
RESPONSE_END = "<<<END_RESPONSE>>>"

DEFAULT_TEMPLATE = (
    "You are an experienced language assessment rater.\n"
    "\n"
    "{rubric}\n"
    "\n"
    "Score the following response using the rubric above. The response is\n"
    f"delimited by {RESPONSE_BEGIN} and {RESPONSE_END} lines.\n"
    "\n"
    f"{RESPONSE_BEGIN}\n"
    "{response}\n"
    f"{RESPONSE_END}\n"
    "\n"
    "Answer with a single integer score from 1 to 5 and nothing else."
)


def default_rubric_text() -> str:
    """The bundled five-point grammar rubric (replaceable configuration)."""
    return resources.files("gramscore.assets").joinpath("grammar_rubric_5pt.txt").read_text(
        encoding="utf-8"
    )


@dataclass(frozen=True)
class RubricPrompt:
    """A rubric plus a prompt template with {rubric} and {response} slots."""

    rubric_text: str
    template: str = DEFAULT_TEMPLATE

    def __post_init__(self):
        if "{response}" not in self.template:
            raise ValidationError("prompt template must contain a {response} placeholder")
        if "{rubric}" not in self.template:
            raise ValidationError("prompt template must contain a {rubric} placeholder")

    @property
    def prompt_hash(self) -> str:
        digest = sha256()
        digest.update(self.rubric_text.encode("utf-8"))
        digest.update(b"\x00")
        digest.update(self.template.encode("utf-8"))
        return digest.hexdigest()[:16]

    def render(self, response_text: str) -> str:
        return self.template.replace("{rubric}", self.rubric_text).replace(
            "{response}", response_text
        )


def build_prompt(rubric: RubricPrompt, sample: Sample) -> str:
    """Render the scoring prompt for one sample."""
    if not sample.text.split():
        raise ValidationError(f"sample {sample.id!r} has empty text")
    return rubric.render(sample.text)


def extract_response(prompt: str) -> str:
    """Recover the verbatim response text from a rendered prompt.

    The response sits between the first begin marker line and the last end
    marker line, which stays unambiguous even when the response itself
    contains the marker strings.
    """
    begin = prompt.find(RESPONSE_BEGIN + "\n")
    end = prompt.rfind("\n" + RESPONSE_END)
    if begin < 0 or end < 0 or end < begin:
        raise ValidationError("prompt does not contain a delimited response block")
    return prompt[begin + len(RESPONSE_BEGIN) + 1 : end]


_NUMBER = re.compile(r"[-+]?\d+(?:\.\d+)?")


def parse_score(raw_response: str) -> float:
    """First numeric token of the response, validated against the 1-5 scale."""
    match = _NUMBER.search(raw_response)
    if match is None:
        raise ParseFailure(f"no numeric score in response: {raw_response!r:.120}")
    value = float(match.group())
    if not 1.0 <= value <= 5.0:
        raise OutOfRangeScore(f"score {value} outside [1, 5] in response {raw_response!r:.120}")
    return value


@dataclass(frozen=True)
class PseudoLabel:
    sample_id: str
    score: float
    model_name: str
    prompt_hash: str
    raw_response: str

    def __post_init__(self):
        if not 1.0 <= self.score <= 5.0:
            raise ValidationError(f"pseudo score {self.score} outside [1, 5]")


# ---------------------------------------------------------------------------
# Clients
# ---------------------------------------------------------------------------


class LLMClient:
    """Minimal client contract: a stateless complete() and a model name."""

    model_name: str = "llm"

    def complete(self, prompt: str) -> str:
        raise NotImplementedError


def _unit_hash(*parts) -> float:
    digest = sha256(":".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


class MockLLMClient(LLMClient):
    """Deterministic offline client.

    Scores are the fixed marker-density rule applied to the response text
    extracted from the prompt; clean text scores 5.0. A ``corruption_rate``
    fraction of responses (chosen per response text under ``noise_seed``,
    independent of call order) is replaced by a uniformly random integer
    score in {1..5}.
    """

    def __init__(self, noise_seed: int = 0, corruption_rate: float = 0.0):
        if not 0.0 <= corruption_rate <= 1.0:
            raise ValidationError(f"corruption_rate {corruption_rate} outside [0, 1]")
        self.noise_seed = noise_seed
        self.corruption_rate = corruption_rate
        self.model_name = f"mock-rule-v1(seed={noise_seed},corruption={corruption_rate})"
        self.calls = 0

    def complete(self, prompt: str) -> str:
        self.calls += 1
        text = extract_response(prompt)
        if self.corruption_rate > 0.0:
            if _unit_hash("corrupt", self.noise_seed, text) < self.corruption_rate:
                score = 1 + int(_unit_hash("value", self.noise_seed, text) * 5)
                return f"Score: {min(score, 5)}"
        return f"Score: {rule_score(text):.2f}"


def mock_client(noise_seed: int = 0, corruption_rate: float = 0.0) -> MockLLMClient:
    return MockLLMClient(noise_seed=noise_seed, corruption_rate=corruption_rate)


ENV_ENDPOINT = "GRAMSCORE_LLM_ENDPOINT"
ENV_API_KEY = "GRAMSCORE_LLM_API_KEY"
ENV_MODEL = "GRAMSCORE_LLM_MODEL"


class LiveLLMClient(LLMClient):
    """Chat-completions client configured via environment variables only.

    Reads the endpoint URL, API key, and model name from GRAMSCORE_LLM_ENDPOINT,
    GRAMSCORE_LLM_API_KEY, and GRAMSCORE_LLM_MODEL; credentials never live in
    config files.
    """

    def __init__(self, timeout: float = 60.0):
        endpoint = os.environ.get(ENV_ENDPOINT)
        api_key = os.environ.get(ENV_API_KEY)
        model = os.environ.get(ENV_MODEL)
        missing = [
            name
            for name, value in (
                (ENV_ENDPOINT, endpoint),
                (ENV_API_KEY, api_key),
                (ENV_MODEL, model),
            )
            if not value
        ]
        if missing:
            raise ConfigurationError(
                "live client needs environment variables: " + ", ".join(missing)
            )
        self.endpoint = endpoint.rstrip("/")
        self._api_key = api_key
        self.model_name = model
        self.timeout = timeout

    def complete(self, prompt: str) -> str:
        import requests

        response = requests.post(
            f"{self.endpoint}/chat/completions",
            headers={"Authorization": f"Bearer {self._api_key}"},
            json={
                "model": self.model_name,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": 0.0,
            },
            timeout=self.timeout,
        )
        response.raise_for_status()
        return response.json()["choices"][0]["message"]["content"]


# ---------------------------------------------------------------------------
# Cache
# ---------------------------------------------------------------------------


class PseudoLabelCache:
    """Append-only JSONL cache keyed by (sample_id, prompt_hash, model_name).

    Entries for identical keys are interchangeable by contract, so reloads
    keep the last record per key. put() appends and flushes immediately;
    concurrent insertions of distinct keys are serialized by a lock.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[tuple[str, str, str], tuple[str, float]] = {}
        if self.path.exists():
            with self.path.open("r", encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        obj = json.loads(line)
                        key = (obj["sample_id"], obj["prompt_hash"], obj["model_name"])
                        self._entries[key] = (obj["raw_response"], float(obj["score"]))
                    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                        raise ValidationError(
                            f"{self.path}: bad cache record on line {lineno}: {exc}"
                        ) from exc

    def __len__(self):
        return len(self._entries)

    def get(self, sample_id: str, prompt_hash: str, model_name: str):
        return self._entries.get((sample_id, prompt_hash, model_name))

    def put(self, sample_id: str, prompt_hash: str, model_name: str, raw_response: str, score: float):
        record = json.dumps(
            {
                "sample_id": sample_id,
                "prompt_hash": prompt_hash,
                "model_name": model_name,
                "raw_response": raw_response,
                "score": score,
            },
            ensure_ascii=False,
        )
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(record + "\n")
                fh.flush()
            self._entries[(sample_id, prompt_hash, model_name)] = (raw_response, float(score))


# ---------------------------------------------------------------------------
# The labeling loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Rejection:
    sample_id: str
    reason: str
    attempts: int


def _label_one(sample, client, rubric, retries):
    prompt = build_prompt(rubric, sample)
    last_error = "no attempt made"
    for attempt in range(1, retries + 1):
        try:
            raw = client.complete(prompt)
        except Exception as exc:  # transport failures burn an attempt
            last_error = f"transport error: {exc}"
            continue
        try:
            return parse_score(raw), raw, attempt
        except (ParseFailure, OutOfRangeScore) as exc:
            last_error = str(exc)
    raise _LabelingFailed(last_error, retries)


class _LabelingFailed(Exception):
    def __init__(self, reason, attempts):
        super().__init__(reason)
        self.reason = reason
        self.attempts = attempts


def pseudo_label_dataset(
    dataset: Dataset,
    client: LLMClient,
    rubric: RubricPrompt,
    retries: int = 3,
    cache: PseudoLabelCache | None = None,
    max_workers: int = 1,
):
    """Label every sample with a rubric score from the client.

    Returns (labeled_dataset, rejections). The cache is consulted before any
    client call; parse or transport failures are retried up to ``retries``
    attempts total, after which the sample lands in the rejection report and
    stays unlabeled. Output order matches input order.
    """
    if retries < 1:
        raise ValidationError("retries must be >= 1")
    phash = rubric.prompt_hash
    model = client.model_name
    provenance = Provenance(model=model, prompt_hash=phash)

    results: dict[str, PseudoLabel] = {}
    rejections: list[Rejection] = []
    todo = []
    for sample in dataset:
        hit = cache.get(sample.id, phash, model) if cache is not None else None
        if hit is not None:
            raw, score = hit
            results[sample.id] = PseudoLabel(sample.id, score, model, phash, raw)
        else:
            todo.append(sample)

    def work(sample):
        try:
            score, raw, _ = _label_one(sample, client, rubric, retries)
        except _LabelingFailed as exc:
            return sample.id, None, exc
        if cache is not None:
            cache.put(sample.id, phash, model, raw, score)
        return sample.id, PseudoLabel(sample.id, score, model, phash, raw), None

    if max_workers > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            outcomes = list(pool.map(work, todo))
    else:
        outcomes = [work(s) for s in todo]

    for sample_id, label, failure in outcomes:
        if label is not None:
            results[sample_id] = label
        else:
            rejections.append(Rejection(sample_id, failure.reason, failure.attempts))

    labeled = []
    for sample in dataset:
        label = results.get(sample.id)
        if label is None:
            labeled.append(sample)
        else:
            labeled.append(with_pseudo_label(sample, label.score, provenance))
    return dataset.with_samples(labeled), rejections


def write_rejections_csv(rejections, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "reason", "attempts"])
        for r in rejections:
            writer.writerow([r.sample_id, r.reason, r.attempts])
