"""Step and object extraction: prompt building, response parsing, providers.

The text-generation provider is pluggable: a remote chat-style endpoint for
real runs, a canned-response stub for tests, and heuristic extractors so the
whole workflow still functions with no provider at all.
"""

from __future__ import annotations

import hashlib
import math
import os
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Protocol

import httpx

from .errors import (
    AllStepsDegenerate,
    EmptyAfterNormalization,
    InvalidTimestamp,
    NoObjectsParsed,
    NoStepsParsed,
    PromptTooLong,
    ProviderFailure,
)
from .linker import normalize_term
from .transcript import Transcript, parse_timestamp, render_prompt_lines

STEP_INSTRUCTION = (
    "Summarize the video transcripts in several steps and find start and end "
    "time for each step."
)
STEP_FORMAT_DIRECTIVE = (
    'Reply with a numbered list, one step per line, in the form '
    '"N. [start-end] description" with M:SS timestamps.'
)
OBJECT_INSTRUCTION = (
    "Find out what objects/ingredients/ tools/ equipment are required in "
    "this tutorial."
)
OBJECT_FORMAT_DIRECTIVE = "Reply with one name per line and no commentary."

TITLE_MAX_CHARS = 120

# Words ignored by the heuristic object extractor: function words plus verbs
# and fillers common in narrated instructions.
DEFAULT_STOPLIST = frozenset("""
a about above after again all almost along also always am an and any are
around as at back be because been before being below between bit both but by
can come could day did do does doing don done down each even every few first
for from get give go going good got had has have he her here hers him his how
i if in into is it its just keep kind know last left let like littlell
look lot made make many may me might more most much my need next no not now of
off on once one only onto or other our out over own part piece place put
really right said same see she should side so some something start step steps
sure take than that the their them then there these they thing things this
those through time to today too top try two under until up use used using very
want was watch way we well were what when where which while who why will with
would you your
""".split())


@dataclass(frozen=True)
class StepDraft:
    title: str
    start_s: float
    end_s: float


@dataclass(frozen=True)
class ObjectDraft:
    name: str


@dataclass(frozen=True)
class GenerationParams:
    max_tokens: int = 1024
    temperature: float = 0.0
    seed: int | None = None


class GenerationProvider(Protocol):
    def generate(self, prompt: str, params: GenerationParams) -> str: ...


def estimate_tokens(text: str) -> int:
    # Rough chars/4 estimate; only used to decide when to chunk.
    return math.ceil(len(text) / 4)


def _check_length(prompt: str, token_limit: int | None) -> str:
    if token_limit is not None and estimate_tokens(prompt) > token_limit:
        raise PromptTooLong(estimate_tokens(prompt), token_limit)
    return prompt


def build_step_prompt(t: Transcript, token_limit: int | None = None) -> str:
    if not t.sentences:
        raise ValueError("transcript has no sentences")
    prompt = "\n".join(
        [STEP_INSTRUCTION, STEP_FORMAT_DIRECTIVE, "", render_prompt_lines(t)]
    )
    return _check_length(prompt, token_limit)


def build_object_prompt(t: Transcript, token_limit: int | None = None) -> str:
    if not t.sentences:
        raise ValueError("transcript has no sentences")
    prompt = "\n".join(
        [OBJECT_INSTRUCTION, OBJECT_FORMAT_DIRECTIVE, "", render_prompt_lines(t)]
    )
    return _check_length(prompt, token_limit)


_ITEM_PREFIX_RE = re.compile(
    r"^\s*(?:step\s+\d+\s*[:.)\-]?\s*|\d+\s*[.):]\s*|[-*•]\s+)", re.IGNORECASE
)
_TIME_TOKEN = r"(?:\d{1,2}:)?\d{1,3}:\d{2}(?:[.,]\d+)?|\d+(?:\.\d+)?\s*s(?:ec(?:ond)?s?)?\b"
_RANGE_RE = re.compile(
    rf"[\[(]?\s*({_TIME_TOKEN})\s*(?:[-–—~]|to)\s*({_TIME_TOKEN})\s*[\])]?",
    re.IGNORECASE,
)
_SINGLE_TIME_RE = re.compile(rf"[\[(]?\s*({_TIME_TOKEN})\s*[\])]?", re.IGNORECASE)
_SECONDS_TOKEN_RE = re.compile(r"^(\d+(?:\.\d+)?)\s*s(?:ec(?:ond)?s?)?$", re.IGNORECASE)


def _parse_time_token(token: str) -> float:
    match = _SECONDS_TOKEN_RE.match(token.strip())
    if match:
        return float(match.group(1))
    return parse_timestamp(token)


def _truncate_title(title: str) -> str:
    if len(title) <= TITLE_MAX_CHARS:
        return title
    cut = title[: TITLE_MAX_CHARS + 1]
    head, _, _ = cut.rpartition(" ")
    return (head or title[:TITLE_MAX_CHARS]).rstrip()


def _clean_title(text: str, fallback: str) -> str:
    title = text.strip().strip(":–—-.,;\t ").strip()
    title = re.sub(r"\s+", " ", title)
    return _truncate_title(title) if title else fallback


def parse_step_response(response: str, duration_s: float) -> list[StepDraft]:
    """Pull (title, start, end) items out of a free-text step listing.

    Items without any timestamp inherit a span from their neighbours:
    previous item's end up to the next item's start.
    """
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    items: list[tuple[str, float | None, float | None]] = []
    for line in response.splitlines():
        prefix = _ITEM_PREFIX_RE.match(line)
        body = line[prefix.end():] if prefix else line
        start = end = None
        range_match = _RANGE_RE.search(body)
        if range_match:
            try:
                start = _parse_time_token(range_match.group(1))
                end = _parse_time_token(range_match.group(2))
            except (InvalidTimestamp, ValueError):
                start = end = None
            else:
                body = body[: range_match.start()] + " " + body[range_match.end():]
        if start is None:
            single = _SINGLE_TIME_RE.search(body)
            if single:
                try:
                    start = _parse_time_token(single.group(1))
                except (InvalidTimestamp, ValueError):
                    start = None
                else:
                    body = body[: single.start()] + " " + body[single.end():]
        if start is None and not prefix:
            continue  # plain prose line, not a list item
        title = _clean_title(body, fallback=f"Step {len(items) + 1}")
        items.append((title, start, end))

    if not items:
        raise NoStepsParsed("no step items recognized")

    def clamp(value: float) -> float:
        return min(max(value, 0.0), duration_s)

    drafts = []
    prev_end = 0.0
    for pos, (title, start, end) in enumerate(items):
        if start is None:
            start = prev_end
        if end is None:
            nexts = [s for _, s, _ in items[pos + 1 :] if s is not None]
            end = nexts[0] if nexts else duration_s
        if end < start:
            start, end = end, start
        start, end = clamp(start), clamp(end)
        prev_end = end
        drafts.append(StepDraft(title=title, start_s=start, end_s=end))
    return drafts


def normalize_steps(drafts: list[StepDraft], duration_s: float) -> list[StepDraft]:
    """Sort drafts and enforce pairwise non-overlap by trimming earlier ends.

    Steps that collapse to zero length (duplicates, fully-contained spans)
    are dropped.
    """
    clamped = []
    for d in drafts:
        start = min(max(d.start_s, 0.0), duration_s)
        end = min(max(d.end_s, 0.0), duration_s)
        if end > start:
            clamped.append(replace(d, start_s=start, end_s=end))
    clamped.sort(key=lambda d: (d.start_s, d.end_s))

    out: list[StepDraft] = []
    for step in clamped:
        while out and out[-1].end_s > step.start_s:
            trimmed = replace(out[-1], end_s=step.start_s)
            out.pop()
            if trimmed.end_s > trimmed.start_s:
                out.append(trimmed)
                break
        out.append(step)
    if drafts and not out:
        raise AllStepsDegenerate("every step trimmed to zero length")
    return out


_PARENTHETICAL_RE = re.compile(r"\([^)]*\)")
_OBJECT_PREFIX_RE = re.compile(r"^\s*(?:\d+\s*[.):]\s*|[-*•]\s+|and\s+)", re.IGNORECASE)


def parse_object_response(response: str) -> list[ObjectDraft]:
    """Split a free-text object listing into deduplicated normalized names."""
    seen = set()
    drafts = []
    for line in response.splitlines():
        line = _PARENTHETICAL_RE.sub(" ", line)
        for piece in re.split(r"[,;]", line):
            piece = _OBJECT_PREFIX_RE.sub("", piece).strip()
            if not piece:
                continue
            try:
                name = normalize_term(piece)
            except EmptyAfterNormalization:
                continue
            if name not in seen:
                seen.add(name)
                drafts.append(ObjectDraft(name=name))
    if not drafts:
        raise NoObjectsParsed("no object names recognized")
    return drafts


def heuristic_step_extractor(
    t: Transcript, target_steps: int | None = None
) -> list[StepDraft]:
    """Offline fallback: segment the transcript at its largest silence gaps."""
    if not t.sentences:
        raise ValueError("transcript has no sentences")
    n = len(t.sentences)
    k = target_steps if target_steps else max(3, math.ceil(t.duration_s / 90.0))
    k = max(1, min(k, n))

    gaps = [
        (t.sentences[i + 1].start_s - t.sentences[i].end_s, i)
        for i in range(n - 1)
    ]
    # Largest gaps win; ties go to the earlier gap.
    cuts = sorted(sorted(gaps, key=lambda g: (-g[0], g[1]))[: k - 1], key=lambda g: g[1])
    cut_after = [i for _, i in cuts]

    segment_starts = [0] + [i + 1 for i in cut_after]
    drafts = []
    for pos, first in enumerate(segment_starts):
        start = t.sentences[first].start_s
        if pos + 1 < len(segment_starts):
            end = t.sentences[segment_starts[pos + 1]].start_s
        else:
            end = t.duration_s
        title = _clean_title(
            " ".join(t.sentences[first].text.split()[:8]), fallback=f"Step {pos + 1}"
        )
        drafts.append(StepDraft(title=title, start_s=start, end_s=end))
    return normalize_steps(drafts, t.duration_s)


def heuristic_object_extractor(
    t: Transcript, stoplist: frozenset[str] | set[str] = DEFAULT_STOPLIST
) -> list[ObjectDraft]:
    """Offline fallback: repeated non-stoplist tokens are candidate objects."""
    stop = {normalize_term(w) for w in stoplist}
    counts: dict[str, int] = {}
    order: list[str] = []
    for sentence in t.sentences:
        for token in re.findall(r"[a-zA-Z0-9']+", sentence.text.lower()):
            try:
                candidate = normalize_term(token)
            except EmptyAfterNormalization:
                continue
            if candidate in stop or candidate.isdigit() or len(candidate) < 3:
                continue
            if candidate not in counts:
                order.append(candidate)
            counts[candidate] = counts.get(candidate, 0) + 1
    return [ObjectDraft(name=name) for name in order if counts[name] >= 2]


class StubGenerationProvider:
    """Replays canned responses from a fixtures directory, keyed by prompt hash."""

    def __init__(self, fixtures_dir: str | Path):
        self.fixtures_dir = Path(fixtures_dir)

    @staticmethod
    def prompt_key(prompt: str) -> str:
        return hashlib.sha256(prompt.encode("utf-8")).hexdigest()

    def response_path(self, prompt: str) -> Path:
        return self.fixtures_dir / f"{self.prompt_key(prompt)}.txt"

    def add_response(self, prompt: str, response: str) -> Path:
        self.fixtures_dir.mkdir(parents=True, exist_ok=True)
        path = self.response_path(prompt)
        path.write_text(response, encoding="utf-8")
        return path

    def generate(self, prompt: str, params: GenerationParams) -> str:
        path = self.response_path(prompt)
        if not path.exists():
            raise ProviderFailure(
                f"no canned response for prompt hash {self.prompt_key(prompt)[:12]}"
            )
        return path.read_text(encoding="utf-8")


class RemoteGenerationProvider:
    """Chat-style JSON endpoint with bearer-token auth from the environment."""

    def __init__(
        self,
        base_url: str,
        model: str = "default",
        api_key_env: str = "TUTORIALKIT_API_KEY",
        timeout_s: float = 60.0,
        client: httpx.Client | None = None,
    ):
        self.base_url = base_url
        self.model = model
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s
        self._client = client

    def generate(self, prompt: str, params: GenerationParams) -> str:
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        }
        if params.seed is not None:
            body["seed"] = params.seed
        headers = {}
        api_key = os.environ.get(self.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        try:
            if self._client is not None:
                response = self._client.post(self.base_url, json=body, headers=headers)
            else:
                response = httpx.post(
                    self.base_url, json=body, headers=headers, timeout=self.timeout_s
                )
            response.raise_for_status()
            payload = response.json()
            return payload["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise ProviderFailure(f"generation request failed: {exc}") from exc


def _split_at_largest_gap(t: Transcript) -> tuple[Transcript, Transcript]:
    gaps = [
        (t.sentences[i + 1].start_s - t.sentences[i].end_s, i)
        for i in range(len(t.sentences) - 1)
    ]
    _, cut = max(gaps, key=lambda g: (g[0], -g[1]))
    left = replace(t, sentences=t.sentences[: cut + 1])
    right = replace(t, sentences=t.sentences[cut + 1 :])
    return left, right


def extract_steps(
    t: Transcript,
    provider: GenerationProvider,
    params: GenerationParams = GenerationParams(),
    token_limit: int | None = None,
) -> list[StepDraft]:
    """Prompt for steps, chunking oversized transcripts at their largest gap."""
    try:
        prompt = build_step_prompt(t, token_limit)
    except PromptTooLong:
        if len(t.sentences) < 2:
            raise
        left, right = _split_at_largest_gap(t)
        drafts = extract_steps(left, provider, params, token_limit) + extract_steps(
            right, provider, params, token_limit
        )
        return normalize_steps(list(drafts), t.duration_s)
    response = provider.generate(prompt, params)
    return normalize_steps(parse_step_response(response, t.duration_s), t.duration_s)


def extract_objects(
    t: Transcript,
    provider: GenerationProvider,
    params: GenerationParams = GenerationParams(),
    token_limit: int | None = None,
) -> list[ObjectDraft]:
    """Prompt for object names, chunking like extract_steps; dedupes results."""
    try:
        prompt = build_object_prompt(t, token_limit)
    except PromptTooLong:
        if len(t.sentences) < 2:
            raise
        left, right = _split_at_largest_gap(t)
        merged = extract_objects(left, provider, params, token_limit) + extract_objects(
            right, provider, params, token_limit
        )
        seen: set[str] = set()
        out = []
        for draft in merged:
            if draft.name not in seen:
                seen.add(draft.name)
                out.append(draft)
        return out
    response = provider.generate(prompt, params)
    return parse_object_response(response)
