"""Object-name normalization and object-to-step association by token match."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

from .errors import EmptyAfterNormalization
from .transcript import Transcript, slice_text

if TYPE_CHECKING:
    from .extraction import StepDraft

_PUNCT_RE = re.compile(r"[^\w\s]")

MODES = ("description", "transcript", "both")


@dataclass(frozen=True)
class Association:
    object_name: str
    step_index: int
    source: str  # description | transcript | both


def _stem_token(token: str) -> str:
    """Naive plural stemming; intentionally dumb, applied identically everywhere."""
    if token.endswith("ies") and len(token) > 3:
        return token[:-3] + "y"
    if token.endswith("es") and token[:-2].endswith(("s", "x", "z", "ch", "sh")):
        return token[:-2]
    if token.endswith("s") and len(token) >= 4:
        return token[:-1]
    return token


def _tokenize(text: str) -> list[str]:
    return _PUNCT_RE.sub(" ", text.lower()).split()


def _match_tokens(text: str) -> list[str]:
    # Every token is stemmed so "attach screws" matches the object "screw".
    return [_stem_token(tok) for tok in _tokenize(text)]


def normalize_term(raw: str) -> str:
    """Lowercase, strip punctuation, collapse whitespace, stem the final token."""
    if not raw:
        raise EmptyAfterNormalization("empty term")
    tokens = _tokenize(raw)
    if not tokens:
        raise EmptyAfterNormalization(f"nothing left of {raw!r}")
    tokens[-1] = _stem_token(tokens[-1])
    return " ".join(tokens)


def _contains(haystack: list[str], needle: list[str]) -> bool:
    if not needle or len(needle) > len(haystack):
        return False
    return any(
        haystack[i : i + len(needle)] == needle
        for i in range(len(haystack) - len(needle) + 1)
    )


def match_objects_to_steps(
    objects: Iterable[str],
    steps: Sequence["StepDraft"],
    t: Transcript,
    mode: str = "both",
) -> list[Association]:
    """Associate each object with every step whose text mentions it.

    A mention is the object's stemmed tokens appearing as a contiguous token
    run in the step description, the transcript slice over the step's
    interval, or either, depending on ``mode``. Token-level (not substring)
    matching keeps "pan" from matching "pancake"; it also means a step saying
    only "berries" never matches the object "strawberry".
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    transcript_tokens = [
        _match_tokens(slice_text(t, step.start_s, step.end_s)) for step in steps
    ]
    description_tokens = [_match_tokens(step.title) for step in steps]

    associations = []
    seen: set[tuple[str, int]] = set()
    for name in objects:
        needle = _match_tokens(name)
        for idx in range(len(steps)):
            in_desc = _contains(description_tokens[idx], needle)
            in_trans = _contains(transcript_tokens[idx], needle)
            if mode == "description" and in_desc:
                source = "description"
            elif mode == "transcript" and in_trans:
                source = "transcript"
            elif mode == "both" and (in_desc or in_trans):
                source = "both" if in_desc and in_trans else (
                    "description" if in_desc else "transcript"
                )
            else:
                continue
            key = (normalize_term(name), idx)
            if key not in seen:
                seen.add(key)
                associations.append(Association(key[0], idx, source))
    return associations
