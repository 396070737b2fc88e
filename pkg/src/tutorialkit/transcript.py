"""Parse captions (WebVTT / SRT / timed lines) into timestamped sentences."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import InvalidTimestamp, UnparsableTranscript

_TIMESTAMP_RE = re.compile(r"^(?:(\d{1,2}):)?(\d{1,3}):(\d{2}(?:[.,]\d+)?)$")
_TIMED_LINE_RE = re.compile(
    r"^\s*\[?((?:\d{1,2}:)?\d{1,3}:\d{2}(?:[.,]\d+)?)\]?[ \t]+(.*\S)\s*$"
)
_CUE_ARROW_RE = re.compile(r"-->")


@dataclass(frozen=True)
class TimedSentence:
    index: int
    start_s: float
    end_s: float
    text: str


@dataclass(frozen=True)
class DroppedCue:
    start_s: float
    end_s: float
    text: str
    reason: str


@dataclass(frozen=True)
class Transcript:
    video_id: str
    duration_s: float
    sentences: tuple[TimedSentence, ...]
    dropped_cues: tuple[DroppedCue, ...] = field(default=(), compare=False)


def parse_timestamp(token: str) -> float:
    """Read "M:SS", "H:MM:SS" (with optional .mmm or ,mmm) into seconds."""
    match = _TIMESTAMP_RE.match(token.strip())
    if not match:
        raise InvalidTimestamp(f"cannot read timestamp {token!r}")
    hours, minutes, seconds = match.groups()
    return (
        (int(hours) if hours else 0) * 3600
        + int(minutes) * 60
        + float(seconds.replace(",", "."))
    )


def format_timestamp(seconds: float) -> str:
    """Render seconds as "M:SS", or "H:MM:SS" from one hour up."""
    total = int(seconds)
    h, rem = divmod(total, 3600)
    m, s = divmod(rem, 60)
    if h:
        return f"{h}:{m:02d}:{s:02d}"
    return f"{m}:{s:02d}"


def detect_format(raw: str) -> str:
    lines = [line.strip() for line in raw.splitlines() if line.strip()]
    if not lines:
        raise UnparsableTranscript("empty input")
    if lines[0].startswith("WEBVTT"):
        return "vtt"
    if lines[0].isdigit() and len(lines) > 1 and _CUE_ARROW_RE.search(lines[1]):
        return "srt"
    if _TIMED_LINE_RE.match(lines[0]):
        return "timed-lines"
    if any(_CUE_ARROW_RE.search(line) for line in lines[:4]):
        return "vtt"
    raise UnparsableTranscript("could not detect transcript format")


def _read_cue_times(line: str) -> tuple[float, float] | None:
    if not _CUE_ARROW_RE.search(line):
        return None
    left, _, right = line.partition("-->")
    # VTT cue settings ("align:start position:0%") trail the end timestamp.
    right = right.strip().split(" ")[0]
    try:
        return parse_timestamp(left.strip()), parse_timestamp(right)
    except InvalidTimestamp:
        return None


def _parse_cue_blocks(raw: str) -> list[tuple[float, float, str]]:
    """Shared VTT/SRT cue walker: a timing line followed by text lines."""
    cues = []
    lines = raw.splitlines()
    i = 0
    while i < len(lines):
        times = _read_cue_times(lines[i])
        if times is None:
            i += 1
            continue
        i += 1
        text_parts = []
        while i < len(lines) and lines[i].strip():
            if _CUE_ARROW_RE.search(lines[i]):
                break
            text_parts.append(lines[i].strip())
            i += 1
        cues.append((times[0], times[1], " ".join(text_parts)))
    return cues


def _parse_timed_lines(raw: str, duration_s: float) -> list[tuple[float, float, str]]:
    starts: list[tuple[float, str]] = []
    for line in raw.splitlines():
        match = _TIMED_LINE_RE.match(line)
        if match:
            starts.append((parse_timestamp(match.group(1)), match.group(2)))
    cues = []
    for pos, (start, text) in enumerate(starts):
        # No explicit end: a cue runs until the next one starts; the last
        # runs to the end of the video.
        end = starts[pos + 1][0] if pos + 1 < len(starts) else duration_s
        cues.append((start, end, text))
    return cues


def parse_transcript(
    raw: str, format_hint: str = "auto", duration_s: float = 0.0, video_id: str = ""
) -> Transcript:
    """Parse raw caption text into a canonical Transcript.

    Out-of-range or reversed cues are dropped and recorded on the result
    rather than failing the parse; auto captions are too noisy for strictness.
    """
    if not raw or not raw.strip():
        raise UnparsableTranscript("empty input")
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")

    fmt = detect_format(raw) if format_hint == "auto" else format_hint
    if fmt == "timed-lines":
        cues = _parse_timed_lines(raw, duration_s)
    elif fmt in ("vtt", "srt"):
        cues = _parse_cue_blocks(raw)
    else:
        raise ValueError(f"unknown format hint {format_hint!r}")
    if not cues:
        raise UnparsableTranscript(f"no cue parsed as {fmt}")

    kept: list[tuple[float, float, str]] = []
    dropped: list[DroppedCue] = []
    for start, end, text in cues:
        clamped_end = min(end, duration_s)
        if not text:
            dropped.append(DroppedCue(start, end, text, "empty text"))
        elif end < start:
            dropped.append(DroppedCue(start, end, text, "end before start"))
        elif start > duration_s:
            dropped.append(DroppedCue(start, end, text, "starts after video end"))
        elif start < 0:
            dropped.append(DroppedCue(start, end, text, "negative start"))
        else:
            kept.append((start, clamped_end, text))
    if not kept:
        raise UnparsableTranscript("every cue was dropped")

    kept.sort(key=lambda cue: (cue[0], cue[1]))
    sentences = tuple(
        TimedSentence(index=i, start_s=start, end_s=end, text=text)
        for i, (start, end, text) in enumerate(kept)
    )
    return Transcript(
        video_id=video_id,
        duration_s=duration_s,
        sentences=sentences,
        dropped_cues=tuple(dropped),
    )


def infer_duration(raw: str) -> float:
    """Best-effort duration for callers that do not know it: the max cue end.

    Timed lines carry no explicit ends, so the last start gets a 30 s tail.
    """
    best = 0.0
    for line in raw.splitlines():
        if _CUE_ARROW_RE.search(line):
            right = line.partition("-->")[2].strip().split(" ")[0]
            try:
                best = max(best, parse_timestamp(right))
            except InvalidTimestamp:
                continue
        else:
            match = _TIMED_LINE_RE.match(line)
            if match:
                try:
                    best = max(best, parse_timestamp(match.group(1)) + 30.0)
                except InvalidTimestamp:
                    continue
    return best


def render_prompt_lines(t: Transcript) -> str:
    """One "M:SS<tab>text" line per sentence, in sentence order."""
    return "\n".join(
        f"{format_timestamp(s.start_s)}\t{s.text}" for s in t.sentences
    )


def slice_text(t: Transcript, start_s: float, end_s: float) -> str:
    """Concatenated text of sentences overlapping [start_s, end_s] by > 0 s."""
    parts = [
        s.text
        for s in t.sentences
        if min(s.end_s, end_s) - max(s.start_s, start_s) > 0
    ]
    return " ".join(parts)
