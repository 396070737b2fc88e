"""Shot-boundary detection over color histograms and thumbnail selection."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyImage, NoFramesInInterval

HIST_BINS_PER_CHANNEL = 8
HIST_SIZE = HIST_BINS_PER_CHANNEL**3
DEFAULT_THRESHOLD = 0.6
DEFAULT_SAMPLE_FPS = 1.0


@dataclass(frozen=True, eq=False)
class FrameSample:
    time_s: float
    feature: np.ndarray  # L1-normalized 512-bin RGB histogram
    image_ref: str


@dataclass(frozen=True)
class ShotBoundary:
    time_s: float
    score: float  # L1 distance between adjacent histograms, in [0, 2]


def compute_histogram(pixels: np.ndarray) -> np.ndarray:
    """8x8x8 RGB histogram of a raster, L1-normalized."""
    arr = np.asarray(pixels)
    if arr.size == 0:
        raise EmptyImage("raster has no pixels")
    arr = np.clip(arr.reshape(-1, 3), 0, 255).astype(np.int64)
    binned = arr // (256 // HIST_BINS_PER_CHANNEL)
    idx = (binned[:, 0] * HIST_BINS_PER_CHANNEL + binned[:, 1]) * HIST_BINS_PER_CHANNEL + binned[:, 2]
    hist = np.bincount(idx, minlength=HIST_SIZE).astype(np.float64)
    return hist / hist.sum()


def l1_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(a - b).sum())


def detect_boundaries(
    samples: list[FrameSample], threshold: float = DEFAULT_THRESHOLD
) -> list[ShotBoundary]:
    """Emit a boundary wherever adjacent frames' histograms differ by >= threshold."""
    if len(samples) < 2:
        raise ValueError("need at least two samples")
    if not 0 < threshold <= 2:
        raise ValueError("threshold must be in (0, 2]")
    boundaries = []
    for prev, cur in zip(samples, samples[1:]):
        score = l1_distance(prev.feature, cur.feature)
        if score >= threshold:
            boundaries.append(ShotBoundary(time_s=cur.time_s, score=score))
    return boundaries


def thumbnail_candidates(
    interval: tuple[float, float],
    samples: list[FrameSample],
    boundaries: list[ShotBoundary],
    k: int,
) -> list[str]:
    """Pick up to k visually diverse frame refs inside a step interval.

    The pool is seeded with the first frame after each in-interval shot
    boundary (nearest the interval start first) plus the midpoint frame, then
    filled greedily by farthest-point selection on histogram L1 distance.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    start_s, end_s = interval
    in_interval: list[FrameSample] = []
    seen_refs = set()
    for sample in samples:
        if start_s <= sample.time_s <= end_s and sample.image_ref not in seen_refs:
            seen_refs.add(sample.image_ref)
            in_interval.append(sample)
    if not in_interval:
        raise NoFramesInInterval(f"no frames inside [{start_s}, {end_s}]")

    midpoint = (start_s + end_s) / 2.0
    mid_sample = min(in_interval, key=lambda s: (abs(s.time_s - midpoint), s.time_s))

    seeds: list[FrameSample] = []
    for boundary in sorted(boundaries, key=lambda b: b.time_s):
        if not start_s <= boundary.time_s <= end_s:
            continue
        after = next((s for s in in_interval if s.time_s >= boundary.time_s), None)
        if after is not None and after not in seeds:
            seeds.append(after)
    if mid_sample not in seeds:
        seeds.append(mid_sample)

    selected = seeds[:k]
    remaining = [s for s in in_interval if s not in selected]
    while len(selected) < k and remaining:
        best = max(
            remaining,
            key=lambda c: (min(l1_distance(c.feature, s.feature) for s in selected), -c.time_s),
        )
        selected.append(best)
        remaining.remove(best)
    return [s.image_ref for s in selected]


def load_frame_samples(frames_dir: str | Path) -> list[FrameSample]:
    """Read timestamped frame images from a directory into histogram samples.

    Files are named "<seconds with 3 decimals>.jpg|png"; a manifest.json with
    an ``entries`` list of {file, time_s} overrides filename parsing.
    """
    from PIL import Image

    frames_dir = Path(frames_dir)
    entries: list[tuple[float, Path]] = []
    manifest = frames_dir / "manifest.json"
    if manifest.exists():
        payload = json.loads(manifest.read_text(encoding="utf-8"))
        for item in payload.get("entries", []):
            entries.append((float(item["time_s"]), frames_dir / item["file"]))
    else:
        for path in sorted(frames_dir.iterdir()):
            if path.suffix.lower() not in (".jpg", ".jpeg", ".png"):
                continue
            try:
                time_s = float(path.stem)
            except ValueError:
                continue
            entries.append((time_s, path))

    entries.sort(key=lambda e: e[0])
    samples = []
    last_time = None
    for time_s, path in entries:
        if last_time is not None and time_s <= last_time:
            continue  # duplicate timestamps would break strict ordering
        with Image.open(path) as img:
            pixels = np.asarray(img.convert("RGB"))
        samples.append(
            FrameSample(time_s=time_s, feature=compute_histogram(pixels), image_ref=str(path))
        )
        last_time = time_s
    return samples
