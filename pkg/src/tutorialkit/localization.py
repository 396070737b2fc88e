"""Bounding-box detections for named objects via a pluggable detector."""

from __future__ import annotations

import base64
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import httpx

from .errors import ProviderFailure
from .linker import normalize_term

DEFAULT_MIN_CONF = 0.25


@dataclass(frozen=True)
class BoundingBox:
    x: float
    y: float
    w: float
    h: float  # all fractions of the frame dimensions

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError("box must have positive width and height")
        if self.x < 0 or self.y < 0 or self.x + self.w > 1 + 1e-9 or self.y + self.h > 1 + 1e-9:
            raise ValueError("box must lie inside the unit frame")


@dataclass(frozen=True)
class Detection:
    object_name: str
    frame_time_s: float
    box: BoundingBox
    confidence: float

    def __post_init__(self):
        if not 0 <= self.confidence <= 1:
            raise ValueError("confidence must be in [0, 1]")


class DetectorProvider(Protocol):
    def locate(self, names: list[str], frames: list[str]) -> list[Detection]: ...


def frame_time_from_ref(image_ref: str) -> float:
    """Frame files are named "<seconds>.<ext>"; fall back to 0 otherwise."""
    try:
        return float(Path(image_ref).stem)
    except ValueError:
        return 0.0


def best_detection(
    name: str, detections: list[Detection], min_conf: float = DEFAULT_MIN_CONF
) -> Detection | None:
    """Highest-confidence detection at or above min_conf; ties pick the earliest frame."""
    qualifying = [
        d for d in detections if d.object_name == name and d.confidence >= min_conf
    ]
    if not qualifying:
        return None
    return max(qualifying, key=lambda d: (d.confidence, -d.frame_time_s))


def appearance_times(
    name: str, detections: list[Detection], min_conf: float = DEFAULT_MIN_CONF
) -> list[float]:
    """Distinct frame times with a qualifying detection, ascending."""
    times = {
        d.frame_time_s
        for d in detections
        if d.object_name == name and d.confidence >= min_conf
    }
    return sorted(times)


class StubDetectorProvider:
    """Replays detections from a JSON fixtures file keyed by (name, frame)."""

    def __init__(self, fixtures_file: str | Path):
        self._entries: list[tuple[str, Detection]] = []
        path = Path(fixtures_file)
        if path.exists():
            for item in json.loads(path.read_text(encoding="utf-8")):
                box = item["box"]
                detection = Detection(
                    object_name=normalize_term(item["name"]),
                    frame_time_s=float(
                        item.get("time_s", frame_time_from_ref(item["frame"]))
                    ),
                    box=BoundingBox(x=box[0], y=box[1], w=box[2], h=box[3]),
                    confidence=float(item.get("confidence", 1.0)),
                )
                self._entries.append((item["frame"], detection))

    def locate(self, names: list[str], frames: list[str]) -> list[Detection]:
        wanted = {normalize_term(n) for n in names}
        frame_keys = {Path(f).name for f in frames} | set(frames)
        hits = [
            det
            for frame, det in self._entries
            if det.object_name in wanted and frame in frame_keys
        ]
        return sorted(hits, key=lambda d: (d.frame_time_s, d.object_name, -d.confidence))


class RemoteDetectorProvider:
    """HTTP open-vocabulary detector: one request per frame, JSON in and out."""

    def __init__(
        self,
        base_url: str,
        api_key_env: str = "TUTORIALKIT_API_KEY",
        timeout_s: float = 60.0,
        client: httpx.Client | None = None,
    ):
        self.base_url = base_url
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s
        self._client = client

    def _post(self, body: dict) -> dict:
        headers = {}
        api_key = os.environ.get(self.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        if self._client is not None:
            response = self._client.post(self.base_url, json=body, headers=headers)
        else:
            response = httpx.post(
                self.base_url, json=body, headers=headers, timeout=self.timeout_s
            )
        response.raise_for_status()
        return response.json()

    def locate(self, names: list[str], frames: list[str]) -> list[Detection]:
        detections = []
        try:
            for ref in frames:
                body = {"queries": list(names), "image_ref": ref}
                path = Path(ref)
                if path.exists():
                    body["image"] = base64.b64encode(path.read_bytes()).decode("ascii")
                payload = self._post(body)
                for item in payload.get("detections", []):
                    box = item["box"]
                    detections.append(
                        Detection(
                            object_name=normalize_term(item["name"]),
                            frame_time_s=frame_time_from_ref(ref),
                            box=BoundingBox(
                                x=box["x"], y=box["y"], w=box["w"], h=box["h"]
                            ),
                            confidence=float(item["score"]),
                        )
                    )
        except (httpx.HTTPError, KeyError, ValueError) as exc:
            raise ProviderFailure(f"detection request failed: {exc}") from exc
        return sorted(
            detections, key=lambda d: (d.frame_time_s, d.object_name, -d.confidence)
        )
