"""Evaluation against ground truth: object-set F1, temporal F1, step alignment."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

from .errors import EmptyInput, VideoIdMismatch
from .linker import normalize_term

if TYPE_CHECKING:
    from .document import TutorialDocument

Interval = tuple[float, float]

DEFAULT_MIN_TIOU = 0.1

# A zero-length interval stands in for a ground-truth step the pipeline
# missed, forcing its temporal F1 to 0.
MISSED_STEP_SENTINEL: Interval = (0.0, 0.0)


@dataclass(frozen=True)
class GtStep:
    description: str
    start_s: float
    end_s: float


@dataclass(frozen=True)
class GroundTruth:
    video_id: str
    objects: frozenset[str]
    steps: tuple[GtStep, ...]


@dataclass(frozen=True)
class EvalRow:
    video_id: str
    ours_obj_count: int
    gt_obj_count: int
    obj_false_neg: int
    obj_false_pos: int
    obj_f1: float
    ours_step_count: int
    gt_step_count: int
    step_false_neg: int
    step_false_pos: int
    step_avg_f1: float


@dataclass(frozen=True)
class EvalReport:
    video_count: int
    mean_obj_f1: float
    mean_step_avg_f1: float
    mean_obj_false_neg: float
    mean_obj_false_pos: float
    mean_step_false_neg: float
    mean_step_false_pos: float


@dataclass(frozen=True)
class Alignment:
    matching: tuple[tuple[int, int], ...]
    false_neg: int
    false_pos: int


def object_f1(ours: Iterable[str], gt: Iterable[str]) -> float:
    ours, gt = set(ours), set(gt)
    if not ours and not gt:
        return 1.0
    if not ours or not gt:
        return 0.0
    return 2 * len(ours & gt) / (len(ours) + len(gt))


def interval_overlap(a: Interval, b: Interval) -> float:
    return max(0.0, min(a[1], b[1]) - max(a[0], b[0]))


def tiou(a: Interval, b: Interval) -> float:
    overlap = interval_overlap(a, b)
    union = (a[1] - a[0]) + (b[1] - b[0]) - overlap
    if union <= 0:
        return 1.0 if a == b else 0.0
    return overlap / union


def temporal_f1(pred: Interval, gt: Interval) -> float:
    denom = (pred[1] - pred[0]) + (gt[1] - gt[0])
    if denom <= 0:
        return 1.0 if pred == gt else 0.0
    return 2 * interval_overlap(pred, gt) / denom


def align_steps(
    pred: Sequence[Interval],
    gt: Sequence[Interval],
    min_tiou: float = DEFAULT_MIN_TIOU,
) -> Alignment:
    """Order-preserving 1:1 matching of predicted to ground-truth intervals.

    Dynamic programming maximizes total tIoU (then match count on ties);
    pairs below min_tiou never match. Unmatched ground truth counts as a
    false negative, unmatched predictions as false positives.
    """
    n, m = len(pred), len(gt)
    # dp[i][j]: best (total tiou, matches) over pred[:i] x gt[:j]
    dp = [[(0.0, 0)] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            best = max(dp[i - 1][j], dp[i][j - 1])
            score = tiou(pred[i - 1], gt[j - 1])
            if score >= min_tiou:
                prev = dp[i - 1][j - 1]
                best = max(best, (prev[0] + score, prev[1] + 1))
            dp[i][j] = best

    pairs = []
    i, j = n, m
    while i > 0 and j > 0:
        score = tiou(pred[i - 1], gt[j - 1])
        if score >= min_tiou:
            prev = dp[i - 1][j - 1]
            if dp[i][j] == (prev[0] + score, prev[1] + 1):
                pairs.append((i - 1, j - 1))
                i, j = i - 1, j - 1
                continue
        if dp[i][j] == dp[i - 1][j]:
            i -= 1
        else:
            j -= 1
    pairs.reverse()
    return Alignment(
        matching=tuple(pairs),
        false_neg=m - len(pairs),
        false_pos=n - len(pairs),
    )


def evaluate_video(
    doc: "TutorialDocument", gt: GroundTruth, min_tiou: float = DEFAULT_MIN_TIOU
) -> EvalRow:
    """Score one document against its annotation."""
    if doc.video_id != gt.video_id:
        raise VideoIdMismatch(f"document {doc.video_id!r} vs annotation {gt.video_id!r}")

    ours_objects = {obj.name for obj in doc.objects}
    gt_objects = set(gt.objects)

    pred_intervals = [(s.draft.start_s, s.draft.end_s) for s in doc.steps]
    gt_intervals = [(s.start_s, s.end_s) for s in gt.steps]
    alignment = align_steps(pred_intervals, gt_intervals, min_tiou)
    matched_pred = {j: i for i, j in alignment.matching}

    if gt_intervals:
        f1s = [
            temporal_f1(
                pred_intervals[matched_pred[j]] if j in matched_pred else MISSED_STEP_SENTINEL,
                gt_intervals[j],
            )
            for j in range(len(gt_intervals))
        ]
        step_avg_f1 = sum(f1s) / len(f1s)
    else:
        step_avg_f1 = 1.0 if not pred_intervals else 0.0

    return EvalRow(
        video_id=doc.video_id,
        ours_obj_count=len(ours_objects),
        gt_obj_count=len(gt_objects),
        obj_false_neg=len(gt_objects - ours_objects),
        obj_false_pos=len(ours_objects - gt_objects),
        obj_f1=object_f1(ours_objects, gt_objects),
        ours_step_count=len(pred_intervals),
        gt_step_count=len(gt_intervals),
        step_false_neg=alignment.false_neg,
        step_false_pos=alignment.false_pos,
        step_avg_f1=step_avg_f1,
    )


def aggregate(rows: Sequence[EvalRow]) -> EvalReport:
    if not rows:
        raise EmptyInput("no evaluation rows to aggregate")
    n = len(rows)
    return EvalReport(
        video_count=n,
        mean_obj_f1=sum(r.obj_f1 for r in rows) / n,
        mean_step_avg_f1=sum(r.step_avg_f1 for r in rows) / n,
        mean_obj_false_neg=sum(r.obj_false_neg for r in rows) / n,
        mean_obj_false_pos=sum(r.obj_false_pos for r in rows) / n,
        mean_step_false_neg=sum(r.step_false_neg for r in rows) / n,
        mean_step_false_pos=sum(r.step_false_pos for r in rows) / n,
    )


def row_to_dict(row: EvalRow) -> dict:
    return asdict(row)


def row_from_dict(payload: dict) -> EvalRow:
    return EvalRow(**payload)


def load_ground_truth(path: str | Path) -> GroundTruth:
    """Read an annotation file: {video_id, duration_s, objects, steps}."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    steps = tuple(
        GtStep(
            description=item["description"],
            start_s=float(item["start_s"]),
            end_s=float(item["end_s"]),
        )
        for item in payload.get("steps", [])
    )
    for a, b in zip(steps, steps[1:]):
        if b.start_s < a.start_s or a.end_s > b.start_s:
            raise ValueError("ground-truth steps must be sorted and non-overlapping")
    return GroundTruth(
        video_id=payload["video_id"],
        objects=frozenset(normalize_term(name) for name in payload.get("objects", [])),
        steps=steps,
    )
