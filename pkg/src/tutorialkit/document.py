"""Tutorial project state: validation, edits with cascades, persistence, preview."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, replace

from .depgraph import DependencyEdge, DependencyGraph, validate_acyclic
from .errors import (
    CorruptDocument,
    CycleDetected,
    OverlapRejected,
    SchemaVersionMismatch,
    StaleRevision,
    UnknownTarget,
)
from .extraction import StepDraft
from .linker import normalize_term
from .localization import BoundingBox, Detection, frame_time_from_ref
from .transcript import TimedSentence, Transcript

SCHEMA_VERSION = 1
STAGES = (1, 2, 3, 4, 5)
STAGE_STATES = ("pending", "ai_done", "user_accepted")

EDIT_OPS = (
    "set_step_text",
    "set_step_interval",
    "add_step",
    "delete_step",
    "set_thumbnail",
    "add_object",
    "rename_object",
    "delete_object",
    "set_object_step_links",
    "set_object_box",
    "add_edge",
    "delete_edge",
    "accept_stage",
)


@dataclass
class StepEntry:
    draft: StepDraft
    thumbnail: str | None = None
    objects: list[str] = field(default_factory=list)


@dataclass
class ObjectEntry:
    name: str
    best: Detection | None = None
    appearances: list[float] = field(default_factory=list)
    manual_image: str | None = None
    best_image: str | None = None  # frame ref backing the best detection


@dataclass
class TutorialDocument:
    video_id: str
    duration_s: float
    transcript: Transcript
    steps: list[StepEntry] = field(default_factory=list)
    objects: list[ObjectEntry] = field(default_factory=list)
    edges: DependencyGraph = field(default_factory=lambda: DependencyGraph(0))
    stage_status: dict[int, str] = field(
        default_factory=lambda: {n: "pending" for n in STAGES}
    )
    revision: int = 0


def new_document(transcript: Transcript, video_id: str | None = None) -> TutorialDocument:
    return TutorialDocument(
        video_id=video_id if video_id is not None else transcript.video_id,
        duration_s=transcript.duration_s,
        transcript=transcript,
    )


def validate_document(doc: TutorialDocument) -> None:
    """Raise if any structural invariant is broken."""
    if doc.duration_s <= 0:
        raise ValueError("duration must be positive")
    if doc.revision < 0:
        raise ValueError("revision must be >= 0")
    prev_end = 0.0
    for entry in doc.steps:
        d = entry.draft
        if not d.title:
            raise ValueError("step title must be non-empty")
        if not (0 <= d.start_s < d.end_s <= doc.duration_s):
            raise ValueError(f"step interval [{d.start_s}, {d.end_s}] out of range")
        if d.start_s < prev_end:
            raise ValueError("steps must be sorted and non-overlapping")
        prev_end = d.end_s

    names = [obj.name for obj in doc.objects]
    if len(set(names)) != len(names):
        raise ValueError("object names must be unique")
    known = set(names)
    for entry in doc.steps:
        for name in entry.objects:
            if name not in known:
                raise ValueError(f"step references unknown object {name!r}")

    if doc.edges.step_count != len(doc.steps):
        raise ValueError("edge graph step count out of sync")
    validate_acyclic(doc.edges)
    seen_pairs = set()
    for edge in doc.edges.edges:
        pair = (edge.from_step, edge.to_step)
        if pair in seen_pairs:
            raise ValueError(f"duplicate edge {pair}")
        seen_pairs.add(pair)
        if not (0 <= edge.from_step < len(doc.steps) and 0 <= edge.to_step < len(doc.steps)):
            raise ValueError(f"edge {pair} references missing step")
        if not edge.manual:
            if not edge.shared_objects:
                raise ValueError(f"edge {pair} has no shared objects")
            for name in edge.shared_objects:
                if name not in doc.steps[edge.from_step].objects or (
                    name not in doc.steps[edge.to_step].objects
                ):
                    raise ValueError(
                        f"edge {pair} shares {name!r} not linked to both steps"
                    )

    if set(doc.stage_status) != set(STAGES):
        raise ValueError("stage status must cover stages 1-5")
    for stage, state in doc.stage_status.items():
        if state not in STAGE_STATES:
            raise ValueError(f"stage {stage} has invalid state {state!r}")


def _step_index(doc: TutorialDocument, idx) -> int:
    if not isinstance(idx, int) or not 0 <= idx < len(doc.steps):
        raise UnknownTarget(f"no step {idx}")
    return idx


def _object_entry(doc: TutorialDocument, name: str) -> ObjectEntry:
    wanted = normalize_term(name)
    for entry in doc.objects:
        if entry.name == wanted:
            return entry
    raise UnknownTarget(f"no object {name!r}")


def _interval_fits(doc: TutorialDocument, idx: int, start: float, end: float) -> bool:
    if not (0 <= start < end <= doc.duration_s):
        return False
    before = [e for pos, e in enumerate(doc.steps) if pos != idx and e.draft.start_s < start]
    after = [e for pos, e in enumerate(doc.steps) if pos != idx and e.draft.start_s >= start]
    if before and before[-1].draft.end_s > start:
        return False
    if after and end > after[0].draft.start_s:
        return False
    return True


def _remap_edges(graph: DependencyGraph, mapping: dict[int, int], step_count: int) -> DependencyGraph:
    edges = []
    for edge in graph.edges:
        if edge.from_step not in mapping or edge.to_step not in mapping:
            continue  # incident to a deleted step
        edges.append(
            replace(edge, from_step=mapping[edge.from_step], to_step=mapping[edge.to_step])
        )
    return DependencyGraph(step_count=step_count, edges=tuple(edges))


def _prune_edges(doc: TutorialDocument) -> None:
    """Drop stale shared-object labels; drop non-manual edges left empty."""
    kept = []
    for edge in doc.edges.edges:
        shared = frozenset(
            name
            for name in edge.shared_objects
            if name in doc.steps[edge.from_step].objects
            and name in doc.steps[edge.to_step].objects
        )
        if shared or edge.manual:
            kept.append(replace(edge, shared_objects=shared))
    doc.edges = DependencyGraph(step_count=len(doc.steps), edges=tuple(kept))


def apply_edit(doc: TutorialDocument, edit: dict) -> TutorialDocument:
    """Apply one edit and return the updated document (input left untouched).

    The edit dict carries "op", op-specific params, and optionally "revision"
    holding the revision the editor saw; a mismatch raises StaleRevision.
    """
    op = edit.get("op")
    if op not in EDIT_OPS:
        raise UnknownTarget(f"unknown edit op {op!r}")
    if "revision" in edit and edit["revision"] != doc.revision:
        raise StaleRevision(edit["revision"], doc.revision)

    out = copy.deepcopy(doc)

    if op == "set_step_text":
        idx = _step_index(out, edit.get("step"))
        text = (edit.get("text") or "").strip()
        if not text:
            raise ValueError("step text must be non-empty")
        out.steps[idx].draft = replace(out.steps[idx].draft, title=text)

    elif op == "set_step_interval":
        idx = _step_index(out, edit.get("step"))
        start, end = float(edit["start_s"]), float(edit["end_s"])
        if not _interval_fits(out, idx, start, end):
            raise OverlapRejected(
                f"interval [{start}, {end}] overlaps a neighbouring step"
            )
        # The fits check pins the interval between its neighbours, so step
        # order (and therefore edge indices) cannot change.
        out.steps[idx].draft = replace(out.steps[idx].draft, start_s=start, end_s=end)

    elif op == "add_step":
        title = (edit.get("title") or "").strip()
        if not title:
            raise ValueError("step title must be non-empty")
        start, end = float(edit["start_s"]), float(edit["end_s"])
        if not _interval_fits(out, None, start, end):
            raise OverlapRejected(f"interval [{start}, {end}] overlaps an existing step")
        pos = sum(1 for e in out.steps if e.draft.start_s < start)
        out.steps.insert(
            pos, StepEntry(draft=StepDraft(title=title, start_s=start, end_s=end))
        )
        mapping = {i: (i if i < pos else i + 1) for i in range(len(out.steps) - 1)}
        out.edges = _remap_edges(out.edges, mapping, len(out.steps))

    elif op == "delete_step":
        idx = _step_index(out, edit.get("step"))
        del out.steps[idx]
        mapping = {
            i: (i if i < idx else i - 1)
            for i in range(len(out.steps) + 1)
            if i != idx
        }
        out.edges = _remap_edges(out.edges, mapping, len(out.steps))

    elif op == "set_thumbnail":
        idx = _step_index(out, edit.get("step"))
        out.steps[idx].thumbnail = edit.get("image_ref")

    elif op == "add_object":
        name = normalize_term(edit.get("name") or "")
        if any(obj.name == name for obj in out.objects):
            raise ValueError(f"object {name!r} already exists")
        out.objects.append(ObjectEntry(name=name))

    elif op == "rename_object":
        entry = _object_entry(out, edit.get("name") or "")
        new_name = normalize_term(edit.get("new_name") or "")
        if new_name != entry.name and any(o.name == new_name for o in out.objects):
            raise ValueError(f"object {new_name!r} already exists")
        old_name = entry.name
        entry.name = new_name
        if entry.best is not None:
            entry.best = replace(entry.best, object_name=new_name)
        for step in out.steps:
            step.objects = [new_name if n == old_name else n for n in step.objects]
        out.edges = DependencyGraph(
            step_count=out.edges.step_count,
            edges=tuple(
                replace(
                    edge,
                    shared_objects=frozenset(
                        new_name if n == old_name else n for n in edge.shared_objects
                    ),
                )
                for edge in out.edges.edges
            ),
        )

    elif op == "delete_object":
        entry = _object_entry(out, edit.get("name") or "")
        out.objects.remove(entry)
        for step in out.steps:
            step.objects = [n for n in step.objects if n != entry.name]
        _prune_edges(out)

    elif op == "set_object_step_links":
        entry = _object_entry(out, edit.get("name") or "")
        indices = {_step_index(out, i) for i in edit.get("steps", [])}
        for pos, step in enumerate(out.steps):
            linked = pos in indices
            present = entry.name in step.objects
            if linked and not present:
                step.objects.append(entry.name)
            elif not linked and present:
                step.objects.remove(entry.name)
        _prune_edges(out)

    elif op == "set_object_box":
        entry = _object_entry(out, edit.get("name") or "")
        box = edit["box"]
        image_ref = edit.get("image_ref")
        if "time_s" in edit:
            time_s = float(edit["time_s"])
        else:
            time_s = frame_time_from_ref(image_ref) if image_ref else 0.0
        entry.best = Detection(
            object_name=entry.name,
            frame_time_s=time_s,
            box=BoundingBox(x=box["x"], y=box["y"], w=box["w"], h=box["h"]),
            confidence=1.0,
        )
        entry.manual_image = image_ref
        if image_ref:
            entry.best_image = image_ref

    elif op == "add_edge":
        a = _step_index(out, edit.get("from_step"))
        b = _step_index(out, edit.get("to_step"))
        shared = frozenset(
            normalize_term(n) for n in edit.get("shared_objects", [])
        )
        candidate = DependencyEdge(
            from_step=a, to_step=b, shared_objects=shared, manual=True
        )
        validate_acyclic(DependencyGraph(len(out.steps), (candidate,)))
        merged = []
        added = False
        for edge in out.edges.edges:
            if (edge.from_step, edge.to_step) == (a, b):
                merged.append(
                    replace(edge, shared_objects=edge.shared_objects | shared, manual=True)
                )
                added = True
            else:
                merged.append(edge)
        if not added:
            merged.append(candidate)
        merged.sort(key=lambda e: (e.from_step, e.to_step))
        out.edges = DependencyGraph(step_count=len(out.steps), edges=tuple(merged))

    elif op == "delete_edge":
        a, b = edit.get("from_step"), edit.get("to_step")
        remaining = tuple(
            e for e in out.edges.edges if (e.from_step, e.to_step) != (a, b)
        )
        if len(remaining) == len(out.edges.edges):
            raise UnknownTarget(f"no edge ({a}, {b})")
        out.edges = DependencyGraph(step_count=out.edges.step_count, edges=remaining)

    elif op == "accept_stage":
        stage = edit.get("stage")
        if stage not in STAGES:
            raise UnknownTarget(f"no stage {stage}")
        out.stage_status[stage] = "user_accepted"

    out.revision += 1
    validate_document(out)
    return out


# --- persistence ---------------------------------------------------------


def _detection_to_dict(det: Detection | None) -> dict | None:
    if det is None:
        return None
    return {
        "object_name": det.object_name,
        "frame_time_s": det.frame_time_s,
        "box": {"x": det.box.x, "y": det.box.y, "w": det.box.w, "h": det.box.h},
        "confidence": det.confidence,
    }


def _detection_from_dict(payload: dict | None) -> Detection | None:
    if payload is None:
        return None
    box = payload["box"]
    return Detection(
        object_name=payload["object_name"],
        frame_time_s=float(payload["frame_time_s"]),
        box=BoundingBox(x=box["x"], y=box["y"], w=box["w"], h=box["h"]),
        confidence=float(payload["confidence"]),
    )


def document_to_dict(doc: TutorialDocument) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "video_id": doc.video_id,
        "duration_s": doc.duration_s,
        "transcript": {
            "video_id": doc.transcript.video_id,
            "duration_s": doc.transcript.duration_s,
            "sentences": [
                {"index": s.index, "start_s": s.start_s, "end_s": s.end_s, "text": s.text}
                for s in doc.transcript.sentences
            ],
        },
        "steps": [
            {
                "title": e.draft.title,
                "start_s": e.draft.start_s,
                "end_s": e.draft.end_s,
                "thumbnail": e.thumbnail,
                "objects": list(e.objects),
            }
            for e in doc.steps
        ],
        "objects": [
            {
                "name": e.name,
                "best": _detection_to_dict(e.best),
                "appearances": list(e.appearances),
                "manual_image": e.manual_image,
                "best_image": e.best_image,
            }
            for e in doc.objects
        ],
        "edges": [
            {
                "from_step": e.from_step,
                "to_step": e.to_step,
                "shared_objects": sorted(e.shared_objects),
                "manual": e.manual,
            }
            for e in doc.edges.edges
        ],
        "stage_status": {str(k): v for k, v in doc.stage_status.items()},
        "revision": doc.revision,
    }


def document_from_dict(payload: dict) -> TutorialDocument:
    version = payload.get("schema_version")
    if version is None:
        raise CorruptDocument("missing schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"schema_version {version} unsupported")
    try:
        tr = payload["transcript"]
        transcript = Transcript(
            video_id=tr["video_id"],
            duration_s=float(tr["duration_s"]),
            sentences=tuple(
                TimedSentence(
                    index=int(s["index"]),
                    start_s=float(s["start_s"]),
                    end_s=float(s["end_s"]),
                    text=s["text"],
                )
                for s in tr["sentences"]
            ),
        )
        steps = [
            StepEntry(
                draft=StepDraft(
                    title=s["title"], start_s=float(s["start_s"]), end_s=float(s["end_s"])
                ),
                thumbnail=s.get("thumbnail"),
                objects=list(s.get("objects", [])),
            )
            for s in payload["steps"]
        ]
        objects = [
            ObjectEntry(
                name=o["name"],
                best=_detection_from_dict(o.get("best")),
                appearances=[float(t) for t in o.get("appearances", [])],
                manual_image=o.get("manual_image"),
                best_image=o.get("best_image"),
            )
            for o in payload["objects"]
        ]
        edges = DependencyGraph(
            step_count=len(steps),
            edges=tuple(
                DependencyEdge(
                    from_step=int(e["from_step"]),
                    to_step=int(e["to_step"]),
                    shared_objects=frozenset(e["shared_objects"]),
                    manual=bool(e.get("manual", False)),
                )
                for e in payload["edges"]
            ),
        )
        doc = TutorialDocument(
            video_id=payload["video_id"],
            duration_s=float(payload["duration_s"]),
            transcript=transcript,
            steps=steps,
            objects=objects,
            edges=edges,
            stage_status={int(k): v for k, v in payload["stage_status"].items()},
            revision=int(payload["revision"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptDocument(f"bad document payload: {exc}") from exc
    validate_document(doc)
    return doc


def save(doc: TutorialDocument) -> bytes:
    """Serialize deterministically; identical documents give identical bytes."""
    return (json.dumps(document_to_dict(doc), sort_keys=True, indent=2) + "\n").encode(
        "utf-8"
    )


def load(data: bytes) -> TutorialDocument:
    try:
        payload = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptDocument(f"not a document: {exc}") from exc
    if not isinstance(payload, dict):
        raise CorruptDocument("not a document: top level is not an object")
    return document_from_dict(payload)


def preview(doc: TutorialDocument) -> dict:
    """Read-only render model for the tutorial template.

    Contains the object list (with hover image and box), step overview cards,
    and labeled dependency arrows; a pure projection of the document.
    """
    return {
        "video_id": doc.video_id,
        "duration_s": doc.duration_s,
        "revision": doc.revision,
        "objects": [
            {
                "name": o.name,
                "image_ref": o.manual_image or o.best_image,
                "box": (
                    {"x": o.best.box.x, "y": o.best.box.y, "w": o.best.box.w, "h": o.best.box.h}
                    if o.best
                    else None
                ),
                "appearances": list(o.appearances),
            }
            for o in doc.objects
        ],
        "steps": [
            {
                "index": i,
                "title": e.draft.title,
                "start_s": e.draft.start_s,
                "end_s": e.draft.end_s,
                "thumbnail": e.thumbnail,
                "objects": list(e.objects),
            }
            for i, e in enumerate(doc.steps)
        ],
        "arrows": [
            {
                "from_step": e.from_step,
                "to_step": e.to_step,
                "labels": sorted(e.shared_objects),
            }
            for e in doc.edges.edges
        ],
    }
