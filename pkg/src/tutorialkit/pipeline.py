"""Stage runners tying extraction, shots, linking, detection, and the graph
together over a TutorialDocument. Used by both the CLI and the HTTP service.

Every stage degrades gracefully: if a provider fails and fallback is allowed,
the stage stores deterministic heuristic output instead of failing the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .depgraph import DependencyGraph, build_dependencies
from .document import ObjectEntry, StepEntry, TutorialDocument, validate_document
from .errors import (
    AllStepsDegenerate,
    NoFramesInInterval,
    NoObjectsParsed,
    NoStepsParsed,
    PromptTooLong,
    ProviderFailure,
)
from .extraction import (
    GenerationParams,
    GenerationProvider,
    extract_objects,
    extract_steps,
    heuristic_object_extractor,
    heuristic_step_extractor,
)
from .linker import Association, match_objects_to_steps
from .localization import (
    DEFAULT_MIN_CONF,
    DetectorProvider,
    appearance_times,
    best_detection,
)
from .shots import (
    DEFAULT_THRESHOLD,
    FrameSample,
    ShotBoundary,
    detect_boundaries,
    thumbnail_candidates,
)

_EXTRACTION_FAILURES = (ProviderFailure, NoStepsParsed, NoObjectsParsed,
                        PromptTooLong, AllStepsDegenerate)


@dataclass
class PipelineResources:
    provider: GenerationProvider | None = None
    detector: DetectorProvider | None = None
    samples: list[FrameSample] = field(default_factory=list)
    params: GenerationParams = GenerationParams()
    token_limit: int | None = None
    shot_threshold: float = DEFAULT_THRESHOLD
    thumbnail_k: int = 3
    min_conf: float = DEFAULT_MIN_CONF
    match_mode: str = "both"
    mention_window_s: float = 2.0
    allow_fallback: bool = True


@dataclass
class StageOutcome:
    stage: int
    fallback_used: bool = False
    detail: str = ""


def _boundaries(res: PipelineResources) -> list[ShotBoundary]:
    if len(res.samples) < 2:
        return []
    return detect_boundaries(res.samples, res.shot_threshold)


def run_stage1(doc: TutorialDocument, res: PipelineResources) -> StageOutcome:
    """Identify steps from the transcript; wipes prior steps and edges."""
    outcome = StageOutcome(stage=1)
    drafts = None
    if res.provider is not None:
        try:
            drafts = extract_steps(
                doc.transcript, res.provider, res.params, res.token_limit
            )
        except _EXTRACTION_FAILURES as exc:
            if not res.allow_fallback:
                raise
            outcome.fallback_used = True
            outcome.detail = f"provider failed ({exc}); used heuristic segmentation"
    if drafts is None:
        if res.provider is None:
            outcome.fallback_used = True
            outcome.detail = outcome.detail or "no provider configured; used heuristic segmentation"
        drafts = heuristic_step_extractor(doc.transcript)

    doc.steps = [StepEntry(draft=d) for d in drafts]
    doc.edges = DependencyGraph(step_count=len(doc.steps))
    doc.stage_status[1] = "ai_done"
    doc.revision += 1
    validate_document(doc)
    return outcome


def step_thumbnail_candidates(
    doc: TutorialDocument, res: PipelineResources, step_index: int, k: int | None = None
) -> list[str]:
    entry = doc.steps[step_index]
    return thumbnail_candidates(
        (entry.draft.start_s, entry.draft.end_s),
        res.samples,
        _boundaries(res),
        k or res.thumbnail_k,
    )


def run_stage2(doc: TutorialDocument, res: PipelineResources) -> StageOutcome:
    """Choose a default thumbnail per step from diverse in-interval frames."""
    outcome = StageOutcome(stage=2)
    if not res.samples:
        outcome.detail = "no frame samples available; thumbnails left empty"
    boundaries = _boundaries(res)
    for entry in doc.steps:
        try:
            candidates = thumbnail_candidates(
                (entry.draft.start_s, entry.draft.end_s),
                res.samples,
                boundaries,
                res.thumbnail_k,
            )
        except NoFramesInInterval:
            candidates = []
        entry.thumbnail = candidates[0] if candidates else None
    doc.stage_status[2] = "ai_done"
    doc.revision += 1
    validate_document(doc)
    return outcome


def run_stage3(doc: TutorialDocument, res: PipelineResources) -> StageOutcome:
    """Extract the object list and associate objects with steps."""
    outcome = StageOutcome(stage=3)
    names = None
    if res.provider is not None:
        try:
            names = [
                o.name
                for o in extract_objects(
                    doc.transcript, res.provider, res.params, res.token_limit
                )
            ]
        except _EXTRACTION_FAILURES as exc:
            if not res.allow_fallback:
                raise
            outcome.fallback_used = True
            outcome.detail = f"provider failed ({exc}); used heuristic object mining"
    if names is None:
        if res.provider is None:
            outcome.fallback_used = True
            outcome.detail = outcome.detail or "no provider configured; used heuristic object mining"
        names = [o.name for o in heuristic_object_extractor(doc.transcript)]

    associations = match_objects_to_steps(
        names, [e.draft for e in doc.steps], doc.transcript, res.match_mode
    )
    doc.objects = [ObjectEntry(name=name) for name in names]
    linked: dict[int, list[str]] = {}
    for assoc in associations:
        linked.setdefault(assoc.step_index, []).append(assoc.object_name)
    for idx, entry in enumerate(doc.steps):
        entry.objects = linked.get(idx, [])
    doc.stage_status[3] = "ai_done"
    doc.revision += 1
    validate_document(doc)
    return outcome


def _mention_frames(
    doc: TutorialDocument, res: PipelineResources, name: str
) -> list[FrameSample]:
    from .linker import _contains, _match_tokens  # shared tokenizer, not re-derived

    needle = _match_tokens(name)
    windows = [
        (s.start_s - res.mention_window_s, s.end_s + res.mention_window_s)
        for s in doc.transcript.sentences
        if _contains(_match_tokens(s.text), needle)
    ]
    return [
        sample
        for sample in res.samples
        if any(lo <= sample.time_s <= hi for lo, hi in windows)
    ]


def run_stage4(doc: TutorialDocument, res: PipelineResources) -> StageOutcome:
    """Localize each object: best bounding box plus appearance times."""
    outcome = StageOutcome(stage=4)
    boundaries = _boundaries(res)

    step_frames: list[FrameSample] = []
    seen = set()
    for entry in doc.steps:
        try:
            refs = thumbnail_candidates(
                (entry.draft.start_s, entry.draft.end_s),
                res.samples,
                boundaries,
                res.thumbnail_k,
            )
        except NoFramesInInterval:
            refs = []
        for sample in res.samples:
            if sample.image_ref in refs and sample.image_ref not in seen:
                seen.add(sample.image_ref)
                step_frames.append(sample)

    ref_for_time: dict[float, str] = {}
    for entry in doc.objects:
        frames = list(step_frames)
        frame_refs = {f.image_ref for f in frames}
        for sample in _mention_frames(doc, res, entry.name):
            if sample.image_ref not in frame_refs:
                frames.append(sample)
                frame_refs.add(sample.image_ref)
        frames.sort(key=lambda f: f.time_s)
        for f in frames:
            ref_for_time[f.time_s] = f.image_ref

        detections = []
        if res.detector is not None and frames:
            try:
                detections = res.detector.locate(
                    [entry.name], [f.image_ref for f in frames]
                )
            except ProviderFailure as exc:
                if not res.allow_fallback:
                    raise
                outcome.fallback_used = True
                outcome.detail = f"detector failed ({exc}); objects left unlocalized"
                detections = []
        entry.best = best_detection(entry.name, detections, res.min_conf)
        entry.appearances = appearance_times(entry.name, detections, res.min_conf)
        entry.best_image = (
            ref_for_time.get(entry.best.frame_time_s) if entry.best else None
        )
    doc.stage_status[4] = "ai_done"
    doc.revision += 1
    validate_document(doc)
    return outcome


def run_stage5(doc: TutorialDocument, res: PipelineResources) -> StageOutcome:
    """Build the dependency graph from shared objects; manual edges survive."""
    outcome = StageOutcome(stage=5)
    associations = [
        Association(object_name=name, step_index=idx, source="both")
        for idx, entry in enumerate(doc.steps)
        for name in entry.objects
    ]
    graph = build_dependencies(len(doc.steps), associations)
    manual = [e for e in doc.edges.edges if e.manual]
    auto_pairs = {(e.from_step, e.to_step) for e in graph.edges}
    merged = list(graph.edges) + [
        e for e in manual if (e.from_step, e.to_step) not in auto_pairs
    ]
    merged.sort(key=lambda e: (e.from_step, e.to_step))
    doc.edges = DependencyGraph(step_count=len(doc.steps), edges=tuple(merged))
    doc.stage_status[5] = "ai_done"
    doc.revision += 1
    validate_document(doc)
    return outcome


STAGE_RUNNERS = {
    1: run_stage1,
    2: run_stage2,
    3: run_stage3,
    4: run_stage4,
    5: run_stage5,
}

# Stage 1 produces the step intervals everything else consumes; stages 4 and 5
# additionally consume the stage-3 object list.
STAGE_PREREQUISITES = {1: (), 2: (1,), 3: (1,), 4: (1, 3), 5: (1, 3)}


def run_stage(doc: TutorialDocument, stage: int, res: PipelineResources) -> StageOutcome:
    if stage not in STAGE_RUNNERS:
        raise ValueError(f"no stage {stage}")
    return STAGE_RUNNERS[stage](doc, res)


def run_all(doc: TutorialDocument, res: PipelineResources) -> list[StageOutcome]:
    """Run the full pipeline in order; returns one outcome per stage."""
    outcomes = []
    for stage in sorted(STAGE_RUNNERS):
        outcomes.append(run_stage(doc, stage, res))
    return outcomes


def ensure_prerequisites(doc: TutorialDocument, stage: int) -> None:
    from .errors import MissingPrerequisiteStage

    for needed in STAGE_PREREQUISITES[stage]:
        if doc.stage_status.get(needed) == "pending":
            raise MissingPrerequisiteStage(
                f"stage {stage} needs stage {needed} to run first"
            )


__all__ = [
    "PipelineResources",
    "StageOutcome",
    "run_stage",
    "run_all",
    "run_stage1",
    "run_stage2",
    "run_stage3",
    "run_stage4",
    "run_stage5",
    "step_thumbnail_candidates",
    "ensure_prerequisites",
    "STAGE_PREREQUISITES",
]
