"""HTTP facade: project lifecycle, stage runs, edits, preview, thumbnails.

Per-project mutations run under a lock; slow stage runs detach into a worker
thread and return 202 with a poll URL instead of blocking the request.
"""

from __future__ import annotations

import concurrent.futures
import copy
import logging
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import document as docmod
from .document import TutorialDocument, apply_edit, new_document, preview
from .errors import (
    CycleDetected,
    EmptyAfterNormalization,
    InvalidTimestamp,
    MissingPrerequisiteStage,
    NoFramesInInterval,
    OverlapRejected,
    ProviderFailure,
    StaleRevision,
    TutorialKitError,
    UnknownTarget,
    UnparsableTranscript,
)
from .extraction import (
    GenerationProvider,
    RemoteGenerationProvider,
    StubGenerationProvider,
)
from .localization import DetectorProvider, RemoteDetectorProvider, StubDetectorProvider
from .pipeline import (
    PipelineResources,
    ensure_prerequisites,
    run_stage,
    step_thumbnail_candidates,
)
from .shots import FrameSample, load_frame_samples
from .transcript import infer_duration, parse_transcript

log = logging.getLogger("tutorialkit.service")

ERROR_STATUS: dict[type, int] = {
    UnparsableTranscript: 400,
    InvalidTimestamp: 400,
    UnknownTarget: 404,
    StaleRevision: 409,
    MissingPrerequisiteStage: 409,
    OverlapRejected: 422,
    CycleDetected: 422,
    EmptyAfterNormalization: 422,
    ProviderFailure: 502,
}


class ProjectNotFound(TutorialKitError):
    pass


ERROR_STATUS[ProjectNotFound] = 404


@dataclass
class ServiceConfig:
    provider: GenerationProvider | None = None
    detector: DetectorProvider | None = None
    projects_dir: Path | None = None
    frame_root: Path | None = None
    allow_fallback: bool = True
    token_limit: int | None = None
    slow_run_threshold_s: float = 2.0
    cors_origins: list[str] = field(default_factory=lambda: ["*"])


def config_from_env() -> ServiceConfig:
    """Build a config from TUTORIALKIT_* environment variables."""
    provider: GenerationProvider | None = None
    kind = os.environ.get("TUTORIALKIT_PROVIDER", "none")
    if kind == "remote":
        provider = RemoteGenerationProvider(
            base_url=os.environ["TUTORIALKIT_PROVIDER_URL"],
            model=os.environ.get("TUTORIALKIT_MODEL", "default"),
        )
    elif kind == "stub":
        provider = StubGenerationProvider(
            os.environ.get("TUTORIALKIT_STUB_DIR", "stub-fixtures")
        )

    detector: DetectorProvider | None = None
    if os.environ.get("TUTORIALKIT_DETECTOR_URL"):
        detector = RemoteDetectorProvider(os.environ["TUTORIALKIT_DETECTOR_URL"])
    elif os.environ.get("TUTORIALKIT_DETECTOR_FIXTURES"):
        detector = StubDetectorProvider(os.environ["TUTORIALKIT_DETECTOR_FIXTURES"])

    def path_or_none(name):
        value = os.environ.get(name)
        return Path(value) if value else None

    origins = os.environ.get("TUTORIALKIT_CORS_ORIGINS", "*").split(",")
    return ServiceConfig(
        provider=provider,
        detector=detector,
        projects_dir=path_or_none("TUTORIALKIT_PROJECTS_DIR"),
        frame_root=path_or_none("TUTORIALKIT_FRAME_ROOT"),
        allow_fallback=os.environ.get("TUTORIALKIT_NO_FALLBACK", "") != "1",
        cors_origins=[o.strip() for o in origins if o.strip()],
    )


@dataclass
class ProjectState:
    project_id: str
    doc: TutorialDocument
    frames_dir: Path | None
    created_at: float
    lock: threading.RLock = field(default_factory=threading.RLock)
    _samples: list[FrameSample] | None = None

    def samples(self) -> list[FrameSample]:
        if self._samples is None:
            if self.frames_dir and self.frames_dir.is_dir():
                self._samples = load_frame_samples(self.frames_dir)
            else:
                self._samples = []
        return self._samples


class ProjectStore:
    """In-memory project registry with optional on-disk persistence."""

    def __init__(self, directory: Path | None = None):
        self.directory = directory
        self._projects: dict[str, ProjectState] = {}
        self._registry_lock = threading.Lock()
        if directory is not None:
            directory.mkdir(parents=True, exist_ok=True)

    def create(self, doc: TutorialDocument, frames_dir: Path | None) -> ProjectState:
        state = ProjectState(
            project_id=uuid.uuid4().hex,
            doc=doc,
            frames_dir=frames_dir,
            created_at=time.time(),
        )
        with self._registry_lock:
            self._projects[state.project_id] = state
        self.persist(state)
        return state

    def get(self, project_id: str) -> ProjectState:
        with self._registry_lock:
            state = self._projects.get(project_id)
        if state is None:
            raise ProjectNotFound(f"no project {project_id}")
        return state

    def persist(self, state: ProjectState) -> None:
        if self.directory is None:
            return
        path = self.directory / f"{state.project_id}.json"
        path.write_bytes(docmod.save(state.doc))


class ProjectCreate(BaseModel):
    transcript: str
    format: str = "auto"
    video_id: str = ""
    duration_s: float | None = None
    frames_dir: str | None = None


class EditBody(BaseModel):
    revision: int
    edits: list[dict] | None = None
    edit: dict | None = None


def _stage_payload(doc: TutorialDocument, stage: int) -> dict:
    if stage == 1:
        return {
            "steps": [
                {
                    "index": i,
                    "title": e.draft.title,
                    "start_s": e.draft.start_s,
                    "end_s": e.draft.end_s,
                }
                for i, e in enumerate(doc.steps)
            ]
        }
    if stage == 2:
        return {
            "thumbnails": [
                {"step": i, "image_ref": e.thumbnail} for i, e in enumerate(doc.steps)
            ]
        }
    if stage == 3:
        return {
            "objects": [o.name for o in doc.objects],
            "links": {
                o.name: [i for i, e in enumerate(doc.steps) if o.name in e.objects]
                for o in doc.objects
            },
        }
    if stage == 4:
        return {
            "objects": [
                {
                    "name": o.name,
                    "box": (
                        {"x": o.best.box.x, "y": o.best.box.y, "w": o.best.box.w, "h": o.best.box.h}
                        if o.best
                        else None
                    ),
                    "confidence": o.best.confidence if o.best else None,
                    "frame_time_s": o.best.frame_time_s if o.best else None,
                    "image_ref": o.manual_image or o.best_image,
                    "appearances": list(o.appearances),
                }
                for o in doc.objects
            ]
        }
    if stage == 5:
        return {
            "edges": [
                {
                    "from_step": e.from_step,
                    "to_step": e.to_step,
                    "shared_objects": sorted(e.shared_objects),
                    "manual": e.manual,
                }
                for e in doc.edges.edges
            ]
        }
    raise UnknownTarget(f"no stage {stage}")


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or config_from_env()
    app = FastAPI(title="tutorialkit", version="0.1.0")
    app.state.config = config
    app.state.store = ProjectStore(config.projects_dir)
    app.state.executor = concurrent.futures.ThreadPoolExecutor(max_workers=4)
    app.state.jobs = {}

    app.add_middleware(
        CORSMiddleware,
        allow_origins=config.cors_origins,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.middleware("http")
    async def request_logging(request: Request, call_next):
        started = time.perf_counter()
        response = await call_next(request)
        log.info(
            "%s %s -> %d (%.1f ms)",
            request.method,
            request.url.path,
            response.status_code,
            (time.perf_counter() - started) * 1000,
        )
        return response

    @app.exception_handler(TutorialKitError)
    async def engine_error_handler(request: Request, exc: TutorialKitError):
        status = ERROR_STATUS.get(type(exc), 422)
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    def resources(state: ProjectState) -> PipelineResources:
        return PipelineResources(
            provider=config.provider,
            detector=config.detector,
            samples=state.samples(),
            token_limit=config.token_limit,
            allow_fallback=config.allow_fallback,
        )

    def resolve_frames_dir(raw: str | None) -> Path | None:
        if not raw:
            return None
        path = Path(raw)
        if config.frame_root is not None:
            path = (config.frame_root / path).resolve()
            if not path.is_relative_to(config.frame_root.resolve()):
                raise ValueError("frames_dir escapes the configured frame root")
        return path

    @app.post("/projects", status_code=201)
    def create_project(body: ProjectCreate):
        duration = body.duration_s or infer_duration(body.transcript)
        if duration <= 0:
            raise UnparsableTranscript("could not infer video duration")
        transcript = parse_transcript(
            body.transcript, body.format, duration, video_id=body.video_id
        )
        state = app.state.store.create(
            new_document(transcript), resolve_frames_dir(body.frames_dir)
        )
        return {
            "project_id": state.project_id,
            "video_id": state.doc.video_id,
            "revision": state.doc.revision,
            "created_at": state.created_at,
        }

    @app.get("/projects/{project_id}")
    def get_project(project_id: str):
        state = app.state.store.get(project_id)
        doc = state.doc
        return {
            "project_id": project_id,
            "video_id": doc.video_id,
            "duration_s": doc.duration_s,
            "revision": doc.revision,
            "stage_status": {str(k): v for k, v in sorted(doc.stage_status.items())},
        }

    def run_stage_locked(state: ProjectState, stage: int):
        with state.lock:
            ensure_prerequisites(state.doc, stage)
            # run on a copy so a mid-stage failure cannot half-mutate the project
            working = copy.deepcopy(state.doc)
            outcome = run_stage(working, stage, resources(state))
            state.doc = working
            app.state.store.persist(state)
            payload = {
                "stage": stage,
                "status": state.doc.stage_status[stage],
                "revision": state.doc.revision,
                "fallback_used": outcome.fallback_used,
                "detail": outcome.detail,
                "result": _stage_payload(state.doc, stage),
            }
        return payload, 502 if outcome.fallback_used else 200

    @app.post("/projects/{project_id}/stages/{stage}/run")
    def run_stage_endpoint(project_id: str, stage: int):
        state = app.state.store.get(project_id)
        if stage not in (1, 2, 3, 4, 5):
            raise UnknownTarget(f"no stage {stage}")
        future = app.state.executor.submit(run_stage_locked, state, stage)
        try:
            payload, status = future.result(timeout=config.slow_run_threshold_s)
        except concurrent.futures.TimeoutError:
            job_id = uuid.uuid4().hex
            app.state.jobs[job_id] = (project_id, future)
            return JSONResponse(
                status_code=202,
                content={
                    "job_id": job_id,
                    "job_status": "running",
                    "poll_url": f"/projects/{project_id}/jobs/{job_id}",
                },
            )
        return JSONResponse(status_code=status, content=payload)

    @app.get("/projects/{project_id}/jobs/{job_id}")
    def poll_job(project_id: str, job_id: str):
        app.state.store.get(project_id)
        job = app.state.jobs.get(job_id)
        if job is None or job[0] != project_id:
            raise UnknownTarget(f"no job {job_id}")
        future = job[1]
        if not future.done():
            return {"job_id": job_id, "job_status": "running"}
        del app.state.jobs[job_id]
        payload, status = future.result()  # engine errors re-raise into handlers
        return JSONResponse(
            status_code=status,
            content={"job_id": job_id, "job_status": "done", **payload},
        )

    @app.get("/projects/{project_id}/stages/{stage}")
    def get_stage(project_id: str, stage: int):
        state = app.state.store.get(project_id)
        payload = _stage_payload(state.doc, stage)
        return {
            "stage": stage,
            "status": state.doc.stage_status.get(stage),
            "revision": state.doc.revision,
            "result": payload,
        }

    @app.put("/projects/{project_id}/stages/{stage}")
    def put_stage(project_id: str, stage: int, body: EditBody):
        if stage not in (1, 2, 3, 4, 5):
            raise UnknownTarget(f"no stage {stage}")
        state = app.state.store.get(project_id)
        edits = list(body.edits or [])
        if body.edit is not None:
            edits.append(body.edit)
        if not edits:
            raise ValueError("no edits supplied")
        with state.lock:
            if body.revision != state.doc.revision:
                raise StaleRevision(body.revision, state.doc.revision)
            working = state.doc
            for edit in edits:
                edit = {**edit, "revision": working.revision}
                working = apply_edit(working, edit)
            state.doc = working
            app.state.store.persist(state)
            return {"revision": state.doc.revision, "stage": stage}

    @app.get("/projects/{project_id}/preview")
    def get_preview(project_id: str):
        state = app.state.store.get(project_id)
        return preview(state.doc)

    @app.get("/projects/{project_id}/thumbnails")
    def get_thumbnails(project_id: str, step: int, k: int = 3):
        state = app.state.store.get(project_id)
        if not 0 <= step < len(state.doc.steps):
            raise UnknownTarget(f"no step {step}")
        try:
            candidates = step_thumbnail_candidates(
                state.doc, resources(state), step, k=k
            )
        except NoFramesInInterval:
            candidates = []
        return {"step": step, "k": k, "candidates": candidates}

    return app


def build_app() -> FastAPI:
    """ASGI factory: `uvicorn tutorialkit.service:build_app --factory`."""
    return create_app()
