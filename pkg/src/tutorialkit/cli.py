"""Command-line entry points: extract, evaluate, report, serve.

Exit codes: 0 success, 1 input error, 2 provider error (only with
--no-fallback; by default provider failures degrade to heuristics).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import document as docmod
from . import report as reportmod
from .document import new_document
from .errors import ProviderFailure, TutorialKitError
from .extraction import (
    GenerationParams,
    RemoteGenerationProvider,
    StubGenerationProvider,
)
from .localization import RemoteDetectorProvider, StubDetectorProvider
from .metrics import (
    aggregate,
    evaluate_video,
    load_ground_truth,
    row_from_dict,
    row_to_dict,
)
from .pipeline import PipelineResources, run_all
from .shots import load_frame_samples
from .transcript import infer_duration, parse_transcript

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_PROVIDER = 2


def _build_provider(args):
    if args.provider == "none":
        return None
    if args.provider == "remote":
        url = args.provider_url or os.environ.get("TUTORIALKIT_PROVIDER_URL")
        if not url:
            raise SystemExit("remote provider needs --provider-url or TUTORIALKIT_PROVIDER_URL")
        return RemoteGenerationProvider(url, model=args.model)
    stub_dir = args.stub_dir or os.environ.get("TUTORIALKIT_STUB_DIR", "stub-fixtures")
    return StubGenerationProvider(stub_dir)


def _build_detector(args):
    if args.detector_url:
        return RemoteDetectorProvider(args.detector_url)
    fixtures = args.detector_fixtures or os.environ.get("TUTORIALKIT_DETECTOR_FIXTURES")
    if fixtures:
        return StubDetectorProvider(fixtures)
    return None


def cmd_extract(args) -> int:
    transcript_path = Path(args.transcript)
    if not transcript_path.is_file():
        print(f"error: transcript {transcript_path} not found", file=sys.stderr)
        return EXIT_INPUT
    raw = transcript_path.read_text(encoding="utf-8")

    samples = []
    if args.frames:
        frames_dir = Path(args.frames)
        if not frames_dir.is_dir():
            print(f"error: frames directory {frames_dir} not found", file=sys.stderr)
            return EXIT_INPUT
        samples = load_frame_samples(frames_dir)

    duration = args.duration or infer_duration(raw)
    if duration <= 0:
        print("error: could not infer duration; pass --duration", file=sys.stderr)
        return EXIT_INPUT

    try:
        transcript = parse_transcript(
            raw, args.format, duration, video_id=args.video_id or transcript_path.stem
        )
    except TutorialKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    resources = PipelineResources(
        provider=_build_provider(args),
        detector=_build_detector(args),
        samples=samples,
        params=GenerationParams(seed=args.seed),
        token_limit=args.token_limit,
        allow_fallback=not args.no_fallback,
    )
    doc = new_document(transcript)
    try:
        outcomes = run_all(doc, resources)
    except ProviderFailure as exc:
        print(f"error: provider failed and fallback disabled: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    for outcome in outcomes:
        if outcome.fallback_used:
            print(f"warning: stage {outcome.stage}: {outcome.detail}", file=sys.stderr)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(docmod.save(doc))
    print(f"wrote {out} ({len(doc.steps)} steps, {len(doc.objects)} objects)")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    try:
        doc = docmod.load(Path(args.pred).read_bytes())
        gt = load_ground_truth(args.gt)
        row = evaluate_video(doc, gt)
    except (TutorialKitError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(row_to_dict(row), indent=2, sort_keys=True) + "\n")
    print(reportmod.render_table([row]))
    return EXIT_OK


def cmd_report(args) -> int:
    rows_dir = Path(args.rows)
    rows = []
    for path in sorted(rows_dir.glob("*.json")) if rows_dir.is_dir() else []:
        try:
            rows.append(row_from_dict(json.loads(path.read_text(encoding="utf-8"))))
        except (TypeError, KeyError, json.JSONDecodeError):
            continue  # not an evaluation row
    if not rows:
        print(f"error: no evaluation rows in {rows_dir}", file=sys.stderr)
        return EXIT_INPUT
    summary = aggregate(rows)
    print(reportmod.render_table(rows, summary))

    out_dir = Path(args.out) if args.out else rows_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    reportmod.write_csv(rows, out_dir / "report.csv")
    (out_dir / "report.json").write_text(
        json.dumps(
            {
                "rows": [row_to_dict(r) for r in rows],
                "summary": {
                    "video_count": summary.video_count,
                    "mean_obj_f1": summary.mean_obj_f1,
                    "mean_step_avg_f1": summary.mean_step_avg_f1,
                    "mean_obj_false_neg": summary.mean_obj_false_neg,
                    "mean_obj_false_pos": summary.mean_obj_false_pos,
                    "mean_step_false_neg": summary.mean_step_false_neg,
                    "mean_step_false_pos": summary.mean_step_false_pos,
                },
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    written = [out_dir / "report.csv", out_dir / "report.json"]
    if not args.no_figures:
        written += reportmod.write_figures(rows, summary, out_dir)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import config_from_env, create_app

    app = create_app(config_from_env())
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tutorialkit",
        description="Build, edit, and evaluate mixed-media tutorials from instructional videos.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    extract = sub.add_parser("extract", help="run the full extraction pipeline headlessly")
    extract.add_argument("--transcript", required=True, help="caption file (VTT, SRT, timed lines)")
    extract.add_argument("--frames", help="directory of <seconds>.jpg|png frame images")
    extract.add_argument("--out", required=True, help="project file to write")
    extract.add_argument("--provider", choices=["stub", "remote", "none"], default="stub")
    extract.add_argument("--provider-url", help="chat endpoint URL for --provider remote")
    extract.add_argument("--model", default="default")
    extract.add_argument("--stub-dir", help="canned-response directory for --provider stub")
    extract.add_argument("--detector-url", help="open-vocabulary detector endpoint")
    extract.add_argument("--detector-fixtures", help="canned detections JSON file")
    extract.add_argument("--seed", type=int, default=None)
    extract.add_argument("--format", default="auto", choices=["auto", "vtt", "srt", "timed-lines"])
    extract.add_argument("--video-id", default=None)
    extract.add_argument("--duration", type=float, default=None, help="video length in seconds")
    extract.add_argument("--token-limit", type=int, default=None)
    extract.add_argument("--no-fallback", action="store_true",
                         help="fail (exit 2) instead of degrading to heuristics")
    extract.set_defaults(func=cmd_extract)

    evaluate = sub.add_parser("evaluate", help="score a project file against an annotation")
    evaluate.add_argument("--pred", required=True, help="project file from extract")
    evaluate.add_argument("--gt", required=True, help="ground-truth annotation JSON")
    evaluate.add_argument("--out", required=True, help="evaluation row JSON to write")
    evaluate.set_defaults(func=cmd_evaluate)

    report = sub.add_parser("report", help="aggregate evaluation rows into a table and figures")
    report.add_argument("--rows", required=True, help="directory of evaluation row JSON files")
    report.add_argument("--out", help="output directory (default: the rows directory)")
    report.add_argument("--no-figures", action="store_true")
    report.set_defaults(func=cmd_report)

    serve = sub.add_parser("serve", help="run the editing service (config via TUTORIALKIT_* env)")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8753)
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
