"""Render evaluation rows: aligned text table, CSV, and summary figures."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .metrics import EvalReport, EvalRow

COLUMNS = [
    ("Video ID", lambda r: r.video_id),
    ("Ours # Obj.", lambda r: str(r.ours_obj_count)),
    ("GT # Obj.", lambda r: str(r.gt_obj_count)),
    ("False Neg.", lambda r: str(r.obj_false_neg)),
    ("False Pos.", lambda r: str(r.obj_false_pos)),
    ("F1", lambda r: f"{r.obj_f1:.2f}"),
    ("Ours # Steps", lambda r: str(r.ours_step_count)),
    ("GT # Steps", lambda r: str(r.gt_step_count)),
    ("# False Neg.", lambda r: str(r.step_false_neg)),
    ("# False Pos.", lambda r: str(r.step_false_pos)),
    ("Avg. F1", lambda r: f"{r.step_avg_f1:.2f}"),
]


def render_table(rows: Sequence[EvalRow], report: EvalReport | None = None) -> str:
    """Aligned plain-text table, one row per video, optional mean line."""
    header = [name for name, _ in COLUMNS]
    body = [[fmt(row) for _, fmt in COLUMNS] for row in rows]
    if report is not None:
        body.append(
            [
                f"mean ({report.video_count} videos)",
                "",
                "",
                f"{report.mean_obj_false_neg:.2f}",
                f"{report.mean_obj_false_pos:.2f}",
                f"{report.mean_obj_f1:.2f}",
                "",
                "",
                f"{report.mean_step_false_neg:.2f}",
                f"{report.mean_step_false_pos:.2f}",
                f"{report.mean_step_avg_f1:.2f}",
            ]
        )
    widths = [
        max(len(header[i]), *(len(line[i]) for line in body)) if body else len(header[i])
        for i in range(len(header))
    ]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(header, widths)),
        "  ".join("-" * w for w in widths),
    ]
    for line in body:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(line, widths)))
    return "\n".join(lines)


def write_csv(rows: Sequence[EvalRow], path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([name for name, _ in COLUMNS])
        for row in rows:
            writer.writerow([fmt(row) for _, fmt in COLUMNS])


def write_figures(rows: Sequence[EvalRow], report: EvalReport, out_dir: Path) -> list[Path]:
    """Object-F1 bars and step FN/FP bars, one PNG each."""
    out_dir.mkdir(parents=True, exist_ok=True)
    ids = [r.video_id for r in rows]
    positions = range(len(rows))
    written = []

    fig, ax = plt.subplots(figsize=(max(6, 0.5 * len(rows)), 4))
    ax.bar(positions, [r.obj_f1 for r in rows], color="#4878a8")
    ax.axhline(report.mean_obj_f1, color="#a84848", linestyle="--",
               label=f"mean {report.mean_obj_f1:.2f}")
    ax.set_xticks(list(positions))
    ax.set_xticklabels(ids, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel("object F1")
    ax.set_ylim(0, 1.05)
    ax.legend(loc="lower right")
    fig.tight_layout()
    path = out_dir / "object_f1.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    width = 0.4
    fig, ax = plt.subplots(figsize=(max(6, 0.5 * len(rows)), 4))
    ax.bar([p - width / 2 for p in positions], [r.step_false_neg for r in rows],
           width=width, color="#4878a8", label="step false neg.")
    ax.bar([p + width / 2 for p in positions], [r.step_false_pos for r in rows],
           width=width, color="#e0a030", label="step false pos.")
    ax.set_xticks(list(positions))
    ax.set_xticklabels(ids, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel("count per video")
    ax.legend(loc="upper right")
    fig.tight_layout()
    path = out_dir / "step_errors.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written
