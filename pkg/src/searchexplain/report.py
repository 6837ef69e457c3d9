"""Results table rendering (markdown / csv / json) and a companion bar chart."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

METRIC_COLUMNS = (
    ("meteor", "METEOR"),
    ("rouge1", "ROUGE-1"),
    ("bertscore", "BERTScore"),
    ("bleu", "BLEU"),
)
HEADER = (
    "Model",
    "Architecture",
    "Parameters",
    *(title for _, title in METRIC_COLUMNS),
    "Training time(s)",
    "Inference time(s)",
    "Samples",
)
MISSING = "-"


class ReportError(ValueError):
    pass


@dataclass(frozen=True)
class ResultsRow:
    label: str
    architecture: str
    parameters: str
    meteor: float | None
    rouge1: float | None
    bertscore: float | None
    bleu: float | None
    inference_time: float
    sample_count: int
    training_time: float | None = None

    def __post_init__(self):
        for name, _ in METRIC_COLUMNS:
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ReportError(f"{name} must lie in [0, 1], got {value}")

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "architecture": self.architecture,
            "parameters": self.parameters,
            "meteor": self.meteor,
            "rouge1": self.rouge1,
            "bertscore": self.bertscore,
            "bleu": self.bleu,
            "training_time": self.training_time,
            "inference_time": self.inference_time,
            "sample_count": self.sample_count,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ResultsRow":
        return cls(
            label=obj["label"],
            architecture=obj.get("architecture", MISSING),
            parameters=obj.get("parameters", MISSING),
            meteor=obj.get("meteor"),
            rouge1=obj.get("rouge1"),
            bertscore=obj.get("bertscore"),
            bleu=obj.get("bleu"),
            inference_time=float(obj.get("inference_time", 0.0)),
            sample_count=int(obj.get("sample_count", 0)),
            training_time=obj.get("training_time"),
        )


def _metric(value: float | None) -> str:
    return MISSING if value is None else f"{value:.4f}"


def _seconds(value: float | None, grouped: bool) -> str:
    if value is None:
        return MISSING
    whole = int(math.floor(value + 0.5))
    return f"{whole:,}" if grouped else str(whole)


def _cells(row: ResultsRow, grouped: bool) -> list[str]:
    return [
        row.label,
        row.architecture,
        row.parameters,
        *(_metric(getattr(row, name)) for name, _ in METRIC_COLUMNS),
        _seconds(row.training_time, grouped),
        _seconds(row.inference_time, grouped),
        str(row.sample_count),
    ]


def column_maxima(rows: Sequence[ResultsRow]) -> dict[str, float]:
    """Best value per metric column, compared at display precision."""
    best = {}
    for name, _ in METRIC_COLUMNS:
        values = [round(getattr(r, name), 4) for r in rows if getattr(r, name) is not None]
        if values:
            best[name] = max(values)
    return best


def render_markdown(rows: Sequence[ResultsRow]) -> str:
    best = column_maxima(rows)
    lines = [
        "| " + " | ".join(HEADER) + " |",
        "|" + "|".join([":---", ":---", "---:"] + ["---:"] * (len(HEADER) - 3)) + "|",
    ]
    offset = 3
    for row in rows:
        cells = _cells(row, grouped=True)
        for k, (name, _) in enumerate(METRIC_COLUMNS):
            value = getattr(row, name)
            if value is not None and round(value, 4) == best.get(name):
                cells[offset + k] = f"**{cells[offset + k]}**"
        lines.append("| " + " | ".join(c.replace("|", "\\|") for c in cells) + " |")
    return "\n".join(lines) + "\n"


def render_csv(rows: Sequence[ResultsRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for row in rows:
        writer.writerow(_cells(row, grouped=False))
    return buf.getvalue()


def render_json(rows: Sequence[ResultsRow]) -> str:
    best = column_maxima(rows)
    payload = {
        "columns": list(HEADER),
        "rows": [r.to_json() for r in rows],
        "best": best,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def render_table(rows: Sequence[ResultsRow], format: str = "markdown") -> str:
    if not rows:
        raise ReportError("no results rows to render")
    renderers = {"markdown": render_markdown, "csv": render_csv, "json": render_json}
    try:
        return renderers[format](rows)
    except KeyError:
        raise ReportError(f"unknown report format {format!r}") from None


def save_figure(rows: Sequence[ResultsRow], path: str | os.PathLike) -> Path:
    """Grouped bar chart of the metric columns, one group per model."""
    if not rows:
        raise ReportError("no results rows to plot")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    metrics = [(n, t) for n, t in METRIC_COLUMNS if any(getattr(r, n) is not None for r in rows)]
    width = 0.8 / max(1, len(metrics))
    fig, ax = plt.subplots(figsize=(max(5.5, 1.6 * len(rows) + 2), 3.4))
    for k, (name, title) in enumerate(metrics):
        xs = [i + (k - (len(metrics) - 1) / 2) * width for i in range(len(rows))]
        ys = [getattr(r, name) or 0.0 for r in rows]
        ax.bar(xs, ys, width=width, label=title)
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels([r.label for r in rows], rotation=20, ha="right")
    ax.set_ylim(0, 1)
    ax.set_ylabel("score")
    ax.legend(frameon=False, fontsize=8, ncol=len(metrics), loc="lower center", bbox_to_anchor=(0.5, 1.0))
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def load_rows(paths: Sequence[str | os.PathLike]) -> list[ResultsRow]:
    """Rows from ``row.json`` files or ``results.json`` reports."""
    rows = []
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        if isinstance(obj, dict) and "rows" in obj:
            rows.extend(ResultsRow.from_json(r) for r in obj["rows"])
        elif isinstance(obj, list):
            rows.extend(ResultsRow.from_json(r) for r in obj)
        else:
            rows.append(ResultsRow.from_json(obj))
    return rows
