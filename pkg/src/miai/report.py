"""Files written by a protocol run: CSV tables, ROC points, report.json and a bar chart."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .agreement import theory_table
from .dataset import FEATURE_NAMES
from .models import ModelKind, save_model
from .pipeline import RunReport, report_metadata

REPORT_FORMAT = "miai.report"
REPORT_VERSION = 1

_SIGN_TEXT = {1: "+", -1: "-", 0: "0"}
_SIGN_VALUE = {v: k for k, v in _SIGN_TEXT.items()}


def _write_rows(path: Path, header, rows) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _kinds(report: RunReport) -> list[ModelKind]:
    return list(report.kinds)


def write_metric_table(path, label: str, values: dict[ModelKind, float]) -> None:
    kinds = list(values)
    _write_rows(Path(path), ["metric"] + [k.value for k in kinds], [[label] + [repr(float(values[k])) for k in kinds]])


def write_feature_table(path, matrix: dict[ModelKind, np.ndarray], feature_names=FEATURE_NAMES) -> None:
    kinds = list(matrix)
    rows = [[f] + [repr(float(matrix[k][i])) for k in kinds] for i, f in enumerate(feature_names)]
    _write_rows(Path(path), ["feature"] + [k.value for k in kinds], rows)


def write_sign_table(path, report: RunReport, method: str) -> None:
    kinds = _kinds(report)
    attr = "lime_sign" if method == "lime" else "shap_sign"
    theory = {s.name: s.theory_sign for s in theory_table()}
    rows = []
    for i, f in enumerate(FEATURE_NAMES):
        row = [f, _SIGN_TEXT[theory[f]]]
        row += [_SIGN_TEXT[getattr(report.miai[k].sign_table.rows[i], attr)] for k in kinds]
        rows.append(row)
    _write_rows(Path(path), ["feature", "theory"] + [k.value for k in kinds], rows)


def read_table(path) -> tuple[list[str], dict[str, list]]:
    """Parse a table CSV back into ``(row_labels, {column: values})``.

    Numeric cells become floats and sign cells become ``+1/-1/0``.
    """
    with Path(path).open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    labels = [r[0] for r in body]
    cols = {}
    for j, name in enumerate(header[1:], start=1):
        cells = [r[j] for r in body]
        cols[name] = [_SIGN_VALUE[c] if c in _SIGN_VALUE else float(c) for c in cells]
    return labels, cols


def write_shap_instances(path, vectors) -> None:
    rows = (
        [i, name, repr(float(phi))]
        for i, v in enumerate(vectors)
        for name, phi in zip(v.feature_names, v.contributions)
    )
    _write_rows(Path(path), ["instance_id", "feature", "phi"], rows)


def miai_bar_svg(values: dict[str, float], width: int = 480, height: int = 320) -> str:
    """Plain SVG bar chart of MIAI per model on a fixed [-1, 1] axis."""
    left, right, top, bottom = 56, 16, 28, 40
    plot_w, plot_h = width - left - right, height - top - bottom

    def y_of(v):
        return top + (1.0 - v) / 2.0 * plot_h

    n = max(len(values), 1)
    slot = plot_w / n
    bar_w = slot * 0.6
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="14">MIAI by model</text>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
    ]
    for tick in (-1.0, -0.5, 0.0, 0.5, 1.0):
        y = y_of(tick)
        out.append(f'<line x1="{left - 4}" y1="{y:.1f}" x2="{left}" y2="{y:.1f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{y + 4:.1f}" text-anchor="end">{tick:g}</text>')
    zero = y_of(0.0)
    out.append(f'<line x1="{left}" y1="{zero:.1f}" x2="{left + plot_w}" y2="{zero:.1f}" stroke="black"/>')
    for i, (name, v) in enumerate(values.items()):
        x = left + i * slot + (slot - bar_w) / 2
        y0, y1 = sorted((zero, y_of(v)))
        label_y = y1 + 14 if v < 0 else y0 - 4
        out.append(
            f'<rect x="{x:.1f}" y="{y0:.1f}" width="{bar_w:.1f}" height="{y1 - y0:.1f}" fill="#4a78a8"/>'
        )
        out.append(f'<text x="{x + bar_w / 2:.1f}" y="{label_y:.1f}" text-anchor="middle">{v:.4f}</text>')
        out.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{top + plot_h + 18:.1f}" text-anchor="middle">{escape(name)}</text>'
        )
    out.append(
        f'<text x="14" y="{top + plot_h / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {top + plot_h / 2:.1f})">cosine(SHAP, LIME)</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def report_document(report: RunReport) -> dict:
    """The ``report.json`` payload. Wall-clock figures live only under ``timing``."""
    models = {}
    for k in _kinds(report):
        m = report.miai[k]
        models[k.value] = {
            "auc": report.roc[k].auc,
            "miai": m.miai,
            "lime_vector": dict(zip(FEATURE_NAMES, m.lime_vector.tolist())),
            "shap_vector": dict(zip(FEATURE_NAMES, m.shap_vector.tolist())),
            "lime_base_value": report.lime[k].base_value,
            "shap_base_value": report.shap[k].base_value,
            "sign_table": m.sign_table.to_dict(),
        }
    return {
        "format": REPORT_FORMAT,
        "format_version": REPORT_VERSION,
        "metadata": report_metadata(report),
        "models": models,
        "timing": {k: round(v, 3) for k, v in report.timing.items()},
    }


def deterministic_part(doc: dict) -> dict:
    """``doc`` without its timing block, for reproducibility comparisons."""
    return {k: v for k, v in doc.items() if k != "timing"}


def write_report(report: RunReport, out_dir) -> dict[str, Path]:
    """Write every output file into ``out_dir`` and return them by name."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    kinds = _kinds(report)
    written = {}

    def target(name):
        written[name] = out / name
        return written[name]

    write_metric_table(target("table2.csv"), "AUC", {k: report.roc[k].auc for k in kinds})
    write_feature_table(target("table3.csv"), {k: report.lime[k].contributions for k in kinds})
    write_feature_table(target("table4.csv"), {k: report.shap[k].contributions for k in kinds})
    write_metric_table(target("table5.csv"), "MIAI", {k: report.miai[k].miai for k in kinds})
    write_sign_table(target("table6.csv"), report, "lime")
    write_sign_table(target("table7.csv"), report, "shap")
    for k in kinds:
        tag = k.value.lower()
        report.roc[k].to_csv(target(f"roc_{tag}.csv"))
        write_shap_instances(target(f"shap_instances_{tag}.csv"), report.shap_instances[k])
        if report.config.models_dir is None:
            models_dir = out / "models"
            models_dir.mkdir(exist_ok=True)
            save_model(report.models[k], models_dir / f"{tag}.json")
            written[f"models/{tag}.json"] = models_dir / f"{tag}.json"
    target("miai_bars.svg").write_text(
        miai_bar_svg({k.value: report.miai[k].miai for k in kinds}), encoding="utf-8"
    )
    target("report.json").write_text(
        json.dumps(report_document(report), indent=2) + "\n", encoding="utf-8"
    )
    return written
