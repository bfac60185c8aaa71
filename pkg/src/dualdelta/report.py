"""Report assembly and rendering: JSON summary, CSV deltas, SVG plots.

Output bytes are deterministic for identical inputs once timing fields are
suppressed: floats are serialized with shortest-round-trip repr, JSON keys
are sorted, and the SVGs are hand-built markup with fixed-precision
coordinates.  Files are written atomically (temp file + rename).
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .harness import ExperimentConfig, RunMetadata
from .stats import DeltaDistribution, DescriptiveSummary, describe, _quantile_sorted
from .verdict import Verdict, compare_summaries

__all__ = [
    "SCHEMA_VERSION",
    "HistogramPair",
    "Report",
    "histogram_shared_bins",
    "qq_points",
    "scatter_points",
    "build_report",
    "render_report",
]

SCHEMA_VERSION = "1"

RENDER_FORMATS = ("json", "csv", "svg")


@dataclass(frozen=True)
class HistogramPair:
    """Counts of both samples over one shared set of bin edges."""

    bin_edges: tuple[float, ...]
    counts_1: tuple[int, ...]
    counts_2: tuple[int, ...]


def histogram_shared_bins(d1, d2, nbins: int = 100) -> HistogramPair:
    """Uniform bins spanning the combined range of both samples.

    Half-open bins with the last bin closed.  A degenerate combined range
    (all values equal) collapses to a single bin widened by one machine
    epsilon so it can hold everything.
    """
    v1 = np.asarray(getattr(d1, "values", d1), dtype=np.float64)
    v2 = np.asarray(getattr(d2, "values", d2), dtype=np.float64)
    if v1.size == 0 or v2.size == 0:
        raise ValueError("empty input")
    if nbins < 1:
        raise ValueError(f"nbins must be >= 1, got {nbins}")
    lo = float(min(v1.min(), v2.min()))
    hi = float(max(v1.max(), v2.max()))
    if lo == hi:
        width = max(abs(lo), 1.0) * 2.0 ** -52
        edges = np.array([lo, lo + width])
    else:
        edges = np.linspace(lo, hi, nbins + 1)
        if not np.all(np.diff(edges) > 0):
            # range too narrow for the requested bin count
            edges = np.array([lo, hi])
    c1, _ = np.histogram(v1, bins=edges)
    c2, _ = np.histogram(v2, bins=edges)
    return HistogramPair(
        tuple(float(e) for e in edges),
        tuple(int(c) for c in c1),
        tuple(int(c) for c in c2),
    )


def qq_points(d1, d2) -> tuple[tuple[float, float], ...]:
    """Quantile pairs at levels k/(m+1), k = 1..m, m = min(n1, n2)."""
    v1 = np.sort(np.asarray(getattr(d1, "values", d1), dtype=np.float64))
    v2 = np.sort(np.asarray(getattr(d2, "values", d2), dtype=np.float64))
    if v1.size == 0 or v2.size == 0:
        raise ValueError("empty input")
    m = min(v1.size, v2.size)
    pts = []
    for k in range(1, m + 1):
        q = k / (m + 1)
        pts.append((_quantile_sorted(v1, q), _quantile_sorted(v2, q)))
    return tuple(pts)


def scatter_points(d1, d2) -> tuple[tuple[float, float], ...]:
    """Per-trial (delta_1, delta_2) pairs; exposes correlated error behavior."""
    v1 = getattr(d1, "values", d1)
    v2 = getattr(d2, "values", d2)
    if len(v1) != len(v2):
        raise ValueError("scatter requires paired distributions of equal length")
    return tuple((float(a), float(b)) for a, b in zip(v1, v2))


@dataclass(frozen=True)
class Report:
    config: dict
    config_hash: str
    metric: str
    labels: tuple[str, str]
    summary_1: DescriptiveSummary
    summary_2: DescriptiveSummary
    comparison: dict
    verdict: Verdict
    histogram: HistogramPair
    qq: tuple[tuple[float, float], ...]
    scatter: tuple[tuple[float, float], ...]
    deltas_1: tuple[float, ...]
    deltas_2: tuple[float, ...]
    run: RunMetadata


def build_report(
    cfg: ExperimentConfig,
    d1: DeltaDistribution,
    d2: DeltaDistribution,
    meta: RunMetadata,
    verdict: Verdict,
    nbins: int = 100,
) -> Report:
    return Report(
        config=cfg.as_dict(),
        config_hash=meta.config_hash,
        metric=cfg.metric,
        labels=(d1.label, d2.label),
        summary_1=describe(d1),
        summary_2=describe(d2),
        comparison=compare_summaries(describe(d1), describe(d2)),
        verdict=verdict,
        histogram=histogram_shared_bins(d1, d2, nbins),
        qq=qq_points(d1, d2),
        scatter=scatter_points(d1, d2),
        deltas_1=d1.values,
        deltas_2=d2.values,
        run=meta,
    )


def _sanitize(obj):
    """Make a report dict strict-JSON safe: infinities become markers."""
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    return obj


def report_to_dict(report: Report, include_timing: bool = True) -> dict:
    return _sanitize({
        "schema_version": SCHEMA_VERSION,
        "config": report.config,
        "config_hash": report.config_hash,
        "metric": report.metric,
        "labels": {"impl_1": report.labels[0], "impl_2": report.labels[1]},
        "summary_1": report.summary_1.as_dict(),
        "summary_2": report.summary_2.as_dict(),
        "comparison": report.comparison,
        "verdict": report.verdict.as_dict(),
        "histogram": {
            "bin_edges": list(report.histogram.bin_edges),
            "counts_1": list(report.histogram.counts_1),
            "counts_2": list(report.histogram.counts_2),
        },
        "qq_points": [list(p) for p in report.qq],
        "scatter_points": [list(p) for p in report.scatter],
        "run": report.run.as_dict(include_timing=include_timing),
    })


def _atomic_write(path: Path, data: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(data, encoding="utf-8")
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from None


def _deltas_csv(report: Report) -> str:
    lines = ["trial,delta_1,delta_2"]
    for trial, a, b in zip(report.run.kept_trials, report.deltas_1, report.deltas_2):
        lines.append(f"{trial},{a!r},{b!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# hand-built SVG (no plotting dependency: deterministic bytes, zero assets)

_W, _H = 640, 480
_ML, _MR, _MT, _MB = 60, 15, 30, 45
_PW, _PH = _W - _ML - _MR, _H - _MT - _MB
_C1, _C2 = "#3b76c4", "#e08537"


def _f(v: float) -> str:
    return f"{v:.3f}"


def _svg_open(title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.0f}" y="20" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">{title}</text>',
    ]


def _axes(parts: list[str], xlab: str, ylab: str) -> None:
    parts.append(f'<rect x="{_ML}" y="{_MT}" width="{_PW}" height="{_PH}" fill="none" '
                 'stroke="#444" stroke-width="1"/>')
    parts.append(f'<text x="{_ML + _PW / 2:.0f}" y="{_H - 10}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12">{xlab}</text>')
    parts.append(f'<text x="15" y="{_MT + _PH / 2:.0f}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12" '
                 f'transform="rotate(-90 15 {_MT + _PH / 2:.0f})">{ylab}</text>')


def _ticks(parts: list[str], lo: float, hi: float, axis: str) -> None:
    span = hi - lo
    for i in range(5):
        frac = i / 4
        val = lo + frac * span
        if axis == "x":
            px = _ML + frac * _PW
            parts.append(f'<line x1="{_f(px)}" y1="{_MT + _PH}" x2="{_f(px)}" '
                         f'y2="{_MT + _PH + 4}" stroke="#444"/>')
            parts.append(f'<text x="{_f(px)}" y="{_MT + _PH + 18}" text-anchor="middle" '
                         f'font-family="sans-serif" font-size="10">{val:.3g}</text>')
        else:
            py = _MT + _PH - frac * _PH
            parts.append(f'<line x1="{_ML - 4}" y1="{_f(py)}" x2="{_ML}" '
                         f'y2="{_f(py)}" stroke="#444"/>')
            parts.append(f'<text x="{_ML - 7}" y="{_f(py + 3)}" text-anchor="end" '
                         f'font-family="sans-serif" font-size="10">{val:.3g}</text>')


def _legend(parts: list[str], labels: tuple[str, str]) -> None:
    y = _MT + 12
    for color, label in ((_C1, labels[0]), (_C2, labels[1])):
        parts.append(f'<rect x="{_ML + 8}" y="{y - 9}" width="12" height="12" '
                     f'fill="{color}" fill-opacity="0.55"/>')
        parts.append(f'<text x="{_ML + 25}" y="{y + 1}" font-family="sans-serif" '
                     f'font-size="11">{_escape(label)}</text>')
        y += 18


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _histogram_svg(report: Report) -> str:
    h = report.histogram
    edges = h.bin_edges
    lo, hi = edges[0], edges[-1]
    span = (hi - lo) or 1.0
    peak = max(1, max(h.counts_1), max(h.counts_2))
    parts = _svg_open("error distributions (shared bins)")
    _axes(parts, f"{report.metric} error", "trials per bin")
    _ticks(parts, lo, hi, "x")
    _ticks(parts, 0, peak, "y")
    for counts, color in ((h.counts_1, _C1), (h.counts_2, _C2)):
        for i, c in enumerate(counts):
            if c == 0:
                continue
            x0 = _ML + (edges[i] - lo) / span * _PW
            x1 = _ML + (edges[i + 1] - lo) / span * _PW
            bh = c / peak * _PH
            parts.append(f'<rect x="{_f(x0)}" y="{_f(_MT + _PH - bh)}" '
                         f'width="{_f(max(x1 - x0, 0.5))}" height="{_f(bh)}" '
                         f'fill="{color}" fill-opacity="0.55"/>')
    _legend(parts, report.labels)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _points_svg(title: str, xlab: str, ylab: str, pts, labels,
                diagonal: bool = True) -> str:
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    lo = min(min(xs), min(ys))
    hi = max(max(xs), max(ys))
    span = (hi - lo) or 1.0

    def px(v: float) -> float:
        return _ML + (v - lo) / span * _PW

    def py(v: float) -> float:
        return _MT + _PH - (v - lo) / span * _PH

    parts = _svg_open(title)
    _axes(parts, xlab, ylab)
    _ticks(parts, lo, hi, "x")
    _ticks(parts, lo, hi, "y")
    if diagonal:
        parts.append(f'<line x1="{_f(px(lo))}" y1="{_f(py(lo))}" x2="{_f(px(hi))}" '
                     f'y2="{_f(py(hi))}" stroke="#999" stroke-dasharray="4 3"/>')
    for x, y in pts:
        parts.append(f'<circle cx="{_f(px(x))}" cy="{_f(py(y))}" r="2.2" '
                     f'fill="{_C1}" fill-opacity="0.6"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_report(
    report: Report,
    out_dir,
    formats=("json", "csv", "svg"),
    include_timing: bool = True,
) -> dict[str, Path]:
    """Write the requested artifact files; returns {name: path}."""
    formats = set(formats)
    unknown = formats - set(RENDER_FORMATS)
    if unknown:
        raise ValueError(f"unknown render formats: {sorted(unknown)}")
    out = Path(out_dir)
    if formats:
        out.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    if "json" in formats:
        payload = json.dumps(report_to_dict(report, include_timing=include_timing),
                             sort_keys=True, indent=2, allow_nan=False) + "\n"
        path = out / "report.json"
        _atomic_write(path, payload)
        written["report.json"] = path
    if "csv" in formats:
        path = out / "deltas.csv"
        _atomic_write(path, _deltas_csv(report))
        written["deltas.csv"] = path
    if "svg" in formats:
        labels = report.labels
        svgs = {
            "histogram.svg": _histogram_svg(report),
            "qq.svg": _points_svg(
                "quantile-quantile", f"{labels[0]} quantiles", f"{labels[1]} quantiles",
                report.qq, labels),
            "scatter.svg": _points_svg(
                "paired per-trial errors", f"{labels[0]} delta", f"{labels[1]} delta",
                report.scatter, labels),
        }
        for name, text in svgs.items():
            path = out / name
            _atomic_write(path, text)
            written[name] = path
    return written
