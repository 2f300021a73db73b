"""CSV and SVG output for single runs and comparisons."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional, Sequence
from xml.sax.saxutils import escape

from .metrics import COMPARED_METRICS, ComparisonTable, RoundReport, SimulationSummary, fmt

ROUNDS_COLUMNS = ["round", "alive", "residual_j", "dissipated_j", "delivered", "generated",
                  "head_count"]
COMPARISON_COLUMNS = ["protocol", "seed"] + SimulationSummary.columns()

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]


def _write_csv(path: Path, header, rows) -> Path:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def rounds_rows(reports: Sequence[RoundReport]):
    for r in reports:
        yield (r.round, r.alive, r.residual_total, r.dissipated_this_round, r.packets_delivered,
               r.packets_generated, r.head_count)


def write_reports(out_dir, summary: SimulationSummary, reports: Sequence[RoundReport],
                  label: str = "run") -> list[Path]:
    """Write ``rounds.csv``, ``summary.csv`` and, if any rounds ran, the two charts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [
        _write_csv(out / "rounds.csv", ROUNDS_COLUMNS, rounds_rows(reports)),
        _write_csv(out / "summary.csv", ["protocol"] + SimulationSummary.columns(),
                   [[label] + summary.row()] if reports else []),
    ]
    if reports:
        written += _write_charts(out, {
            label: ([r.alive for r in reports], [r.residual_total for r in reports])})
    return written


def comparison_rows(table: ComparisonTable):
    for label in table.labels:
        for seed in table.seeds:
            yield [label, seed] + table.summary(label, seed).row()
    for label in table.labels:
        yield [label, "median"] + [
            table.median(label, c) if c in COMPARED_METRICS else None
            for c in SimulationSummary.columns()]
        yield [label, "win_rate"] + [
            table.win_rate(label, c) if c in COMPARED_METRICS else None
            for c in SimulationSummary.columns()]


def write_comparison(out_dir, table: ComparisonTable) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [_write_csv(out / "comparison.csv", COMPARISON_COLUMNS, comparison_rows(table))]
    series = {lab: (table.mean_series(lab, "alive"), table.mean_series(lab, "residual"))
              for lab in table.labels}
    if any(a for a, _ in series.values()):
        written += _write_charts(out, series)
    return written


def _write_charts(out: Path, series: dict[str, tuple[list, list]]) -> list[Path]:
    alive = {k: v[0] for k, v in series.items()}
    residual = {k: v[1] for k, v in series.items()}
    paths = []
    for name, data, ylabel in (("alive.svg", alive, "alive nodes"),
                               ("residual.svg", residual, "residual energy (J)")):
        path = out / name
        try:
            path.write_text(line_chart_svg(data, "round", ylabel), encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
        paths.append(path)
    return paths


def line_chart_svg(series: dict[str, Sequence[float]], xlabel: str, ylabel: str,
                   width: int = 640, height: int = 400, title: Optional[str] = None) -> str:
    """Minimal static polyline chart, one line per series."""
    left, right, top, bottom = 60, 150, 20, 45
    pw, ph = width - left - right, height - top - bottom
    n = max((len(s) for s in series.values()), default=0)
    ymax = max((max(s) for s in series.values() if len(s)), default=1.0) or 1.0
    xmax = max(n - 1, 1)

    def sx(i):
        return left + pw * i / xmax

    def sy(v):
        return top + ph * (1 - v / ymax)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    if title:
        parts.append(f'<text x="{left}" y="{top - 6}">{escape(title)}</text>')
    for k in range(5):
        v = ymax * k / 4
        parts.append(f'<text x="{left - 6}" y="{sy(v) + 4:.1f}" text-anchor="end">{v:.4g}</text>')
        x = xmax * k / 4
        parts.append(f'<text x="{sx(x):.1f}" y="{top + ph + 15}" text-anchor="middle">{x:.0f}</text>')
    parts.append(f'<text x="{left + pw / 2}" y="{height - 8}" text-anchor="middle">'
                 f'{escape(xlabel)}</text>')
    parts.append(f'<text x="14" y="{top + ph / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 14 {top + ph / 2})">{escape(ylabel)}</text>')
    for idx, (label, ys) in enumerate(series.items()):
        color = _PALETTE[idx % len(_PALETTE)]
        pts = " ".join(f"{sx(i):.2f},{sy(v):.2f}" for i, v in enumerate(ys))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 14 + 16 * idx
        parts.append(f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 28}" '
                     f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{left + pw + 32}" y="{ly}">{escape(label)}</text>')
    parts.append("</svg>\n")
    return "\n".join(parts)
