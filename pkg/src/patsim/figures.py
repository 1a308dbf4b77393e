"""Figure-ready CSV tables and self-contained SVG charts.

SVG is written directly (no charting dependency); each figure bundle is a CSV
table plus one SVG laying out left/right panels. Panels with no data render
a "no data" annotation instead of axes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from . import ipc
from .features import FeatureTable, yearly_lag_stats
from .scoring import yearly_similarity_stats

_PALETTE = ["#1f6fb4", "#d1495b", "#3c8d5a", "#8a5fbf", "#c98a2b"]

_PANEL_W, _PANEL_H = 420, 300
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 52, 14, 30, 40


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray


@dataclass
class Panel:
    title: str
    xlabel: str = ""
    ylabel: str = ""
    lines: list[Series] = field(default_factory=list)
    bars: tuple[np.ndarray, np.ndarray] | None = None  # (edges, counts)

    def is_empty(self) -> bool:
        has_line = any(s.x.size for s in self.lines)
        has_bars = self.bars is not None and self.bars[1].size and self.bars[1].sum() > 0
        return not (has_line or has_bars)


def _limits(panel: Panel) -> tuple[float, float, float, float]:
    xs, ys = [], []
    for s in panel.lines:
        xs.append(s.x)
        ys.append(s.y)
    if panel.bars is not None:
        edges, counts = panel.bars
        xs.append(edges)
        ys.append(counts)
        ys.append(np.zeros(1))
    x = np.concatenate(xs) if xs else np.array([0.0, 1.0])
    y = np.concatenate(ys) if ys else np.array([0.0, 1.0])
    x_lo, x_hi = float(np.min(x)), float(np.max(x))
    y_lo, y_hi = float(np.min(y)), float(np.max(y))
    if x_lo == x_hi:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_lo == y_hi:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad = 0.04 * (y_hi - y_lo)
    return x_lo, x_hi, y_lo - pad, y_hi + pad


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _render_panel(panel: Panel, ox: float, out: list[str]) -> None:
    out.append(f'<g transform="translate({ox},0)">')
    out.append(
        f'<text x="{_PANEL_W / 2}" y="18" text-anchor="middle" '
        f'font-size="13" font-weight="bold">{escape(panel.title)}</text>'
    )
    if panel.is_empty():
        out.append(
            f'<text x="{_PANEL_W / 2}" y="{_PANEL_H / 2}" text-anchor="middle" '
            f'font-size="14" fill="#777">no data</text>'
        )
        out.append("</g>")
        return
    x_lo, x_hi, y_lo, y_hi = _limits(panel)
    plot_w = _PANEL_W - _MARGIN_L - _MARGIN_R
    plot_h = _PANEL_H - _MARGIN_T - _MARGIN_B

    def px(x: float) -> float:
        return _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return _MARGIN_T + (y_hi - y) / (y_hi - y_lo) * plot_h

    out.append(
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#333" stroke-width="1"/>'
    )
    for tick in np.linspace(x_lo, x_hi, 5):
        out.append(
            f'<line x1="{px(tick):.2f}" y1="{_MARGIN_T + plot_h}" '
            f'x2="{px(tick):.2f}" y2="{_MARGIN_T + plot_h + 4}" stroke="#333"/>'
        )
        out.append(
            f'<text x="{px(tick):.2f}" y="{_MARGIN_T + plot_h + 16}" '
            f'text-anchor="middle" font-size="10">{_fmt(tick)}</text>'
        )
    for tick in np.linspace(y_lo, y_hi, 5):
        out.append(
            f'<line x1="{_MARGIN_L - 4}" y1="{py(tick):.2f}" '
            f'x2="{_MARGIN_L}" y2="{py(tick):.2f}" stroke="#333"/>'
        )
        out.append(
            f'<text x="{_MARGIN_L - 7}" y="{py(tick):.2f}" text-anchor="end" '
            f'dominant-baseline="middle" font-size="10">{_fmt(tick)}</text>'
        )
    if panel.xlabel:
        out.append(
            f'<text x="{_MARGIN_L + plot_w / 2}" y="{_PANEL_H - 8}" '
            f'text-anchor="middle" font-size="11">{escape(panel.xlabel)}</text>'
        )
    if panel.ylabel:
        cy = _MARGIN_T + plot_h / 2
        out.append(
            f'<text x="13" y="{cy}" text-anchor="middle" font-size="11" '
            f'transform="rotate(-90 13 {cy})">{escape(panel.ylabel)}</text>'
        )
    if panel.bars is not None:
        edges, counts = panel.bars
        base = py(max(0.0, y_lo))
        for i, count in enumerate(counts):
            x0, x1 = px(float(edges[i])), px(float(edges[i + 1]))
            top = py(float(count))
            out.append(
                f'<rect x="{x0:.2f}" y="{top:.2f}" width="{max(x1 - x0, 0.5):.2f}" '
                f'height="{max(base - top, 0.0):.2f}" fill="{_PALETTE[0]}" '
                f'fill-opacity="0.75" stroke="none"/>'
            )
    for idx, series in enumerate(panel.lines):
        color = _PALETTE[idx % len(_PALETTE)]
        points = " ".join(
            f"{px(float(x)):.2f},{py(float(y)):.2f}" for x, y in zip(series.x, series.y)
        )
        out.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.6"/>'
        )
        if series.label:
            ly = _MARGIN_T + 14 + 14 * idx
            lx = _MARGIN_L + plot_w - 110
            out.append(
                f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" '
                f'stroke="{color}" stroke-width="2"/>'
            )
            out.append(
                f'<text x="{lx + 22}" y="{ly}" font-size="10">{escape(series.label)}</text>'
            )
    out.append("</g>")


def render_figure(panels: list[Panel], path) -> Path:
    """Write a self-contained SVG laying the panels out left to right."""
    width = _PANEL_W * max(len(panels), 1)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{_PANEL_H}" '
        f'viewBox="0 0 {width} {_PANEL_H}" font-family="sans-serif">',
        f'<rect x="0" y="0" width="{width}" height="{_PANEL_H}" fill="white"/>',
    ]
    for i, panel in enumerate(panels):
        _render_panel(panel, i * _PANEL_W, out)
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
    return Path(path)


def _write_csv(path, header, rows) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)
    return Path(path)


def within_counts_bundle(corpus, outdir) -> list[Path]:
    """Within vs outside citation counts per year at class and subclass level."""
    outdir = Path(outdir)
    rows = []
    panels = []
    for level in (ipc.IpcLevel.CLASS, ipc.IpcLevel.SUBCLASS):
        counts = ipc.within_level_citation_counts(corpus, level)
        rows.extend((y, level.value, w, o, e) for y, w, o, e in counts)
        years = np.array([r[0] for r in counts], dtype=float)
        panels.append(
            Panel(
                title=f"Citations within the same {level.value}",
                xlabel="sender grant year",
                ylabel="citations",
                lines=[
                    Series("within", years, np.array([r[1] for r in counts], dtype=float)),
                    Series("outside", years, np.array([r[2] for r in counts], dtype=float)),
                ],
            )
        )
    csv_path = _write_csv(
        outdir / "fig1_within_counts.csv",
        ["year", "level", "within", "outside", "excluded"],
        rows,
    )
    svg_path = render_figure(panels, outdir / "fig1_within_counts.svg")
    return [csv_path, svg_path]


def similarity_bundle(scored_pairs, corpus, outdir) -> list[Path]:
    """Similarity distribution and yearly average (histogram + line)."""
    outdir = Path(outdir)
    values = np.array([v for _, v in scored_pairs], dtype=float)
    edges = np.linspace(-100.0, 100.0, 81)
    counts = (
        np.histogram(values, bins=edges)[0] if values.size else np.zeros(80, dtype=int)
    )
    hist_csv = _write_csv(
        outdir / "fig2_similarity_hist.csv",
        ["bin_left", "bin_right", "count"],
        [
            (repr(float(edges[i])), repr(float(edges[i + 1])), int(c))
            for i, c in enumerate(counts)
        ],
    )
    yearly = yearly_similarity_stats(scored_pairs, corpus)
    yearly_csv = _write_csv(
        outdir / "fig2_similarity_yearly.csv",
        ["year", "mean", "count", "stddev"],
        [(y, repr(m), c, repr(s)) for y, m, c, s in yearly],
    )
    panels = [
        Panel(
            title="Similarity distribution",
            xlabel="similarity",
            ylabel="citations",
            bars=(edges, counts),
        ),
        Panel(
            title="Average citation similarity per year",
            xlabel="sender grant year",
            ylabel="mean similarity",
            lines=[
                Series(
                    "",
                    np.array([y for y, *_ in yearly], dtype=float),
                    np.array([m for _, m, *_ in yearly], dtype=float),
                )
            ],
        ),
    ]
    svg_path = render_figure(panels, outdir / "fig2_similarity.svg")
    return [hist_csv, yearly_csv, svg_path]


def lag_bundle(table: FeatureTable, outdir) -> list[Path]:
    """Temporal lag distribution and yearly average lag."""
    outdir = Path(outdir)
    lags = table.column("temporal_diff_days") if table.n else np.array([])
    if lags.size:
        edges = np.linspace(float(lags.min()), float(lags.max()) + 1.0, 61)
        counts = np.histogram(lags, bins=edges)[0]
    else:
        edges = np.linspace(0.0, 1.0, 61)
        counts = np.zeros(60, dtype=int)
    hist_csv = _write_csv(
        outdir / "fig3_lag_hist.csv",
        ["bin_left", "bin_right", "count"],
        [
            (repr(float(edges[i])), repr(float(edges[i + 1])), int(c))
            for i, c in enumerate(counts)
        ],
    )
    yearly = yearly_lag_stats(table) if table.n else []
    yearly_csv = _write_csv(
        outdir / "fig3_lag_yearly.csv",
        ["year", "mean_lag_days", "count"],
        [(y, repr(m), c) for y, m, c in yearly],
    )
    panels = [
        Panel(
            title="Temporal lag distribution",
            xlabel="lag (days)",
            ylabel="citations",
            bars=(edges, counts),
        ),
        Panel(
            title="Average temporal lag by year",
            xlabel="sender grant year",
            ylabel="mean lag (days)",
            lines=[
                Series(
                    "",
                    np.array([y for y, *_ in yearly], dtype=float),
                    np.array([m for _, m, *_ in yearly], dtype=float),
                )
            ],
        ),
    ]
    svg_path = render_figure(panels, outdir / "fig3_lag.svg")
    return [hist_csv, yearly_csv, svg_path]


def partials_bundle(partials_by_model: dict[int, dict[str, dict]], outdir) -> list[Path]:
    """Per-model partial-effect curves, one panel per smooth term.

    partials_by_model maps model level -> term -> {"grid", "f_hat"} arrays.
    """
    outdir = Path(outdir)
    rows = []
    terms: list[str] = []
    for level in sorted(partials_by_model):
        for term, data in partials_by_model[level].items():
            if term not in terms:
                terms.append(term)
            for g, f, lo, hi in zip(
                data["grid"], data["f_hat"], data["se_lower"], data["se_upper"]
            ):
                rows.append((level, term, repr(float(g)), repr(float(f)),
                             repr(float(lo)), repr(float(hi))))
    csv_path = _write_csv(
        outdir / "fig4_partials.csv",
        ["model_level", "term", "grid", "f_hat", "se_lower", "se_upper"],
        rows,
    )
    panels = []
    for term in terms:
        lines = []
        for level in sorted(partials_by_model):
            data = partials_by_model[level].get(term)
            if data is None:
                continue
            lines.append(
                Series(
                    f"model {level}",
                    np.asarray(data["grid"], dtype=float),
                    np.asarray(data["f_hat"], dtype=float),
                )
            )
        panels.append(
            Panel(title=f"Smooth effect: {term}", xlabel=term, ylabel="partial effect",
                  lines=lines)
        )
    if not panels:
        panels = [Panel(title="Smooth effects")]
    svg_path = render_figure(panels, outdir / "fig4_partials.svg")
    return [csv_path, svg_path]
