"""Structured report files, CSV tables and the barcode plot."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from xml.sax.saxutils import escape

from .config import SCHEMA_VERSION


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path, payload: dict, config_hash: str) -> Path:
    body = {"schema_version": SCHEMA_VERSION, "config_hash": config_hash, **payload}
    p = Path(path)
    p.write_text(dumps(body))
    return p


def write_csv(path, header: list, rows) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    p = Path(path)
    p.write_text(buf.getvalue())
    return p


def bars_from_table(table: list) -> list[tuple]:
    """Bars ``(birth, death)`` (1-based stages, death None if alive at J).

    A bar alive exactly on stages i..j is counted by inclusion-exclusion on
    the persistent ranks: r(i,j) - r(i-1,j) - r(i,j+1) + r(i-1,j+1).
    """
    J = len(table)

    def r(i, j):
        if i < 1 or j > J or i > j:
            return 0
        return table[i - 1][j - 1]

    bars = []
    for i in range(1, J + 1):
        for j in range(i, J + 1):
            c = r(i, j) - r(i - 1, j) - r(i, j + 1) + r(i - 1, j + 1)
            bars += [(i, None if j == J else j + 1)] * max(c, 0)
    return bars


def barcode_svg(tracks: list[tuple], horizon: int, title: str = "") -> str:
    """One horizontal track per degree; ``tracks`` holds (label, bars)."""
    left, step, bar_h, gap, top = 70, 60, 10, 6, 30
    width = left + step * max(horizon, 1) + 40
    heights = [max(len(b), 1) * (bar_h + gap) + 20 for _, b in tracks]
    height = top + sum(heights) + 30
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="11">',
           f'<text x="{left}" y="16">{escape(title)}</text>']
    for s in range(1, horizon + 1):
        x = left + step * (s - 1)
        out.append(f'<line x1="{x}" y1="{top - 6}" x2="{x}" y2="{height - 24}" stroke="#ddd"/>')
        out.append(f'<text x="{x}" y="{height - 10}" text-anchor="middle">{s}</text>')
    y = top
    for (label, bars), h in zip(tracks, heights):
        out.append(f'<text x="8" y="{y + 14}">{escape(label)}</text>')
        if not bars:
            out.append(f'<text x="{left}" y="{y + 14}" fill="#999">(empty)</text>')
        for n, (b, d) in enumerate(bars):
            by = y + 4 + n * (bar_h + gap)
            x0 = left + step * (b - 1)
            x1 = left + step * ((d if d is not None else horizon + 1) - 1) - (0 if d else step // 2)
            out.append(f'<rect x="{x0}" y="{by}" width="{max(x1 - x0, 2)}" height="{bar_h}" fill="#36c"/>')
            if d is None:
                out.append(f'<polygon points="{x1},{by - 2} {x1 + 10},{by + bar_h / 2} {x1},{by + bar_h + 2}" '
                           'fill="#36c"/>')
        y += h
        out.append(f'<line x1="0" y1="{y - 4}" x2="{width}" y2="{y - 4}" stroke="#eee"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_barcode_plot(limit_reports: dict, path, title: str = "persistent ranks") -> Path:
    """Barcode of every degree (``limit_reports``: degree -> LimitReport)."""
    horizon = max((len(r.ranks) for r in limit_reports.values()), default=0)
    tracks = [(f"H_{k}", bars_from_table(limit_reports[k].table)) for k in sorted(limit_reports)]
    p = Path(path)
    p.write_text(barcode_svg(tracks, horizon, title))
    return p
