"""CSV and self-contained SVG output."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return int(x)
    return x


def write_csv(path: str | Path, rows: Iterable[Sequence]) -> Path:
    """RFC-4180 CSV (CRLF line endings, minimal quoting); floats round-trip exactly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        for row in rows:
            w.writerow([_cell(x) for x in row])
    return path


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


# -- SVG -----------------------------------------------------------------------

W, H = 560, 360
LEFT, RIGHT, TOP, BOTTOM = 64, 16, 28, 44


def _scale(lo: float, hi: float, a: float, b: float):
    if hi == lo:
        hi = lo + 1.0
    return lambda v: a + (v - lo) * (b - a) / (hi - lo)


def _frame(title: str, xlabel: str, ylabel: str, xs, ys, body: list[str], xticks: bool = True) -> str:
    x0, x1 = float(np.min(xs)), float(np.max(xs))
    y0, y1 = float(np.min(ys)), float(np.max(ys))
    out = io.StringIO()
    out.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">\n')
    out.write(f'<rect width="{W}" height="{H}" fill="white"/>\n')
    out.write(f'<text x="{W / 2}" y="16" text-anchor="middle" font-size="13">{escape(title)}</text>\n')
    out.write(f'<line x1="{LEFT}" y1="{H - BOTTOM}" x2="{W - RIGHT}" y2="{H - BOTTOM}" stroke="black"/>\n')
    out.write(f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{H - BOTTOM}" stroke="black"/>\n')
    for v, label in ((x0, f"{x0:.3g}"), (x1, f"{x1:.3g}")) if xticks else ():
        sx = _scale(x0, x1, LEFT, W - RIGHT)(v)
        out.write(f'<text x="{sx:.1f}" y="{H - BOTTOM + 14}" text-anchor="middle">{label}</text>\n')
    for v in (y0, y1):
        sy = _scale(y0, y1, H - BOTTOM, TOP)(v)
        out.write(f'<text x="{LEFT - 4}" y="{sy + 4:.1f}" text-anchor="end">{v:.3g}</text>\n')
    out.write(f'<text x="{W / 2}" y="{H - 8}" text-anchor="middle">{escape(xlabel)}</text>\n')
    out.write(f'<text x="14" y="{H / 2}" text-anchor="middle" transform="rotate(-90 14 {H / 2})">{escape(ylabel)}</text>\n')
    out.writelines(line + "\n" for line in body)
    out.write("</svg>\n")
    return out.getvalue()


def line_plot(
    path: str | Path,
    series: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray | None]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
) -> Path:
    """``series`` maps a label to ``(x, y, band)``; ``band`` is ``(len(x), 2)`` or None."""
    xs = np.concatenate([np.asarray(x, float) for x, _, _ in series.values()])
    ys = [np.asarray(y, float) for _, y, _ in series.values()]
    ys += [np.asarray(b, float).ravel() for _, _, b in series.values() if b is not None]
    ys = np.concatenate(ys)
    sx = _scale(float(xs.min()), float(xs.max()), LEFT, W - RIGHT)
    sy = _scale(float(ys.min()), float(ys.max()), H - BOTTOM, TOP)
    body = []
    for k, (label, (x, y, band)) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        if band is not None:
            band = np.asarray(band, float)
            pts = [(sx(a), sy(b)) for a, b in zip(x, band[:, 1])]
            pts += [(sx(a), sy(b)) for a, b in zip(x[::-1], band[::-1, 0])]
            poly = " ".join(f"{a:.1f},{b:.1f}" for a, b in pts)
            body.append(f'<polygon points="{poly}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{sx(a):.1f},{sy(b):.1f}" for a, b in zip(x, y))
        body.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        body.append(f'<text x="{W - RIGHT - 4}" y="{TOP + 14 * (k + 1)}" text-anchor="end" fill="{color}">{escape(label)}</text>')
    return _save(path, _frame(title, xlabel, ylabel, xs, ys, body))


def bar_plot(path: str | Path, labels: Sequence[str], values, cis, title: str = "", ylabel: str = "") -> Path:
    """Bars with 95% interval whiskers."""
    values = np.asarray(values, float)
    cis = np.asarray(cis, float).reshape(-1, 2)
    n = len(labels)
    ys = np.concatenate([values, cis.ravel(), [0.0]])
    sx = _scale(-0.5, n - 0.5, LEFT, W - RIGHT)
    sy = _scale(float(ys.min()), float(ys.max()), H - BOTTOM, TOP)
    width = 0.6 * (W - LEFT - RIGHT) / max(n, 1)
    body = []
    for i, (label, v, (lo, hi)) in enumerate(zip(labels, values, cis)):
        color = PALETTE[i % len(PALETTE)]
        top, base = sorted((sy(v), sy(0.0)))
        body.append(f'<rect x="{sx(i) - width / 2:.1f}" y="{top:.1f}" width="{width:.1f}" height="{base - top:.1f}" fill="{color}"/>')
        body.append(f'<line x1="{sx(i):.1f}" y1="{sy(lo):.1f}" x2="{sx(i):.1f}" y2="{sy(hi):.1f}" stroke="black"/>')
        body.append(f'<text x="{sx(i):.1f}" y="{H - BOTTOM + 28}" text-anchor="middle">{escape(label)}</text>')
    return _save(path, _frame(title, "", ylabel, np.array([-0.5, n - 0.5]), ys, body, xticks=False))


def _save(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path
