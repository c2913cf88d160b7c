"""Static SVG line charts of a simulation trace.

fig01 overlays every parameter estimate, the next 4n figures show one
parameter error each, the last n figures the state-estimation errors. The
SVG is written by hand so output bytes depend only on the trace.
"""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from ..observer import Trace, error_series
from ..plant import TrueParameters

WIDTH, HEIGHT = 720, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 80, 150, 40, 50
MAX_POINTS = 2000
BAND = 0.05
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
           "#7f7f7f", "#bcbd22")


class PlotError(ValueError):
    pass


def _nice_ticks(lo: float, hi: float, count: int = 6) -> list[float]:
    span = hi - lo
    raw = span / max(count - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


def _tick_label(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.2e}"
    return f"{v:.6g}"


def _decimate(t: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Keep min and max of each bucket so spikes survive the thinning."""
    if t.size <= MAX_POINTS:
        return t, y
    buckets = np.array_split(np.arange(t.size), MAX_POINTS // 2)
    keep = []
    for idx in buckets:
        seg = y[idx]
        a, b = idx[int(np.argmin(seg))], idx[int(np.argmax(seg))]
        keep.extend(sorted({a, b}))
    keep = np.array(keep)
    return t[keep], y[keep]


def line_chart(t, series, labels, title, ylabel, band=None) -> str:
    t = np.asarray(t, dtype=float)
    if t.size < 2 or not t[-1] > t[0]:
        raise PlotError("degenerate time range: the trace needs at least two nodes; increase T")
    ys = [np.asarray(s, dtype=float) for s in series]
    lo = min(float(np.min(y)) for y in ys)
    hi = max(float(np.max(y)) for y in ys)
    if band is not None:
        lo, hi = min(lo, -band), max(hi, band)
    if hi - lo < 1e-12 * max(1.0, abs(hi)):
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    x0, x1 = float(t[0]), float(t[-1])
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def px(v):
        return MARGIN_L + (v - x0) / (x1 - x0) * pw

    def py(v):
        return MARGIN_T + (hi - v) / (hi - lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{MARGIN_L + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    for v in _nice_ticks(x0, x1):
        X = px(v)
        out.append(f'<line x1="{X:.2f}" y1="{MARGIN_T}" x2="{X:.2f}" y2="{MARGIN_T + ph}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{X:.2f}" y="{MARGIN_T + ph + 16}" text-anchor="middle">{_tick_label(v)}</text>')
    for v in _nice_ticks(lo, hi):
        Y = py(v)
        out.append(f'<line x1="{MARGIN_L}" y1="{Y:.2f}" x2="{MARGIN_L + pw}" y2="{Y:.2f}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{MARGIN_L - 6}" y="{Y + 4:.2f}" text-anchor="end">{_tick_label(v)}</text>')
    out.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{MARGIN_L + pw / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle">t, s</text>')
    out.append(f'<text x="18" y="{MARGIN_T + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {MARGIN_T + ph / 2:.1f})">{escape(ylabel)}</text>')
    if band is not None:
        for v in (-band, band):
            out.append(f'<line x1="{MARGIN_L}" y1="{py(v):.2f}" x2="{MARGIN_L + pw}" y2="{py(v):.2f}" '
                       f'stroke="#888888" stroke-dasharray="6 4"/>')
        out.append(f'<text x="{MARGIN_L + pw + 6}" y="{py(band) + 4:.2f}" fill="#888888">+{band:g}</text>')
        out.append(f'<text x="{MARGIN_L + pw + 6}" y="{py(-band) + 4:.2f}" fill="#888888">-{band:g}</text>')
    for k, (y, label) in enumerate(zip(ys, labels)):
        colour = PALETTE[k % len(PALETTE)]
        td, yd = _decimate(t, y)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(td.tolist(), yd.tolist()))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.3" points="{pts}"/>')
        ly = MARGIN_T + 14 + 18 * k
        lx = MARGIN_L + pw + (40 if band is not None else 12)
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 24}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_plots(trace: Trace, truth: TrueParameters, out_dir) -> list[Path]:
    """Write fig01.svg ... fig{1+5n}.svg into ``out_dir``; returns the paths."""
    if len(trace) < 2:
        raise PlotError("degenerate time range: the trace needs at least two nodes; increase T")
    err = error_series(trace, truth)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n = trace.n
    dim = 4 * n
    charts = [(
        "Parameter estimates",
        "estimate",
        [trace.theta_hat[:, i] for i in range(dim)],
        [f"Θ̂{i + 1}" for i in range(dim)],
        None,
    )]
    for i in range(dim):
        charts.append((f"Estimation error Θ̂{i + 1} - Θ{i + 1}", "error", [err.theta[:, i]],
                       [f"Θ̂{i + 1} - Θ{i + 1}"], BAND))
    for j in range(n):
        charts.append((f"State estimation error x̂{j + 1} - x{j + 1}", "error", [err.x[:, j]],
                       [f"x̂{j + 1} - x{j + 1}"], BAND))
    width = max(2, len(str(len(charts))))
    paths = []
    for k, (title, ylabel, series, labels, band) in enumerate(charts, start=1):
        p = out_dir / f"fig{k:0{width}d}.svg"
        svg = line_chart(trace.t, series, labels, title, ylabel, band)
        try:
            p.write_text(svg, encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write plot {str(p)!r}: {exc.strerror or exc}") from exc
        paths.append(p)
    return paths
