"""Minimal SVG line charts: one median curve per series with a shaded min-max band."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"]

WIDTH, HEIGHT = 720, 440
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 170, 40, 55


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * step:
        out.append(round(v, 12))
        v += step
    return out


def _fmt(v):
    return f"{v:g}"


def convergence_svg(series, title="", log_y=False, y_label="exploitability",
                    x_label="episode") -> str:
    """Render ``series = {name: (x, median, lo, hi)}`` as an SVG document string.

    With ``log_y`` the y values are clipped at 1e-6 before taking logs.
    """
    floor = 1e-6

    def ty(v):
        return math.log10(max(v, floor)) if log_y else v

    xs = [x for (x, _, _, _) in series.values() for x in x]
    ys = [ty(v) for (_, med, lo, hi) in series.values() for v in (*med, *lo, *hi)]
    x_min, x_max = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y_min, y_max = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x_max == x_min:
        x_max = x_min + 1.0
    if y_max == y_min:
        y_max = y_min + 1.0
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def px(x):
        return MARGIN_L + (x - x_min) / (x_max - x_min) * pw

    def py(y):
        return MARGIN_T + (1.0 - (y - y_min) / (y_max - y_min)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{MARGIN_L + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">'
        f"{escape(title)}</text>",
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>',
    ]
    for t in _ticks(x_min, x_max):
        x = px(t)
        out.append(f'<line x1="{x:.1f}" y1="{MARGIN_T + ph}" x2="{x:.1f}" y2="{MARGIN_T + ph + 5}" stroke="#333"/>')
        out.append(f'<text x="{x:.1f}" y="{MARGIN_T + ph + 18}" text-anchor="middle">{_fmt(t)}</text>')
    for t in _ticks(y_min, y_max):
        y = py(t)
        label = _fmt(10**t) if log_y else _fmt(t)
        out.append(f'<line x1="{MARGIN_L - 5}" y1="{y:.1f}" x2="{MARGIN_L}" y2="{y:.1f}" stroke="#333"/>')
        out.append(f'<line x1="{MARGIN_L}" y1="{y:.1f}" x2="{MARGIN_L + pw}" y2="{y:.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN_L - 8}" y="{y + 4:.1f}" text-anchor="end">{label}</text>')
    out.append(f'<text x="{MARGIN_L + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(x_label)}</text>')
    out.append(
        f'<text x="18" y="{MARGIN_T + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {MARGIN_T + ph / 2:.1f})">{escape(y_label)}</text>'
    )

    for k, (name, (x, med, lo, hi)) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        upper = [f"{px(a):.2f},{py(ty(b)):.2f}" for a, b in zip(x, hi)]
        lower = [f"{px(a):.2f},{py(ty(b)):.2f}" for a, b in zip(reversed(x), reversed(lo))]
        out.append(
            f'<polygon class="band" data-series="{escape(name)}" points="{" ".join(upper + lower)}" '
            f'fill="{color}" fill-opacity="0.18" stroke="none"/>'
        )
        pts = " ".join(f"{px(a):.2f},{py(ty(b)):.2f}" for a, b in zip(x, med))
        out.append(
            f'<polyline class="curve" data-series="{escape(name)}" points="{pts}" '
            f'fill="none" stroke="{color}" stroke-width="2"/>'
        )
        ly = MARGIN_T + 14 + 18 * k
        lx = MARGIN_L + pw + 14
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 28}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
