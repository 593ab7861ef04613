"""Minimal self-contained SVG scatter plots.

Single-file output with an optional fitted line; deterministic for
fixed input so the files can serve as golden artifacts (the timestamp
comment is optional for that reason).
"""

from __future__ import annotations

import datetime
import math

_W, _H = 640, 480
_ML, _MR, _MT, _MB = 70, 20, 30, 55


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min(s * mag for s in (1, 2, 5, 10) if s * mag >= raw)
    t0 = math.ceil(lo / step) * step
    out = []
    t = t0
    while t <= hi + 1e-9 * step:
        out.append(round(t, 12))
        t += step
    return out


def scatter_svg(x, y, title: str, xlabel: str, ylabel: str,
                fit: tuple[float, float] | None = None,
                fit_label: str = "", timestamp: bool = True) -> str:
    """Scatter of (x, y) with an optional line y = fit[0]*x + fit[1]."""
    xs = [float(v) for v in x]
    ys = [float(v) for v in y]
    if not xs:
        raise ValueError("nothing to plot")
    xlo, xhi = min(xs), max(xs)
    ylo, yhi = min(ys), max(ys)
    xpad = 0.05 * (xhi - xlo or 1.0)
    ypad = 0.05 * (yhi - ylo or 1.0)
    xlo, xhi = xlo - xpad, xhi + xpad
    ylo, yhi = ylo - ypad, yhi + ypad

    def px(v):
        return _ML + (v - xlo) / (xhi - xlo) * (_W - _ML - _MR)

    def py(v):
        return _H - _MB - (v - ylo) / (yhi - ylo) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
    ]
    if timestamp:
        now = datetime.datetime.now(datetime.timezone.utc)
        parts.append(f"<!-- generated {now.isoformat(timespec='seconds')} -->")
    parts.append(f'<rect width="{_W}" height="{_H}" fill="white"/>')
    # axes box
    parts.append(
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
        f'height="{_H - _MT - _MB}" fill="none" stroke="black"/>')
    for t in _ticks(xlo, xhi):
        if xlo <= t <= xhi:
            parts.append(f'<line x1="{px(t):.1f}" y1="{_H - _MB}" '
                         f'x2="{px(t):.1f}" y2="{_H - _MB + 5}" stroke="black"/>')
            parts.append(f'<text x="{px(t):.1f}" y="{_H - _MB + 18}" '
                         f'font-size="11" text-anchor="middle">{t:g}</text>')
    for t in _ticks(ylo, yhi):
        if ylo <= t <= yhi:
            parts.append(f'<line x1="{_ML - 5}" y1="{py(t):.1f}" '
                         f'x2="{_ML}" y2="{py(t):.1f}" stroke="black"/>')
            parts.append(f'<text x="{_ML - 8}" y="{py(t):.1f}" font-size="11" '
                         f'text-anchor="end" dominant-baseline="middle">{t:g}</text>')
    if fit is not None:
        a, b = fit
        y1, y2 = a * xlo + b, a * xhi + b
        parts.append(f'<line x1="{px(xlo):.1f}" y1="{py(y1):.1f}" '
                     f'x2="{px(xhi):.1f}" y2="{py(y2):.1f}" '
                     'stroke="#c0392b" stroke-width="1.5"/>')
        if fit_label:
            parts.append(f'<text x="{_W - _MR - 8}" y="{_MT + 16}" font-size="12" '
                         f'text-anchor="end" fill="#c0392b">{fit_label}</text>')
    for vx, vy in zip(xs, ys):
        parts.append(f'<circle cx="{px(vx):.1f}" cy="{py(vy):.1f}" r="3" '
                     'fill="#2c5aa0" fill-opacity="0.7"/>')
    parts.append(f'<text x="{(_ML + _W - _MR) / 2:.0f}" y="{_MT - 10}" '
                 f'font-size="14" text-anchor="middle">{title}</text>')
    parts.append(f'<text x="{(_ML + _W - _MR) / 2:.0f}" y="{_H - 12}" '
                 f'font-size="12" text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="16" y="{(_MT + _H - _MB) / 2:.0f}" font-size="12" '
                 f'text-anchor="middle" transform="rotate(-90 16 '
                 f'{(_MT + _H - _MB) / 2:.0f})">{ylabel}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
