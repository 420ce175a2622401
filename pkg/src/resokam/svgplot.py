"""Static SVG output, written by hand for byte determinism.

Only three plot kinds exist: the 2-d zone map, resonance graph curves,
and the normalized secular potential with its pendulum level sets.  No
plotting library is used; the files contain nothing run-dependent, so
identical inputs give identical bytes.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import UnsupportedPlotError

ZONE_COLORS = {0: "#4477aa", 1: "#ee6677", 2: "#ccbb44"}
ZONE_NAMES = {0: "non-resonant", 1: "simply resonant", 2: "residual"}

_W, _H = 720, 540
_MARGIN = 56


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _header(title: str) -> list:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="#ffffff"/>',
        f'<text x="{_W / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="monospace" font-size="15">{title}</text>',
    ]


def _frame_box(parts: list, xlo, xhi, ylo, yhi, xlabel: str, ylabel: str) -> None:
    x0, x1 = _MARGIN, _W - _MARGIN
    y0, y1 = _H - _MARGIN, _MARGIN + 16
    parts.append(f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
                 f'fill="none" stroke="#000000" stroke-width="1"/>')
    parts.append(f'<text x="{x0}" y="{_H - 18}" font-family="monospace" '
                 f'font-size="12">{xlabel}: [{_fmt(xlo)}, {_fmt(xhi)}]</text>')
    parts.append(f'<text x="{x0}" y="{_MARGIN}" font-family="monospace" '
                 f'font-size="12">{ylabel}: [{_fmt(ylo)}, {_fmt(yhi)}]</text>')


def _mapper(xlo, xhi, ylo, yhi):
    x0, x1 = _MARGIN, _W - _MARGIN
    y0, y1 = _H - _MARGIN, _MARGIN + 16
    dx = (xhi - xlo) or 1.0
    dy = (yhi - ylo) or 1.0

    def to_px(x, y):
        return (x0 + (x - xlo) / dx * (x1 - x0),
                y0 - (y - ylo) / dy * (y0 - y1))
    return to_px


def _polyline(pts, color: str, width: float = 1.5) -> str:
    coords = " ".join(f"{px:.2f},{py:.2f}" for px, py in pts)
    return (f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"/>')


def zones2d_svg(path, xs, ys, labels, title: str = "resonance zones") -> None:
    """Heat map of zone labels on the scan grid; outside cells stay white."""
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise UnsupportedPlotError("zones2d needs a 2-d label grid")
    g0, g1 = labels.shape
    xlo, xhi = float(xs[0]), float(xs[-1])
    ylo, yhi = float(ys[0]), float(ys[-1])
    parts = _header(title)
    _frame_box(parts, xlo, xhi, ylo, yhi, "y1", "y2")
    to_px = _mapper(xlo, xhi, ylo, yhi)
    cw = (_W - 2 * _MARGIN) / g0
    ch = (_H - _MARGIN - (_MARGIN + 16)) / g1
    for i in range(g0):
        for j in range(g1):
            lab = int(labels[i, j])
            if lab < 0:
                continue
            px, py = to_px(float(xs[i]), float(ys[j]))
            parts.append(f'<rect x="{px - cw / 2:.2f}" y="{py - ch / 2:.2f}" '
                         f'width="{cw:.2f}" height="{ch:.2f}" '
                         f'fill="{ZONE_COLORS[lab]}"/>')
    for li, lab in enumerate(sorted(ZONE_COLORS)):
        y = _MARGIN + 32 + 16 * li
        parts.append(f'<rect x="{_W - _MARGIN - 150}" y="{y - 10}" width="12" '
                     f'height="12" fill="{ZONE_COLORS[lab]}"/>')
        parts.append(f'<text x="{_W - _MARGIN - 132}" y="{y}" '
                     f'font-family="monospace" font-size="11">{ZONE_NAMES[lab]}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


def graph_svg(path, graph, title: str = None) -> None:
    """Curves eta(varpi, .) over the adjacent action, one per varpi (n = 2)."""
    if graph.baseGrid.shape[1] != 1:
        raise UnsupportedPlotError("graph plot needs a 2-dimensional model")
    nv, nb = graph.eta.shape
    if nb == 0:
        raise UnsupportedPlotError("graph is degenerate (no cubes)")
    yh = graph.baseGrid[:, 0]
    order = np.argsort(yh, kind="stable")
    yh = yh[order]
    per = max(1, nb // max(1, len(graph.J)))
    gap = 1.5 * graph.cubes.frak_r / per
    if title is None:
        title = f"resonance graph k = {list(graph.frame.k.entries)}"
    xlo, xhi = float(yh[0]), float(yh[-1])
    ylo, yhi = float(graph.eta.min()), float(graph.eta.max())
    parts = _header(title)
    _frame_box(parts, xlo, xhi, ylo, yhi, "yhat", "eta")
    to_px = _mapper(xlo, xhi, ylo, yhi)
    for vi in range(nv):
        row = graph.eta[vi][order]
        t = vi / max(1, nv - 1)
        color = f"#{int(40 + 180 * t):02x}{int(60 + 40 * t):02x}{int(200 - 160 * t):02x}"
        seg = [(float(yh[0]), float(row[0]))]
        for i in range(1, nb):
            if yh[i] - yh[i - 1] > gap:
                if len(seg) > 1:
                    parts.append(_polyline([to_px(*p) for p in seg], color))
                seg = []
            seg.append((float(yh[i]), float(row[i])))
        if len(seg) > 1:
            parts.append(_polyline([to_px(*p) for p in seg], color))
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


def g0_svg(path, data, title: str = None) -> None:
    """Normalized potential G0 on [0, 2pi] plus leading pendulum levels."""
    from .secular import trig_eval

    if title is None:
        title = f"G0 along k = {list(data.k)}"
    parts = _header(title)
    if data.degenerate or data.pendulumEnergies is None:
        parts.append(f'<text x="{_W / 2:.1f}" y="{_H / 2:.1f}" text-anchor="middle" '
                     f'font-family="monospace" font-size="14">degenerate resonance: '
                     f'no pendulum structure</text>')
        parts.append("</svg>")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(parts) + "\n")
        return

    theta = np.linspace(0.0, 2.0 * math.pi, 513)
    g = trig_eval(data.G0, theta, real=True)
    glo, ghi = float(g.min()), float(g.max())
    pad = 0.05 * ((ghi - glo) or 1.0)

    # top half: the curve
    top_map = _mapper(0.0, 2.0 * math.pi, glo - pad, ghi + pad)

    def upper(px, py):
        return px, _MARGIN + 16 + (py - (_MARGIN + 16)) * 0.42

    parts.append(_polyline([upper(*top_map(t, v)) for t, v in zip(theta, g)],
                           "#4477aa", 1.8))
    for c in data.criticalPoints:
        px, py = upper(*top_map(c["theta"], c["value"]))
        parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3" '
                     f'fill="#ee6677"/>')
    parts.append(f'<text x="{_MARGIN}" y="{_MARGIN}" font-family="monospace" '
                 f'font-size="12">G0 over [0, 2pi], range [{_fmt(glo)}, {_fmt(ghi)}]</text>')

    # bottom half: level sets of m_k p^2 + eps f1(q)
    e = data.pendulumEnergies
    emin, emax = e["min"], e["max"]
    espan = (emax - emin) or 1.0
    f1q = trig_eval(data.f1, theta, real=True) * data.eps
    pmax = math.sqrt(1.25 * espan / data.m_k) if data.m_k > 0 else 1.0
    bot_map = _mapper(0.0, 2.0 * math.pi, -pmax, pmax)

    def lower(px, py):
        return px, _H - _MARGIN - (_H - _MARGIN - py) * 0.40

    levels = [emin + t * espan for t in (0.15, 0.4, 0.65, 0.9, 1.1)]
    for lev in levels + [e["separatrix"]]:
        sep = lev == e["separatrix"]
        color = "#cc3311" if sep else "#777777"
        rad = np.maximum(lev - f1q, 0.0) / data.m_k
        p = np.sqrt(rad)
        for sign in (1.0, -1.0):
            seg = []
            for t, pv, rv in zip(theta, p, rad):
                if rv <= 0.0:
                    if len(seg) > 1:
                        parts.append(_polyline(seg, color, 1.6 if sep else 1.0))
                    seg = []
                    continue
                seg.append(lower(*bot_map(t, sign * pv)))
            if len(seg) > 1:
                parts.append(_polyline(seg, color, 1.6 if sep else 1.0))
    parts.append(f'<text x="{_MARGIN}" y="{_H - 18}" font-family="monospace" '
                 f'font-size="12">levels of m_k p^2 + eps f1(q); separatrix at '
                 f'{_fmt(e["separatrix"])}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
