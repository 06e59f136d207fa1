"""Small deterministic SVG charts (no plotting library, byte-stable output)."""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["PLOT_KINDS", "line_chart", "histogram_chart", "scatter_chart", "plot_records", "plot_sweep"]

PLOT_KINDS = ("peak-hist", "acc-hist", "rt-acc-scatter")
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
W, H = 640, 420
ML, MR, MT, MB = 70, 150, 40, 60


def _n(v: float) -> str:
    return f"{v:.2f}"


class _Canvas:
    def __init__(self, title: str, xlabel: str, ylabel: str, xlim, ylim):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1
        if self.y1 == self.y0:
            self.y1 = self.y0 + 1
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
            f'<rect width="{W}" height="{H}" fill="white"/>',
            f'<text x="{W / 2 - MR / 2}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>',
            f'<text x="{ML + (W - ML - MR) / 2}" y="{H - 15}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
            f'<text x="18" y="{MT + (H - MT - MB) / 2}" text-anchor="middle" font-size="12" '
            f'transform="rotate(-90 18 {MT + (H - MT - MB) / 2})">{escape(ylabel)}</text>',
        ]
        self._axes()
        self.legend = []

    def sx(self, x):
        return ML + (x - self.x0) / (self.x1 - self.x0) * (W - ML - MR)

    def sy(self, y):
        return H - MB - (y - self.y0) / (self.y1 - self.y0) * (H - MT - MB)

    def _axes(self):
        bx, by = ML, H - MB
        self.parts.append(f'<line x1="{bx}" y1="{by}" x2="{W - MR}" y2="{by}" stroke="black"/>')
        self.parts.append(f'<line x1="{bx}" y1="{MT}" x2="{bx}" y2="{by}" stroke="black"/>')
        for i in range(5):
            xv = self.x0 + i * (self.x1 - self.x0) / 4
            yv = self.y0 + i * (self.y1 - self.y0) / 4
            self.parts.append(f'<text x="{_n(self.sx(xv))}" y="{by + 16}" text-anchor="middle" font-size="10">{xv:.4g}</text>')
            self.parts.append(f'<text x="{bx - 6}" y="{_n(self.sy(yv) + 3)}" text-anchor="end" font-size="10">{yv:.4g}</text>')

    def add_legend(self, label: str, color: str):
        y = MT + 18 * len(self.legend)
        self.legend.append(
            f'<rect x="{W - MR + 12}" y="{y}" width="12" height="12" fill="{color}"/>'
            f'<text x="{W - MR + 30}" y="{y + 10}" font-size="11">{escape(label)}</text>')

    def polyline(self, xs, ys, color, label=None):
        pts = " ".join(f"{_n(self.sx(x))},{_n(self.sy(y))}" for x, y in zip(xs, ys)
                       if math.isfinite(x) and math.isfinite(y))
        cls = f' class="series" data-label="{escape(label)}"' if label else ""
        self.parts.append(f'<polyline{cls} points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')

    def whisker(self, x, lo, hi, color):
        if math.isnan(lo) or math.isnan(hi):
            return
        X = _n(self.sx(x))
        self.parts.append(f'<line x1="{X}" y1="{_n(self.sy(lo))}" x2="{X}" y2="{_n(self.sy(hi))}" stroke="{color}"/>')

    def dot(self, x, y, color, r=2.0):
        self.parts.append(f'<circle cx="{_n(self.sx(x))}" cy="{_n(self.sy(y))}" r="{r}" fill="{color}" fill-opacity="0.5"/>')

    def render(self) -> str:
        return "\n".join(self.parts + self.legend + ["</svg>"]) + "\n"


def _finite_range(values, pad=0.05):
    v = np.asarray([x for x in values if x is not None and math.isfinite(x)], dtype=float)
    if v.size == 0:
        return 0.0, 1.0
    lo, hi = float(v.min()), float(v.max())
    span = hi - lo or abs(hi) or 1.0
    return lo - pad * span, hi + pad * span


def line_chart(series: dict[str, tuple[Sequence[float], Sequence[float], Sequence[float], Sequence[float]]],
               title: str, xlabel: str, ylabel: str) -> str:
    """One polyline per series; ``series[name] = (x, y, lo, hi)`` with CI whiskers."""
    xs = [x for s in series.values() for x in s[0]]
    ys = [y for s in series.values() for part in s[1:] for y in part]
    c = _Canvas(title, xlabel, ylabel, _finite_range(xs), _finite_range(ys))
    for k, (name, (x, y, lo, hi)) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        c.polyline(x, y, color, name)
        for xi, l, h in zip(x, lo, hi):
            c.whisker(xi, l, h, color)
        c.add_legend(name, color)
    return c.render()


def histogram_chart(groups: dict[str, Sequence[float]], edges: np.ndarray,
                    title: str, xlabel: str) -> str:
    """Overlaid step outlines of per-group proportions."""
    hists = {k: np.histogram(np.asarray(v, dtype=float), bins=edges)[0] / max(len(v), 1) for k, v in groups.items()}
    top = max((float(h.max()) for h in hists.values() if h.size), default=1.0) or 1.0
    c = _Canvas(title, xlabel, "proportion", (float(edges[0]), float(edges[-1])), (0.0, top * 1.05))
    for k, (name, h) in enumerate(hists.items()):
        color = PALETTE[k % len(PALETTE)]
        xs, ys = [float(edges[0])], [0.0]
        for i, v in enumerate(h):
            xs += [float(edges[i]), float(edges[i + 1])]
            ys += [float(v), float(v)]
        xs.append(float(edges[-1]))
        ys.append(0.0)
        c.polyline(xs, ys, color, name)
        c.add_legend(name, color)
    return c.render()


def scatter_chart(groups: dict[str, tuple[Sequence[float], Sequence[float]]],
                  title: str, xlabel: str, ylabel: str) -> str:
    xs = [x for g in groups.values() for x in g[0]]
    ys = [y for g in groups.values() for y in g[1]]
    c = _Canvas(title, xlabel, ylabel, _finite_range(xs), _finite_range(ys))
    for k, (name, (gx, gy)) in enumerate(groups.items()):
        color = PALETTE[k % len(PALETTE)]
        for x, y in zip(gx, gy):
            c.dot(x, y, color)
        c.add_legend(name, color)
    return c.render()


def plot_records(records, kind: str) -> str:
    """Figure from simulation records, one series per condition."""
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {', '.join(PLOT_KINDS)}")
    records = list(records)
    if not records:
        raise ValueError("no rows")
    conds = list(dict.fromkeys(r.condition for r in records))
    if kind == "peak-hist":
        groups = {c: [r.peak_conn for r in records if r.condition == c and r.peak_conn is not None] for c in conds}
        # width-2 bins starting at neuron 1: [1,3), [3,5), ..., [99,101)
        return histogram_chart(groups, np.arange(1, 102, 2, dtype=float),
                               "Final conn peak location", "conn neuron")
    if kind == "acc-hist":
        groups = {c: [r.acceptability for r in records if r.condition == c and r.acceptability is not None] for c in conds}
        return histogram_chart(groups, np.linspace(0.0, 1.0, 41), "Acceptability", "acceptability")
    groups = {}
    for c in conds:
        rows = [r for r in records if r.condition == c and r.acceptability is not None and r.rt is not None]
        groups[c] = ([r.acceptability for r in rows], [float(r.rt) for r in rows])
    return scatter_chart(groups, "Response time by acceptability", "acceptability", "RT (timesteps)")


def plot_sweep(rows) -> str:
    series = {}
    for cond in dict.fromkeys(r.condition for r in rows):
        sel = sorted((r for r in rows if r.condition == cond), key=lambda r: r.c_dnf)
        series[cond] = ([r.c_dnf for r in sel], [r.mean_acceptability for r in sel],
                        [r.ci_lo for r in sel], [r.ci_hi for r in sel])
    return line_chart(series, "Mean acceptability by coupling gain", "c_DNF", "mean acceptability")
