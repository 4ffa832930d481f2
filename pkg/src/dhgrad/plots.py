"""Plot data and minimal SVG line plots from run artifacts."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .artifacts import read_columns, read_csv, write_columns

__all__ = ["svg_line_plot", "emit_plots"]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(lo), math.ceil(hi)
        step = max(1, (b - a) // 6)
        return [float(v) for v in range(a, b + 1, step)]
    span = hi - lo or 1.0
    raw = span / 5
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return list(np.arange(start, hi + 0.5 * step, step))


def svg_line_plot(path, series: Sequence[dict], title: str = "", xlabel: str = "",
                  ylabel: str = "", logx: bool = False, logy: bool = False,
                  notes: Sequence[str] = (), width: int = 640, height: int = 420) -> Path:
    """Write an SVG with one polyline per series.

    Each series is ``dict(x=..., y=..., label=..., dashed=False)``.
    Non-finite or (on log axes) nonpositive points are dropped.
    """
    prepared = []
    for s in series:
        x = np.asarray(s["x"], dtype=float)
        y = np.asarray(s["y"], dtype=float)
        ok = np.isfinite(x) & np.isfinite(y)
        if logx:
            ok &= x > 0
        if logy:
            ok &= y > 0
        x, y = x[ok], y[ok]
        if x.size == 0:
            continue
        prepared.append((np.log10(x) if logx else x, np.log10(y) if logy else y, s))
    if not prepared:
        raise ValueError("nothing to plot")
    xs = np.concatenate([p[0] for p in prepared])
    ys = np.concatenate([p[1] for p in prepared])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    ml, mr, mt, mb = 70, 20, 40, 50
    pw, ph = width - ml - mr, height - mt - mb

    def X(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def Y(v):
        return mt + (1 - (v - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
           f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="13">{title}</text>',
           f'<text x="{ml + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{xlabel}</text>',
           f'<text x="15" y="{mt + ph / 2:.1f}" text-anchor="middle" '
           f'transform="rotate(-90 15 {mt + ph / 2:.1f})">{ylabel}</text>']
    for t in _ticks(x0, x1, logx):
        if x0 <= t <= x1:
            lab = f"1e{int(t)}" if logx else f"{t:g}"
            out.append(f'<line x1="{X(t):.1f}" y1="{mt + ph}" x2="{X(t):.1f}" y2="{mt + ph + 4}" stroke="#444"/>')
            out.append(f'<text x="{X(t):.1f}" y="{mt + ph + 16}" text-anchor="middle">{lab}</text>')
    for t in _ticks(y0, y1, logy):
        if y0 <= t <= y1:
            lab = f"1e{int(t)}" if logy else f"{t:.3g}"
            out.append(f'<line x1="{ml - 4}" y1="{Y(t):.1f}" x2="{ml}" y2="{Y(t):.1f}" stroke="#444"/>')
            out.append(f'<text x="{ml - 6}" y="{Y(t) + 4:.1f}" text-anchor="end">{lab}</text>')
    for i, (x, y, s) in enumerate(prepared):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(x, y))
        dash = ' stroke-dasharray="5,4"' if s.get("dashed") else ""
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{pts}"/>')
        out.append(f'<text x="{ml + 10}" y="{mt + 16 + 14 * i}" fill="{color}">{s.get("label", "")}</text>')
    for j, note in enumerate(notes):
        out.append(f'<text x="{ml + pw - 10}" y="{mt + 16 + 14 * j}" text-anchor="end">{note}</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path


def _decay_plot(d: Path) -> list[Path]:
    _, data = read_columns(d / "kernel.dat")
    rho, V = data[:, 0], np.abs(data[:, 2])
    fit = json.loads((d / "decay.json").read_text())
    series = [dict(x=rho, y=V, label="|V|")]
    notes = []
    for name, (lo, hi) in (("inner", fit["inner_window"]), ("outer", fit["outer_window"])):
        sel = (rho >= lo) & (rho <= hi)
        k = fit[f"{name}_slope"]
        icpt = np.mean(np.log(V[sel]) - k * np.log(rho[sel]))
        series.append(dict(x=rho[sel], y=np.exp(icpt) * rho[sel] ** k, label=f"{name} fit", dashed=True))
        notes.append(f"{name} slope {k:.3f} (r2 {fit[f'{name}_r2']:.5f})")
    write_columns(d / "decay_plot.dat", ["rho", "absV"], rho, V)
    return [svg_line_plot(d / "decay.svg", series, title="decay of |V|", xlabel="rho",
                          ylabel="|V|", logx=True, logy=True, notes=notes), d / "decay_plot.dat"]


def _spectrum_plot(d: Path) -> list[Path]:
    header, data = read_columns(d / "spectrum.dat")
    xi = data[:, 0]
    series = [dict(x=xi, y=data[:, 1], label="g^")]
    for j, name in enumerate(header[3:], start=3):
        series.append(dict(x=xi, y=data[:, j], label=name, dashed=True))
    return [svg_line_plot(d / "spectrum.svg", series, title="radial transform", xlabel="xi",
                          ylabel="g^(xi)", logx=True, logy=True)]


def _quotient_plot(d: Path, csv_path: Path) -> list[Path]:
    rows = read_csv(csv_path)
    s_vals = sorted({float(r["s"]) for r in rows})
    qmin = [min(float(r["quotient"]) for r in rows if float(r["s"]) == s) for s in s_vals]
    qmax = [max(float(r["quotient"]) for r in rows if float(r["s"]) == s) for s in s_vals]
    write_columns(d / "quotient_vs_s.dat", ["s", "qmin", "qmax"], s_vals, qmin, qmax)
    series = [dict(x=s_vals, y=qmin, label="min quotient"), dict(x=s_vals, y=qmax, label="max quotient", dashed=True)]
    return [svg_line_plot(d / "quotient_vs_s.svg", series, title="Sobolev quotient against s",
                          xlabel="s", ylabel="quotient"), d / "quotient_vs_s.dat"]


def emit_plots(artifact_dir) -> list[Path]:
    """Turn whatever artifacts are present into ``.dat`` and ``.svg`` files.

    Raises
    ------
    FileNotFoundError
        If the directory holds none of ``kernel.dat`` + ``decay.json``,
        ``spectrum.dat`` or ``sobolev_1.2.csv``.
    """
    d = Path(artifact_dir)
    if not d.is_dir():
        raise FileNotFoundError(f"artifact directory {d} does not exist")
    made: list[Path] = []
    if (d / "kernel.dat").exists() and (d / "decay.json").exists():
        made += _decay_plot(d)
    if (d / "spectrum.dat").exists():
        made += _spectrum_plot(d)
    if (d / "sobolev_1.2.csv").exists():
        made += _quotient_plot(d, d / "sobolev_1.2.csv")
    if not made:
        raise FileNotFoundError(
            f"no plottable artifacts in {d}: expected kernel.dat with decay.json, "
            "spectrum.dat, or sobolev_1.2.csv"
        )
    return made
