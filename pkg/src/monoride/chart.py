"""Deterministic SVG line charts for trajectory CSV files.

No plotting library: the renderer writes a fixed-canvas vector file with
stable float formatting, so identical inputs yield byte-identical output.
That property backs golden-file comparisons in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterError
from .simulate import Trajectory

__all__ = ["Panel", "render_chart", "panels_from_trajectory", "emit_chart"]

CANVAS_W = 960
CANVAS_H = 640
MARGIN_L = 64
MARGIN_R = 16
MARGIN_T = 34
MARGIN_B = 42


@dataclass(frozen=True)
class Panel:
    title: str
    ylabel: str
    values: np.ndarray


def _fmt(v: float) -> str:
    # fixed two-decimal coordinates keep the output byte-stable
    return f"{v:.2f}"


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if not math.isfinite(lo) or not math.isfinite(hi):
        raise ParameterError("cannot place ticks on a non-finite range")
    if hi <= lo:
        pad = 1.0 if lo == 0 else abs(lo) * 0.5
        lo, hi = lo - pad, hi + pad
    raw = (hi - lo) / max(1, target - 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _tick_label(v: float) -> str:
    return f"{v:.6g}"


def _panel_svg(x: np.ndarray, panel: Panel, ox: float, oy: float,
               w: float, h: float) -> list[str]:
    x_lo, x_hi = float(x[0]), float(x[-1])
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    y_lo = float(panel.values.min())
    y_hi = float(panel.values.max())
    if y_hi <= y_lo:  # flat series: pad so the line sits mid-panel
        pad = 1.0 if y_lo == 0 else abs(y_lo) * 0.1
        y_lo, y_hi = y_lo - pad, y_hi + pad

    px_l, px_r = ox + MARGIN_L, ox + w - MARGIN_R
    py_t, py_b = oy + MARGIN_T, oy + h - MARGIN_B

    def sx(v):
        return px_l + (v - x_lo) / (x_hi - x_lo) * (px_r - px_l)

    def sy(v):
        return py_b - (v - y_lo) / (y_hi - y_lo) * (py_b - py_t)

    out = []
    out.append(f'<rect x="{_fmt(px_l)}" y="{_fmt(py_t)}" width="{_fmt(px_r - px_l)}" '
               f'height="{_fmt(py_b - py_t)}" fill="none" stroke="#444" stroke-width="1"/>')
    out.append(f'<text x="{_fmt((px_l + px_r) / 2)}" y="{_fmt(oy + 20)}" '
               f'font-size="14" text-anchor="middle" fill="#000">{panel.title}</text>')

    for t in _nice_ticks(x_lo, x_hi):
        if t < x_lo - 1e-12 or t > x_hi + 1e-12:
            continue
        gx = sx(t)
        out.append(f'<line x1="{_fmt(gx)}" y1="{_fmt(py_b)}" x2="{_fmt(gx)}" '
                   f'y2="{_fmt(py_b + 4)}" stroke="#444" stroke-width="1"/>')
        out.append(f'<text x="{_fmt(gx)}" y="{_fmt(py_b + 17)}" font-size="10" '
                   f'text-anchor="middle" fill="#000">{_tick_label(t)}</text>')
    for t in _nice_ticks(y_lo, y_hi):
        if t < y_lo - 1e-12 or t > y_hi + 1e-12:
            continue
        gy = sy(t)
        out.append(f'<line x1="{_fmt(px_l - 4)}" y1="{_fmt(gy)}" x2="{_fmt(px_l)}" '
                   f'y2="{_fmt(gy)}" stroke="#444" stroke-width="1"/>')
        out.append(f'<text x="{_fmt(px_l - 7)}" y="{_fmt(gy + 3)}" font-size="10" '
                   f'text-anchor="end" fill="#000">{_tick_label(t)}</text>')

    out.append(f'<text x="{_fmt((px_l + px_r) / 2)}" y="{_fmt(py_b + 32)}" '
               f'font-size="11" text-anchor="middle" fill="#000">time [s]</text>')
    out.append(f'<text x="{_fmt(ox + 14)}" y="{_fmt((py_t + py_b) / 2)}" font-size="11" '
               f'text-anchor="middle" fill="#000" '
               f'transform="rotate(-90 {_fmt(ox + 14)} {_fmt((py_t + py_b) / 2)})">'
               f'{panel.ylabel}</text>')

    pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x, panel.values))
    if len(x) == 1:
        cx, cy = sx(x[0]), sy(panel.values[0])
        out.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="2.5" fill="#1f5fa8"/>')
    else:
        out.append(f'<polyline points="{pts}" fill="none" stroke="#1f5fa8" stroke-width="1.5"/>')
    return out


def render_chart(times: np.ndarray, panels: Sequence[Panel],
                 width: int = CANVAS_W, height: int = CANVAS_H) -> str:
    """Render panels on a 2-column grid; returns the SVG document text."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1:
        raise ParameterError("times must be a non-empty 1-D array")
    if not panels:
        raise ParameterError("at least one panel is required")
    for p in panels:
        if np.asarray(p.values).shape != times.shape:
            raise ParameterError(f"panel '{p.title}' values do not match the time grid")
        if not np.all(np.isfinite(p.values)):
            raise ParameterError(f"panel '{p.title}' contains non-finite values")

    cols = 2 if len(panels) > 1 else 1
    rows = (len(panels) + cols - 1) // cols
    pw, ph = width / cols, height / rows

    body = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">',
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>']
    for i, panel in enumerate(panels):
        r, c = divmod(i, cols)
        body.extend(_panel_svg(times, Panel(panel.title, panel.ylabel,
                                            np.asarray(panel.values, dtype=float)),
                               c * pw, r * ph, pw, ph))
    body.append("</svg>")
    return "\n".join(body) + "\n"


def panels_from_trajectory(traj: Trajectory,
                           state_labels: Sequence[str] = (),
                           voltage: np.ndarray | None = None) -> list[Panel]:
    """Default panel layout: charging current, then the first state, an
    optional derived voltage series, and the remaining states."""
    def split(label, fallback):
        if "[" in label:
            name, unit = label.split("[", 1)
            return name.strip().replace("_", " "), "[" + unit
        return (label or fallback), ""

    labels = list(state_labels) or [f"x{k}" for k in range(1, traj.n_states + 1)]
    panels = [Panel("Charging current", "current [A]", traj.inputs[:, 0])]
    for k in range(traj.n_states):
        name, unit = split(labels[k], f"x{k + 1}")
        panels.append(Panel(name.capitalize(), f"{name} {unit}".strip(), traj.states[:, k]))
        if k == 0 and voltage is not None:
            panels.append(Panel("Voltage", "voltage [V]", np.asarray(voltage, dtype=float)))
    return panels


def emit_chart(traj_csv, panels: Sequence[Panel] | None, out_path,
               state_labels: Sequence[str] = (),
               voltage: np.ndarray | None = None) -> None:
    """Render a trajectory CSV to an SVG file.

    With ``panels=None`` the default layout from
    :func:`panels_from_trajectory` is used.  Output is written with LF line
    endings and is byte-identical across runs for identical inputs.
    """
    traj = Trajectory.from_csv(traj_csv)
    if panels is None:
        panels = panels_from_trajectory(traj, state_labels, voltage)
    svg = render_chart(traj.times, panels)
    with open(out_path, "w", newline="\n") as fh:
        fh.write(svg)
