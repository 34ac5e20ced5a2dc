"""Deterministic SVG scatter plots of complex spectra."""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

__all__ = ["spectrum_svg", "render_spectrum_svg"]

CANVAS = 600
MARGIN = 20


def _extent(eigs: np.ndarray, rho: float, circles) -> float:
    r = 1.0 + abs(rho)
    if eigs.size:
        r = max(r, float(np.max(np.abs(eigs.real))), float(np.max(np.abs(eigs.imag))))
    for c, rad in circles:
        c = complex(c)
        r = max(r, abs(c.real) + rad, abs(c.imag) + rad)
    # round up to a multiple of 0.5 so small perturbations do not rescale the plot
    return math.ceil(1.05 * r * 2) / 2


def spectrum_svg(eigs: Iterable[complex], rho: float, circles: Sequence[tuple[complex, float]] = (), extent: float | None = None) -> str:
    """SVG text with the boundary of ``E_rho``, the eigenvalues and optional circles."""
    ev = np.asarray(list(eigs), complex)
    circles = [(complex(c), float(r)) for c, r in circles]
    half = float(extent) if extent is not None else _extent(ev, rho, circles)
    scale = (CANVAS - 2 * MARGIN) / (2 * half)
    mid = CANVAS / 2

    def px(z: complex) -> tuple[str, str]:
        return f"{mid + scale * z.real:.3f}", f"{mid - scale * z.imag:.3f}"

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f"<!-- canvas {CANVAS}x{CANVAS} px, margin {MARGIN} px; complex plane [-{half:g}, {half:g}]^2, "
        f"{scale:.6f} px per unit, y axis upward; rho={rho:g}, {ev.size} eigenvalues, {len(circles)} circles -->",
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" viewBox="0 0 {CANVAS} {CANVAS}">',
        f'<rect x="0" y="0" width="{CANVAS}" height="{CANVAS}" fill="white"/>',
        f'<line x1="{MARGIN}" y1="{mid}" x2="{CANVAS - MARGIN}" y2="{mid}" stroke="#bbbbbb" stroke-width="0.5"/>',
        f'<line x1="{mid}" y1="{MARGIN}" x2="{mid}" y2="{CANVAS - MARGIN}" stroke="#bbbbbb" stroke-width="0.5"/>',
    ]
    a, b = (1 + rho) * scale, (1 - rho) * scale
    if a == 0 or b == 0:
        # rho = +-1: the ellipse collapses to a segment
        out.append(
            f'<line x1="{mid - a:.3f}" y1="{mid - b:.3f}" x2="{mid + a:.3f}" y2="{mid + b:.3f}" stroke="#1f77b4" stroke-width="1.5"/>'
        )
    else:
        out.append(
            f'<ellipse cx="{mid}" cy="{mid}" rx="{a:.3f}" ry="{b:.3f}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>'
        )
    for z in ev:
        x, y = px(z)
        out.append(f'<circle cx="{x}" cy="{y}" r="1.5" fill="black"/>')
    for c, r in circles:
        x, y = px(c)
        out.append(f'<circle cx="{x}" cy="{y}" r="{r * scale:.3f}" fill="none" stroke="#d62728" stroke-width="1.2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_spectrum_svg(eigs, rho: float, circles, path, extent: float | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(spectrum_svg(eigs, rho, circles, extent))
