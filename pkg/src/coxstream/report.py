"""Static SVG rendering of CI profiles, plus profile table round-tripping.

Each coefficient gets one plot: K horizontal confidence-interval segments
(one per network realization) with a mean marker, against a vertical zero
reference line.  SVGs are generated directly as text with fixed number
formatting so identical inputs produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .resampler import RealizationProfile

__all__ = [
    "profile_svg",
    "write_profile_plots",
    "read_profile_table",
]

_W, _H = 560, 360
_ML, _MR, _MT, _MB = 70, 25, 45, 45


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def profile_svg(title: str, estimates, lows, highs, converged=None) -> str:
    """One coefficient's CI profile as an SVG document string.

    Draws exactly ``K`` segments with class ``ci`` (plus a mean marker
    each) and one vertical reference line with class ``zero``.
    """
    est = np.asarray(estimates, dtype=np.float64)
    lo = np.asarray(lows, dtype=np.float64)
    hi = np.asarray(highs, dtype=np.float64)
    k = len(est)
    if converged is None:
        converged = np.ones(k, dtype=bool)

    x_min = min(float(lo.min()), 0.0) if k else -1.0
    x_max = max(float(hi.max()), 0.0) if k else 1.0
    span = x_max - x_min
    pad = 0.05 * span if span > 0 else 1.0
    x_min -= pad
    x_max += pad

    def sx(v: float) -> float:
        return _ML + (v - x_min) / (x_max - x_min) * (_W - _ML - _MR)

    plot_h = _H - _MT - _MB

    def sy(row: int) -> float:
        return _MT + (row + 0.5) * plot_h / max(k, 1)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="22" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
        f'height="{plot_h}" fill="none" stroke="#999" stroke-width="1"/>',
    ]

    for tick in np.linspace(x_min, x_max, 5):
        x = sx(float(tick))
        parts.append(
            f'<line x1="{x:.2f}" y1="{_H - _MB}" x2="{x:.2f}" '
            f'y2="{_H - _MB + 5}" stroke="#333" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{_H - _MB + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{tick:.3g}</text>'
        )

    if x_min <= 0.0 <= x_max:
        xz = sx(0.0)
        parts.append(
            f'<line class="zero" x1="{xz:.2f}" y1="{_MT}" x2="{xz:.2f}" '
            f'y2="{_H - _MB}" stroke="#666" stroke-width="1" '
            f'stroke-dasharray="4 3"/>'
        )

    for row in range(k):
        y = sy(row)
        color = "#1a6faf" if converged[row] else "#bbbbbb"
        parts.append(
            f'<line class="ci" x1="{sx(float(lo[row])):.2f}" y1="{y:.2f}" '
            f'x2="{sx(float(hi[row])):.2f}" y2="{y:.2f}" '
            f'stroke="{color}" stroke-width="1"/>'
        )
        parts.append(
            f'<circle class="mean" cx="{sx(float(est[row])):.2f}" cy="{y:.2f}" '
            f'r="2" fill="{color}"/>'
        )

    parts.append(
        f'<text x="{_W / 2:.1f}" y="{_H - 8}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="11">coefficient estimate</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_profile_plots(out_dir, profile: RealizationProfile) -> list:
    """One SVG per coefficient; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for j, name in enumerate(profile.names):
        title = f"{name} ({profile.sentiment} stream, K={profile.k_total})"
        svg = profile_svg(
            title,
            profile.estimates[:, j],
            profile.ci_lower[:, j],
            profile.ci_upper[:, j],
            profile.converged,
        )
        path = out_dir / f"plot_{profile.sentiment}_{name}.svg"
        path.write_text(svg, encoding="utf-8")
        written.append(path)
    return written


def read_profile_table(path) -> RealizationProfile:
    """Parse a profile table written by ``resampler.profile_table``."""
    sentiment = None
    k_total = None
    rows: dict[str, list[tuple[int, float, float, float, bool]]] = {}
    order: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                key = key.strip()
                if key == "sentiment":
                    sentiment = value.strip()
                elif key == "k_total":
                    k_total = int(value.strip())
                continue
            if line.startswith("covariate\t"):
                continue
            name, k, est, lo, hi, conv = line.split("\t")
            if name not in rows:
                rows[name] = []
                order.append(name)
            rows[name].append(
                (int(k), float(est), float(lo), float(hi), conv == "true")
            )
    if sentiment is None or k_total is None or not order:
        raise ValueError(f"not a profile table: {path}")
    p = len(order)
    est = np.zeros((k_total, p))
    lo = np.zeros((k_total, p))
    hi = np.zeros((k_total, p))
    conv = np.ones(k_total, dtype=bool)
    for j, name in enumerate(order):
        for k, e, l, h, c in rows[name]:
            est[k, j] = e
            lo[k, j] = l
            hi[k, j] = h
            conv[k] = conv[k] and c
    return RealizationProfile(
        sentiment=sentiment,
        names=tuple(order),
        estimates=est,
        ci_lower=lo,
        ci_upper=hi,
        converged=conv,
        k_total=k_total,
    )
