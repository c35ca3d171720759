"""Static SVG renderings of the diagnostic artifacts.

Everything here is deterministic: fixed canvas sizes, fixed numeric
formatting, no timestamps and no randomness, so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import math

import numpy as np

from .explain import DependenceSeries, ShapMatrix, rank_features
from .stats import CorrelationMatrix, HistogramStats, SurfaceGrid

WIDTH, HEIGHT = 640, 480
MARGIN = 60


def _fmt(x: float) -> str:
    if isinstance(x, float) and not math.isfinite(x):
        return "nan"
    return f"{x:.6g}"


def _lerp(a, b, t):
    return tuple(int(round(a[i] + (b[i] - a[i]) * t)) for i in range(3))


def _seq_color(t: float) -> str:
    """Dark blue -> teal -> yellow ramp for magnitudes in [0, 1]."""
    t = min(max(t, 0.0), 1.0)
    anchors = [(68, 1, 84), (33, 145, 140), (253, 231, 37)]
    if t < 0.5:
        rgb = _lerp(anchors[0], anchors[1], t * 2)
    else:
        rgb = _lerp(anchors[1], anchors[2], (t - 0.5) * 2)
    return f"rgb({rgb[0]},{rgb[1]},{rgb[2]})"


def _div_color(r: float) -> str:
    """Blue (-1) -> white (0) -> red (+1)."""
    r = min(max(r, -1.0), 1.0)
    if r < 0:
        rgb = _lerp((255, 255, 255), (33, 102, 172), -r)
    else:
        rgb = _lerp((255, 255, 255), (178, 24, 43), r)
    return f"rgb({rgb[0]},{rgb[1]},{rgb[2]})"


def _document(body: list, width=WIDTH, height=HEIGHT) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">\n'
        '<defs><pattern id="nodata" width="6" height="6" '
        'patternUnits="userSpaceOnUse" patternTransform="rotate(45)">'
        '<rect width="6" height="6" fill="#f4f4f4"/>'
        '<line x1="0" y1="0" x2="0" y2="6" stroke="#b0b0b0" stroke-width="2"/>'
        "</pattern></defs>\n"
        f'<rect width="{width}" height="{height}" fill="white"/>\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


def _text(x, y, s, size=11, anchor="middle", rotate=None) -> str:
    transform = f' transform="rotate(-90 {_fmt(x)} {_fmt(y)})"' if rotate else ""
    return (
        f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-family="monospace" '
        f'font-size="{size}" text-anchor="{anchor}"{transform}>{s}</text>'
    )


def render_histogram(h: HistogramStats) -> str:
    body = [_text(WIDTH / 2, 24, f"{h.param} (n={h.n})", size=14)]
    plot_w = WIDTH - 2 * MARGIN
    plot_h = HEIGHT - 2 * MARGIN
    peak = max(int(h.counts.max()), 1)
    nb = len(h.counts)
    for i, count in enumerate(h.counts):
        bw = plot_w / nb
        bh = plot_h * int(count) / peak
        x = MARGIN + i * bw
        y = HEIGHT - MARGIN - bh
        body.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(bw)}" '
            f'height="{_fmt(bh)}" fill="#4878a8" stroke="white" stroke-width="0.5"/>'
        )
    body.append(
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" stroke="black"/>'
    )
    body.append(_text(MARGIN, HEIGHT - MARGIN + 16, _fmt(float(h.edges[0])), anchor="start"))
    body.append(
        _text(WIDTH - MARGIN, HEIGHT - MARGIN + 16, _fmt(float(h.edges[-1])), anchor="end")
    )
    body.append(
        _text(
            WIDTH / 2,
            HEIGHT - 12,
            f"skew={_fmt(h.skew)} uniform_p={_fmt(h.uniform_p)}",
        )
    )
    return _document(body)


def render_correlation_matrix(c: CorrelationMatrix, marked_pairs=()) -> str:
    """Heatmap; ``marked_pairs`` is a list of (col_a, col_b, marker_color)."""
    p = c.p
    side = min(WIDTH, HEIGHT) - 2 * MARGIN
    cell = side / p
    body = [_text(WIDTH / 2, 24, "pearson correlation", size=14)]
    for i in range(p):
        for j in range(p):
            x = MARGIN + j * cell
            y = MARGIN + i * cell
            fill = _div_color(float(c.r[i, j])) if c.defined[i, j] else "url(#nodata)"
            body.append(
                f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(cell)}" '
                f'height="{_fmt(cell)}" fill="{fill}" stroke="#dddddd" stroke-width="0.5"/>'
            )
    cols = list(c.columns)
    for a, b, color in marked_pairs:
        for i, j in ((cols.index(a), cols.index(b)), (cols.index(b), cols.index(a))):
            cx = MARGIN + (j + 0.5) * cell
            cy = MARGIN + (i + 0.5) * cell
            d = cell * 0.3
            for sx in (-1, 1):
                body.append(
                    f'<line x1="{_fmt(cx - d)}" y1="{_fmt(cy - sx * d)}" '
                    f'x2="{_fmt(cx + d)}" y2="{_fmt(cy + sx * d)}" '
                    f'stroke="{color}" stroke-width="2"/>'
                )
    for i, name in enumerate(cols):
        body.append(
            _text(MARGIN - 6, MARGIN + (i + 0.5) * cell + 4, name, size=9, anchor="end")
        )
        body.append(
            _text(
                MARGIN + (i + 0.5) * cell,
                MARGIN + side + 10,
                name,
                size=9,
                anchor="end",
                rotate=True,
            )
        )
    return _document(body)


def render_surface(g: SurfaceGrid) -> str:
    res_x = len(g.x_edges) - 1
    res_y = len(g.y_edges) - 1
    side = min(WIDTH, HEIGHT) - 2 * MARGIN
    cw, ch = side / res_x, side / res_y
    finite = g.cell_mean[np.isfinite(g.cell_mean)]
    lo = float(finite.min()) if finite.size else 0.0
    hi = float(finite.max()) if finite.size else 1.0
    span = hi - lo if hi > lo else 1.0
    body = [_text(WIDTH / 2, 24, f"{g.x_param} vs {g.y_param}", size=14)]
    for i in range(res_x):
        for j in range(res_y):
            v = g.cell_mean[i, j]
            # empty cells get an explicit hatch, never a zero colour
            fill = "url(#nodata)" if not np.isfinite(v) else _seq_color((v - lo) / span)
            x = MARGIN + i * cw
            y = MARGIN + side - (j + 1) * ch
            body.append(
                f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(cw)}" '
                f'height="{_fmt(ch)}" fill="{fill}"/>'
            )
    body.append(_text(MARGIN, MARGIN + side + 16, _fmt(float(g.x_edges[0])), anchor="start"))
    body.append(
        _text(MARGIN + side, MARGIN + side + 16, _fmt(float(g.x_edges[-1])), anchor="end")
    )
    body.append(_text(MARGIN - 6, MARGIN + side, _fmt(float(g.y_edges[0])), anchor="end"))
    body.append(_text(MARGIN - 6, MARGIN + 10, _fmt(float(g.y_edges[-1])), anchor="end"))
    return _document(body)


def render_shap_summary(m: ShapMatrix, max_features: int = 15) -> str:
    """Per-feature strips of SHAP values, ordered top-to-bottom by importance,
    coloured by the (normalised) raw feature value."""
    ranked = rank_features(m)[:max_features]
    phi = m.phi_matrix()
    cols = list(m.columns)
    span = float(np.max(np.abs(phi))) or 1.0
    plot_w = WIDTH - 2 * MARGIN - 60
    row_h = (HEIGHT - 2 * MARGIN) / max(len(ranked), 1)
    body = [_text(WIDTH / 2, 24, "shap summary", size=14)]
    x_zero = MARGIN + 60 + plot_w / 2
    body.append(
        f'<line x1="{_fmt(x_zero)}" y1="{MARGIN}" x2="{_fmt(x_zero)}" '
        f'y2="{HEIGHT - MARGIN}" stroke="#999999" stroke-dasharray="3,3"/>'
    )
    for row_i, (name, _imp) in enumerate(ranked):
        ci = cols.index(name)
        cy = MARGIN + (row_i + 0.5) * row_h
        body.append(_text(MARGIN + 54, cy + 4, name, size=9, anchor="end"))
        vals = m.feature_values[:, ci]
        vlo, vhi = float(vals.min()), float(vals.max())
        vspan = vhi - vlo if vhi > vlo else 1.0
        for k in range(m.n):
            px = x_zero + (phi[k, ci] / span) * (plot_w / 2)
            jitter = ((k * 37) % 11 - 5) * (row_h * 0.06)
            color = _div_color(2.0 * (vals[k] - vlo) / vspan - 1.0)
            body.append(
                f'<circle cx="{_fmt(px)}" cy="{_fmt(cy + jitter)}" r="2.2" '
                f'fill="{color}" fill-opacity="0.75"/>'
            )
    body.append(_text(x_zero, HEIGHT - MARGIN + 18, "shap value", size=11))
    return _document(body)


def render_dependence(series: DependenceSeries) -> str:
    body = [
        _text(WIDTH / 2, 24, f"{series.feature} (colour: {series.interaction})", size=14)
    ]
    if series.points:
        fv = np.array([p[0] for p in series.points])
        sv = np.array([p[1] for p in series.points])
        iv = np.array([p[2] for p in series.points])
        flo, fhi = float(fv.min()), float(fv.max())
        slo, shi = float(sv.min()), float(sv.max())
        ilo, ihi = float(iv.min()), float(iv.max())
        fsp = fhi - flo or 1.0
        ssp = shi - slo or 1.0
        isp = ihi - ilo or 1.0
        plot_w = WIDTH - 2 * MARGIN
        plot_h = HEIGHT - 2 * MARGIN
        for k in range(len(series.points)):
            x = MARGIN + (fv[k] - flo) / fsp * plot_w
            y = HEIGHT - MARGIN - (sv[k] - slo) / ssp * plot_h
            body.append(
                f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="2.5" '
                f'fill="{_seq_color((iv[k] - ilo) / isp)}" fill-opacity="0.8"/>'
            )
        body.append(_text(MARGIN, HEIGHT - MARGIN + 16, _fmt(flo), anchor="start"))
        body.append(_text(WIDTH - MARGIN, HEIGHT - MARGIN + 16, _fmt(fhi), anchor="end"))
        body.append(_text(MARGIN - 6, HEIGHT - MARGIN, _fmt(slo), anchor="end"))
        body.append(_text(MARGIN - 6, MARGIN + 10, _fmt(shi), anchor="end"))
    body.append(_text(WIDTH / 2, HEIGHT - 12, series.feature, size=11))
    return _document(body)


def emit_svg(artifact, path) -> None:
    """Render a supported artifact to a self-contained SVG file."""
    if isinstance(artifact, HistogramStats):
        doc = render_histogram(artifact)
    elif isinstance(artifact, CorrelationMatrix):
        doc = render_correlation_matrix(artifact)
    elif isinstance(artifact, SurfaceGrid):
        doc = render_surface(artifact)
    elif isinstance(artifact, ShapMatrix):
        doc = render_shap_summary(artifact)
    elif isinstance(artifact, DependenceSeries):
        doc = render_dependence(artifact)
    else:
        raise TypeError(f"cannot render {type(artifact).__name__}")
    with open(path, "w", newline="\n") as fh:
        fh.write(doc)
