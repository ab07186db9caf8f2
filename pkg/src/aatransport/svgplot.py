"""Dependency-light static SVG emitters: log-scale residual line plots and
iteration-count heatmaps.

Data files are the contract; these plots are conveniences for eyeballing
results. No scripting, no external renderer required.
"""

import json
import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 440
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 55

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#17becf", "#7f7f7f"]


def _svg_header(title: str) -> list:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH/2}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{escape(title)}</text>',
    ]


def _axis_text(x, y, s, anchor="middle", size=11, rotate=None) -> str:
    t = (f'<text x="{x:.1f}" y="{y:.1f}" text-anchor="{anchor}" '
         f'font-family="sans-serif" font-size="{size}"')
    if rotate is not None:
        t += f' transform="rotate({rotate} {x:.1f} {y:.1f})"'
    return t + f'>{escape(str(s))}</text>'


def _log_ticks(lo: float, hi: float):
    e0 = int(math.floor(math.log10(lo)))
    e1 = int(math.ceil(math.log10(hi)))
    step = max(1, (e1 - e0) // 8)
    return [10.0**e for e in range(e0, e1 + 1, step)]


def line_plot(series, path: str, title: str = "", xlabel: str = "iteration",
              ylabel: str = "residual", ylog: bool = True) -> None:
    """Write a line plot; series is a list of (label, xs, ys) triples.

    With ylog=True non-positive y values are dropped from the drawn path
    (they cannot appear on a log axis).
    """
    pts = []
    for _, xs, ys in series:
        for x, y in zip(xs, ys):
            if math.isfinite(y) and (y > 0.0 or not ylog):
                pts.append((x, y))
    if not pts:
        raise ValueError("no plottable points")
    x_lo = min(p[0] for p in pts)
    x_hi = max(p[0] for p in pts) or 1
    y_lo = min(p[1] for p in pts)
    y_hi = max(p[1] for p in pts)
    if ylog:
        y_lo, y_hi = math.log10(y_lo), math.log10(y_hi)
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x):
        return MARGIN_L + pw * (x - x_lo) / (x_hi - x_lo)

    def sy(y):
        yv = math.log10(y) if ylog else y
        return MARGIN_T + ph * (1.0 - (yv - y_lo) / (y_hi - y_lo))

    out = _svg_header(title)
    out.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" '
               f'height="{ph}" fill="none" stroke="black"/>')
    # x ticks: ~6 round values
    xstep = max(1, int(round((x_hi - x_lo) / 6)) or 1)
    xt = range(int(x_lo), int(x_hi) + 1, xstep)
    for x in xt:
        out.append(f'<line x1="{sx(x):.1f}" y1="{MARGIN_T+ph}" '
                   f'x2="{sx(x):.1f}" y2="{MARGIN_T+ph+5}" stroke="black"/>')
        out.append(_axis_text(sx(x), MARGIN_T + ph + 18, x))
    yticks = (_log_ticks(10.0**y_lo, 10.0**y_hi) if ylog
              else [y_lo + i * (y_hi - y_lo) / 5 for i in range(6)])
    for y in yticks:
        out.append(f'<line x1="{MARGIN_L-5}" y1="{sy(y):.1f}" '
                   f'x2="{MARGIN_L}" y2="{sy(y):.1f}" stroke="black"/>')
        label = f"1e{int(round(math.log10(y)))}" if ylog else f"{y:.3g}"
        out.append(_axis_text(MARGIN_L - 8, sy(y) + 4, label, anchor="end"))
    out.append(_axis_text(MARGIN_L + pw / 2, HEIGHT - 12, xlabel))
    out.append(_axis_text(18, MARGIN_T + ph / 2, ylabel, rotate=-90))

    for i, (label, xs, ys) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        seg = []
        for x, y in zip(xs, ys):
            if math.isfinite(y) and (y > 0.0 or not ylog):
                seg.append(f"{sx(x):.1f},{sy(y):.1f}")
        if seg:
            out.append(f'<polyline points="{" ".join(seg)}" fill="none" '
                       f'stroke="{color}" stroke-width="1.5"/>')
        ly = MARGIN_T + 16 + 16 * i
        out.append(f'<line x1="{MARGIN_L+pw-150}" y1="{ly-4}" '
                   f'x2="{MARGIN_L+pw-125}" y2="{ly-4}" stroke="{color}" '
                   f'stroke-width="1.5"/>')
        out.append(_axis_text(MARGIN_L + pw - 120, ly, label, anchor="start"))

    out.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")


def _viridis_lerp(t: float) -> str:
    # coarse 5-stop approximation of a perceptual colormap
    stops = [(68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98),
             (253, 231, 37)]
    t = min(1.0, max(0.0, t))
    pos = t * (len(stops) - 1)
    i = min(int(pos), len(stops) - 2)
    frac = pos - i
    rgb = [round(a + frac * (b - a))
           for a, b in zip(stops[i], stops[i + 1])]
    return f"rgb({rgb[0]},{rgb[1]},{rgb[2]})"


def heatmap(x_labels, y_labels, values, path: str, title: str = "",
            xlabel: str = "", ylabel: str = "") -> None:
    """Write a heatmap; values[i][j] corresponds to (y_labels[i],
    x_labels[j]). None/NaN cells are rendered empty (failed solves). The
    auto-scaled color range is recorded in the SVG metadata.
    """
    finite = [v for row in values for v in row
              if v is not None and math.isfinite(v)]
    v_lo = min(finite) if finite else 0.0
    v_hi = max(finite) if finite else 1.0
    if v_hi == v_lo:
        v_hi = v_lo + 1.0
    pw = WIDTH - MARGIN_L - MARGIN_R - 60   # room for the colorbar
    ph = HEIGHT - MARGIN_T - MARGIN_B
    nx, ny = len(x_labels), len(y_labels)
    cw, ch = pw / nx, ph / ny

    out = _svg_header(title)
    meta = {"color_range": [v_lo, v_hi]}
    out.append(f"<metadata>{escape(json.dumps(meta))}</metadata>")
    for i in range(ny):
        for j in range(nx):
            v = values[i][j]
            x = MARGIN_L + j * cw
            y = MARGIN_T + (ny - 1 - i) * ch
            if v is None or not math.isfinite(v):
                fill = "white"
            else:
                fill = _viridis_lerp((v - v_lo) / (v_hi - v_lo))
            out.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{cw:.2f}" '
                       f'height="{ch:.2f}" fill="{fill}" '
                       f'stroke="#ddd" stroke-width="0.5"/>')
    xev = max(1, nx // 10)
    for j in range(0, nx, xev):
        out.append(_axis_text(MARGIN_L + (j + 0.5) * cw, MARGIN_T + ph + 16,
                              x_labels[j], size=10))
    yev = max(1, ny // 12)
    for i in range(0, ny, yev):
        out.append(_axis_text(MARGIN_L - 6,
                              MARGIN_T + (ny - 1 - i + 0.65) * ch,
                              y_labels[i], anchor="end", size=10))
    out.append(_axis_text(MARGIN_L + pw / 2, HEIGHT - 12, xlabel))
    out.append(_axis_text(18, MARGIN_T + ph / 2, ylabel, rotate=-90))

    # colorbar
    cb_x = MARGIN_L + pw + 20
    nseg = 32
    for s in range(nseg):
        t = s / (nseg - 1)
        y = MARGIN_T + ph * (1 - (s + 1) / nseg)
        out.append(f'<rect x="{cb_x}" y="{y:.1f}" width="16" '
                   f'height="{ph/nseg:.2f}" fill="{_viridis_lerp(t)}"/>')
    out.append(_axis_text(cb_x + 20, MARGIN_T + ph, f"{v_lo:.0f}",
                          anchor="start", size=10))
    out.append(_axis_text(cb_x + 20, MARGIN_T + 8, f"{v_hi:.0f}",
                          anchor="start", size=10))
    out.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")
