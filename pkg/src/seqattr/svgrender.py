"""Static SVG renderings of matrix grids and temporal pattern graphs.

Batch artifacts for reports: cells plus a colormap legend for grids,
frequency-scaled nodes and edges for graphs.  Output is deterministic,
all coordinates formatted to four decimals.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

HEAT_POS = "#2166ac"      # cool end of the diverging ramp, positive-leaning
HEAT_NEG = "#b2182b"      # warm end, negative-leaning
CLASS_POS = "#7b3294"     # positive class in graph views
CLASS_NEG = "#e66101"     # negative class

CELL = 16.0
GAP = 34.0
MARGIN = 46.0
FONT = "font-family=\"sans-serif\" font-size=\"10\""


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def _blend(hex_from: str, hex_to: str, t: float) -> str:
    t = min(max(t, 0.0), 1.0)
    a = [int(hex_from[i:i + 2], 16) for i in (1, 3, 5)]
    b = [int(hex_to[i:i + 2], 16) for i in (1, 3, 5)]
    return "#" + "".join(f"{round(u + (v - u) * t):02x}" for u, v in zip(a, b))


def heat_fill(display: float) -> str:
    """Diverging color for a display value in [-1, 1]: white at zero.

    Positive-leaning values go cool, negative-leaning warm.
    """
    if display >= 0:
        return _blend("#ffffff", HEAT_POS, display)
    return _blend("#ffffff", HEAT_NEG, -display)


def _rect(x, y, w, h, fill, extra="") -> str:
    return (f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" '
            f'height="{_fmt(h)}" fill="{fill}"{extra}/>')


def _text(x, y, s, anchor="start") -> str:
    return (f'<text x="{_fmt(x)}" y="{_fmt(y)}" {FONT} '
            f'text-anchor="{anchor}">{escape(str(s))}</text>')


def _legend(x, y, width) -> list:
    parts = [_text(x, y - 4, "-1"), _text(x + width, y - 4, "+1", anchor="end"),
             _text(x + width / 2, y - 4, "0", anchor="middle")]
    steps = 40
    for i in range(steps):
        v = -1.0 + 2.0 * (i + 0.5) / steps
        parts.append(_rect(x + width * i / steps, y, width / steps + 0.5, 10.0,
                           heat_fill(v)))
    return parts


def render_grid(doc: dict) -> str:
    """SVG for a grid export: one block per attribute pair, row-major."""
    attrs = doc["attributes"]
    n = len(attrs)
    level_counts = [len(a["levels"]) for a in attrs]
    col_w = [k * CELL for k in level_counts]
    row_h = [k * CELL for k in level_counts]
    x_off, acc = [], MARGIN
    for w in col_w:
        x_off.append(acc)
        acc += w + GAP
    total_w = acc - GAP + MARGIN
    y_off, acc = [], MARGIN + 24.0
    for h in row_h:
        y_off.append(acc)
        acc += h + GAP
    legend_y = acc + 8.0
    total_h = legend_y + 40.0

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(total_w)}" '
        f'height="{_fmt(total_h)}" viewBox="0 0 {_fmt(total_w)} {_fmt(total_h)}">',
        _rect(0, 0, total_w, total_h, "#ffffff"),
    ]
    s = doc["slice"]
    title = (f'attention [{s["att_lo"]}, {s["att_hi"]}]  '
             f't [{s["t0"]}, {s["t1"]}]  mode {s["mode"]}  epoch {s["epoch"]}')
    parts.append(_text(MARGIN, 16.0, title))

    for i, a in enumerate(attrs):
        parts.append(_text(x_off[i] + col_w[i] / 2, y_off[0] - 8.0,
                           a["name"], anchor="middle"))
        parts.append(_text(MARGIN - 8.0, y_off[i] + row_h[i] / 2 + 3.0,
                           a["name"], anchor="end"))

    for m in doc["matrices"]:
        display = m["display"] if m["display"] is not None else m["display_pos"]
        x0, y0 = x_off[m["p"]], y_off[m["q"]]
        for r, row in enumerate(display):
            for c, v in enumerate(row):
                parts.append(_rect(x0 + c * CELL, y0 + r * CELL, CELL, CELL,
                                   heat_fill(v),
                                   ' stroke="#dddddd" stroke-width="0.5"'))
    parts.extend(_legend(MARGIN, legend_y, 160.0))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _node_color(freq_pos: int, freq_neg: int) -> str:
    return CLASS_POS if freq_pos >= freq_neg else CLASS_NEG


def _render_graph(g: dict, x0: float, y0: float, width: float, height: float,
                  label: str) -> list:
    axes = g["axes"]
    n_pos = max(g["n_positions"], 1)
    col = width / max(len(axes), 1)
    row = height / n_pos
    x_of = {t: x0 + (i + 0.5) * col for i, t in enumerate(axes)}

    def y_of(pos):
        return y0 + (pos + 0.5) * row

    parts = [_text(x0, y0 - 6.0, label)]
    for i, t in enumerate(axes):
        parts.append(_text(x0 + (i + 0.5) * col, y0 + height + 14.0, t,
                           anchor="middle"))
    max_edge = max(g["max_edge_freq"], 1)
    for e in g["edges"]:
        (t_a, p_a), (t_b, p_b) = e["from"], e["to"]
        xa, ya = x_of[t_a], y_of(p_a)
        xb, yb = x_of[t_b], y_of(p_b)
        total = e["freq_pos"] + e["freq_neg"]
        opacity = 0.15 + 0.85 * total / max_edge
        color = _node_color(e["freq_pos"], e["freq_neg"])
        if e["curved"]:
            # arc above the shared track, lifted by the timestep span
            cx, cy = (xa + xb) / 2, ya - min(row, 10.0) * (1 + e["curvature"] / 2)
            parts.append(
                f'<path d="M {_fmt(xa)} {_fmt(ya)} Q {_fmt(cx)} {_fmt(cy)} '
                f'{_fmt(xb)} {_fmt(yb)}" fill="none" stroke="{color}" '
                f'stroke-width="1.5" stroke-opacity="{_fmt(opacity)}"/>'
            )
        else:
            parts.append(
                f'<line x1="{_fmt(xa)}" y1="{_fmt(ya)}" x2="{_fmt(xb)}" '
                f'y2="{_fmt(yb)}" stroke="{color}" stroke-width="1.5" '
                f'stroke-opacity="{_fmt(opacity)}"/>'
            )
    max_node = max(g["max_node_freq"], 1)
    for nd in g["nodes"]:
        total = nd["freq_pos"] + nd["freq_neg"]
        opacity = 0.25 + 0.75 * total / max_node
        r = 2.5 + 3.5 * total / max_node
        parts.append(
            f'<circle cx="{_fmt(x_of[nd["t"]])}" cy="{_fmt(y_of(nd["pos"]))}" '
            f'r="{_fmt(r)}" fill="{_node_color(nd["freq_pos"], nd["freq_neg"])}" '
            f'fill-opacity="{_fmt(opacity)}"/>'
        )
    return parts


def render_tpartite(doc: dict) -> str:
    """SVG for a graph envelope: one panel per graph, stacked vertically."""
    graphs = doc["graphs"]
    width = 560.0
    panel_h = 200.0
    total_h = 30.0 + len(graphs) * (panel_h + 50.0)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" '
        f'height="{_fmt(total_h)}" viewBox="0 0 {_fmt(width)} {_fmt(total_h)}">',
        _rect(0, 0, width, total_h, "#ffffff"),
    ]
    name2 = f' x {doc["attr2"]}' if doc["attr2"] else ""
    for i, g in enumerate(graphs):
        cls = f' class {g["class"]}' if g["class"] else ""
        label = f'{doc["attr"]}{name2}{cls}  epoch {doc["epoch"]}'
        parts.extend(_render_graph(g, 40.0, 40.0 + i * (panel_h + 50.0),
                                   width - 80.0, panel_h, label))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
