"""Deterministic SVG figures and the serialized audit bundle.

Every renderer is a pure function of its inputs: no timestamps, no
generated ids, stable float formatting. Rendering the same bundle twice
yields byte-identical files, which is what the determinism contract and
the tests rely on.

Heatmap color scale (fixed, documented): piecewise-linear interpolation
through the anchors 0.00 #0d0887, 0.25 #7e03a8, 0.50 #cc4778,
0.75 #f89540, 1.00 #f0f921, over the value range [0, 1]. Correlation
heatmaps map [-1, 1] onto the same scale via (rho + 1) / 2. Cells whose
value was imputed (flagged) carry a hatched overlay.
"""

from __future__ import annotations

import json
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np
from jsonschema import validate as _schema_validate

from . import METRIC_NAMES
from .cluster import DistanceVector, Linkage, leaf_order
from .fairmatrix import (MetricsMatrix, Provenance, RowKey, kind_sort_key,
                         matrix_csv_text)
from .pca import AlignedProjection
from .robustness import CorrelationSummary

_HEAT_ANCHORS = (
    (0.00, (13, 8, 135)),
    (0.25, (126, 3, 168)),
    (0.50, (204, 71, 120)),
    (0.75, (248, 149, 64)),
    (1.00, (240, 249, 33)),
)

# Okabe-Ito palette; cycles if a feature has more than eight groups.
GROUP_COLORS = ("#0072b2", "#d55e00", "#009e73", "#cc79a7",
                "#e69f00", "#56b4e9", "#f0e442", "#999999")

MARKER_SHAPES = ("circle", "square", "triangle", "diamond", "cross", "plus")


def heat_color(value: float) -> str:
    """Hex color for a value in [0,1] on the documented fixed scale."""
    v = min(1.0, max(0.0, float(value)))
    for (p0, c0), (p1, c1) in zip(_HEAT_ANCHORS, _HEAT_ANCHORS[1:]):
        if v <= p1:
            t = 0.0 if p1 == p0 else (v - p0) / (p1 - p0)
            rgb = tuple(round(a + t * (b - a)) for a, b in zip(c0, c1))
            return "#%02x%02x%02x" % rgb
    return "#%02x%02x%02x" % _HEAT_ANCHORS[-1][1]


def _luma(hex_color: str) -> float:
    r, g, b = (int(hex_color[i:i + 2], 16) for i in (1, 3, 5))
    return 0.299 * r + 0.587 * g + 0.114 * b


def _fmt(x: float) -> str:
    # stable short coordinate format, no trailing zeros
    s = "%.2f" % float(x)
    return s.rstrip("0").rstrip(".") if "." in s else s


def _esc(s: str) -> str:
    return escape(str(s), {'"': "&quot;"})


def _dendrogram_paths(linkage: Linkage, positions: dict[int, float],
                      span: float, horizontal: bool,
                      base: float, sign: float) -> list[str]:
    """One bracket path per merge.

    positions maps leaf id -> center coordinate along the leaf axis;
    heights are scaled into `span` pixels away from `base` along the
    other axis (direction `sign`).
    """
    hmax = max((m[2] for m in linkage.merges), default=0.0)
    if hmax <= 0.0:
        hmax = 1.0
    pos = dict(positions)
    depth = {i: base for i in positions}
    paths = []
    n = linkage.n_leaves
    for s, (a, b, h, _size) in enumerate(linkage.merges):
        y = base + sign * (4.0 + (h / hmax) * (span - 8.0))
        xa, xb = pos[a], pos[b]
        ya, yb = depth[a], depth[b]
        if horizontal:  # leaf axis is x, heights go vertical
            d = (f"M {_fmt(xa)} {_fmt(ya)} L {_fmt(xa)} {_fmt(y)} "
                 f"L {_fmt(xb)} {_fmt(y)} L {_fmt(xb)} {_fmt(yb)}")
        else:  # leaf axis is y, heights go horizontal
            d = (f"M {_fmt(ya)} {_fmt(xa)} L {_fmt(y)} {_fmt(xa)} "
                 f"L {_fmt(y)} {_fmt(xb)} L {_fmt(yb)} {_fmt(xb)}")
        paths.append(f'<path class="merge" d="{d}" fill="none" '
                     f'stroke="#333" stroke-width="1"/>')
        pos[n + s] = (xa + xb) / 2.0
        depth[n + s] = y
    return paths


def render_clustermap_svg(matrix: MetricsMatrix, col_linkage: Linkage,
                          row_linkage: Linkage,
                          col_variances: np.ndarray | None = None) -> str:
    """Heatmap of M_p with dendrograms, per-metric variances in the labels.

    Cell order follows the deterministic leaf order of both linkages.
    Flagged (imputed) cells get a hatched overlay.
    """
    values = matrix.values
    n_rows, n_cols = values.shape
    if col_linkage.n_leaves != n_cols or row_linkage.n_leaves != n_rows:
        raise ValueError("linkage sizes do not match the matrix")
    if col_variances is None:
        col_variances = matrix.column_variances

    cw, ch = 34, 22
    dend = 78
    margin = 10
    title_h = 20
    label_bottom = 118
    label_right = 8 + 7 * max(len(str(r)) for r in matrix.rows)
    x0 = margin + dend
    y0 = margin + title_h + dend
    width = x0 + n_cols * cw + label_right + margin
    height = y0 + n_rows * ch + label_bottom + margin

    col_order = leaf_order(col_linkage)
    row_order = leaf_order(row_linkage)

    p = matrix.provenance
    title = f"{p.dataset} / {p.feature} / seed {p.seed} ({p.aggregation}-averaged)"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" '
        f'width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        "<defs>",
        '<pattern id="hatch" width="5" height="5" patternUnits="userSpaceOnUse" '
        'patternTransform="rotate(45)">'
        '<line x1="0" y1="0" x2="0" y2="5" stroke="#ffffff" stroke-width="1.4" '
        'stroke-opacity="0.85"/></pattern>',
        "</defs>",
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{margin}" y="{margin + 12}" font-size="12" fill="#222">{_esc(title)}</text>',
    ]

    # dendrograms
    col_pos = {leaf: x0 + (i + 0.5) * cw for i, leaf in enumerate(col_order)}
    row_pos = {leaf: y0 + (i + 0.5) * ch for i, leaf in enumerate(row_order)}
    out.append('<g id="col-dendrogram">')
    out.extend(_dendrogram_paths(col_linkage, col_pos, dend - 6,
                                 horizontal=True, base=y0 - 2, sign=-1.0))
    out.append("</g>")
    out.append('<g id="row-dendrogram">')
    out.extend(_dendrogram_paths(row_linkage, row_pos, dend - 6,
                                 horizontal=False, base=x0 - 2, sign=-1.0))
    out.append("</g>")

    # heatmap cells, hatched when flagged
    out.append('<g id="cells">')
    for di, ri in enumerate(row_order):
        for dj, cj in enumerate(col_order):
            x = x0 + dj * cw
            y = y0 + di * ch
            v = float(values[ri, cj])
            tip = f"{matrix.rows[ri]} {matrix.metric_names[cj]}={v:.6g}"
            out.append(
                f'<rect class="cell" x="{_fmt(x)}" y="{_fmt(y)}" width="{cw}" '
                f'height="{ch}" fill="{heat_color(v)}" stroke="#ffffff" '
                f'stroke-width="0.5"><title>{_esc(tip)}</title></rect>')
            if bool(matrix.flags[ri, cj]):
                out.append(
                    f'<rect class="flag" x="{_fmt(x)}" y="{_fmt(y)}" width="{cw}" '
                    f'height="{ch}" fill="url(#hatch)"/>')
    out.append("</g>")

    # column labels: metric name with its variance, 3 decimals
    out.append('<g id="col-labels">')
    yl = y0 + n_rows * ch + 14
    for dj, cj in enumerate(col_order):
        x = x0 + (dj + 0.5) * cw
        text = f"{matrix.metric_names[cj]} ({float(col_variances[cj]):.3f})"
        out.append(f'<text x="{_fmt(x)}" y="{_fmt(yl)}" text-anchor="end" '
                   f'transform="rotate(-55 {_fmt(x)} {_fmt(yl)})">{_esc(text)}</text>')
    out.append("</g>")

    # row labels: "model:group"
    out.append('<g id="row-labels">')
    xl = x0 + n_cols * cw + 6
    for di, ri in enumerate(row_order):
        y = y0 + (di + 0.5) * ch + 4
        out.append(f'<text x="{_fmt(xl)}" y="{_fmt(y)}">{_esc(str(matrix.rows[ri]))}</text>')
    out.append("</g>")

    # color scale strip
    out.append('<g id="scale">')
    sy = y0 + n_rows * ch + label_bottom - 26
    for i in range(12):
        v = i / 11.0
        out.append(f'<rect x="{_fmt(margin + i * 14)}" y="{_fmt(sy)}" width="14" '
                   f'height="10" fill="{heat_color(v)}"/>')
    out.append(f'<text x="{margin}" y="{_fmt(sy - 3)}" font-size="10">0</text>')
    out.append(f'<text x="{_fmt(margin + 12 * 14)}" y="{_fmt(sy - 3)}" '
               f'font-size="10" text-anchor="end">1</text>')
    out.append("</g>")

    out.append("</svg>")
    return "\n".join(out) + "\n"


def _marker(shape: str, x: float, y: float, color: str, tip: str) -> str:
    r = 5.0
    t = f"<title>{_esc(tip)}</title>"
    if shape == "circle":
        return (f'<circle class="pt" cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r)}" '
                f'fill="{color}" stroke="#333" stroke-width="0.8">{t}</circle>')
    if shape == "square":
        return (f'<rect class="pt" x="{_fmt(x - r + 0.5)}" y="{_fmt(y - r + 0.5)}" '
                f'width="{_fmt(2 * r - 1)}" height="{_fmt(2 * r - 1)}" '
                f'fill="{color}" stroke="#333" stroke-width="0.8">{t}</rect>')
    if shape == "triangle":
        pts = f"{_fmt(x)},{_fmt(y - r)} {_fmt(x - r)},{_fmt(y + r - 1)} {_fmt(x + r)},{_fmt(y + r - 1)}"
        return (f'<polygon class="pt" points="{pts}" fill="{color}" '
                f'stroke="#333" stroke-width="0.8">{t}</polygon>')
    if shape == "diamond":
        pts = f"{_fmt(x)},{_fmt(y - r - 1)} {_fmt(x + r + 1)},{_fmt(y)} {_fmt(x)},{_fmt(y + r + 1)} {_fmt(x - r - 1)},{_fmt(y)}"
        return (f'<polygon class="pt" points="{pts}" fill="{color}" '
                f'stroke="#333" stroke-width="0.8">{t}</polygon>')
    if shape == "cross":
        d = (f"M {_fmt(x - r)} {_fmt(y - r)} L {_fmt(x + r)} {_fmt(y + r)} "
             f"M {_fmt(x - r)} {_fmt(y + r)} L {_fmt(x + r)} {_fmt(y - r)}")
        return (f'<path class="pt" d="{d}" stroke="{color}" '
                f'stroke-width="2.4" fill="none">{t}</path>')
    if shape == "plus":
        d = (f"M {_fmt(x - r)} {_fmt(y)} L {_fmt(x + r)} {_fmt(y)} "
             f"M {_fmt(x)} {_fmt(y - r)} L {_fmt(x)} {_fmt(y + r)}")
        return (f'<path class="pt" d="{d}" stroke="{color}" '
                f'stroke-width="2.4" fill="none">{t}</path>')
    raise ValueError(f"unknown marker shape {shape!r}")


def render_pca_scatter_svg(aligned: AlignedProjection, title: str = "") -> str:
    """Aligned two-component scatter: marker per model, color per group.

    The reference group sits at the origin crosshair for every model by
    construction. Axis labels carry the explained-variance fractions.
    """
    k = aligned.ratios.shape[0]
    if k != 2:
        raise ValueError(f"scatter needs exactly 2 components, got {k}")
    # canonical model order keeps marker shapes stable however the
    # coords dict was built (fresh run vs rehydrated bundle)
    models = sorted(aligned.coords, key=kind_sort_key)
    groups = list(aligned.group_labels)

    width, height = 640, 470
    ml, mr, mt, mb = 70, 190, 18, 52
    pw, ph = width - ml - mr, height - mt - mb

    pts = np.vstack([aligned.coords[m] for m in models])
    lo = np.minimum(pts.min(axis=0), 0.0)
    hi = np.maximum(pts.max(axis=0), 0.0)
    span = np.maximum(hi - lo, 1e-9)
    lo = lo - 0.08 * span
    hi = hi + 0.08 * span

    def sx(v: float) -> float:
        return ml + (v - lo[0]) / (hi[0] - lo[0]) * pw

    def sy(v: float) -> float:
        return mt + (hi[1] - v) / (hi[1] - lo[1]) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" '
        f'width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#888"/>',
    ]
    if title:
        out.append(f'<text x="{ml}" y="{mt - 5}" font-size="12" fill="#222">{_esc(title)}</text>')

    # origin crosshair: the reference group's position in every model
    out.append(f'<line class="crosshair" x1="{_fmt(sx(0))}" y1="{_fmt(mt)}" '
               f'x2="{_fmt(sx(0))}" y2="{_fmt(mt + ph)}" stroke="#aaaaaa" '
               f'stroke-dasharray="4 3"/>')
    out.append(f'<line class="crosshair" x1="{_fmt(ml)}" y1="{_fmt(sy(0))}" '
               f'x2="{_fmt(ml + pw)}" y2="{_fmt(sy(0))}" stroke="#aaaaaa" '
               f'stroke-dasharray="4 3"/>')

    # ticks
    for i in range(5):
        vx = lo[0] + i * (hi[0] - lo[0]) / 4
        vy = lo[1] + i * (hi[1] - lo[1]) / 4
        out.append(f'<text x="{_fmt(sx(vx))}" y="{_fmt(mt + ph + 14)}" '
                   f'text-anchor="middle" font-size="10">{"%.2g" % vx}</text>')
        out.append(f'<text x="{_fmt(ml - 6)}" y="{_fmt(sy(vy) + 3)}" '
                   f'text-anchor="end" font-size="10">{"%.2g" % vy}</text>')

    # axis labels with explained-variance fractions
    out.append(f'<text x="{_fmt(ml + pw / 2)}" y="{_fmt(height - 14)}" text-anchor="middle">'
               f'component 1 ({aligned.ratios[0]:.2f} of variance)</text>')
    out.append(f'<text x="14" y="{_fmt(mt + ph / 2)}" text-anchor="middle" '
               f'transform="rotate(-90 14 {_fmt(mt + ph / 2)})">'
               f'component 2 ({aligned.ratios[1]:.2f} of variance)</text>')

    out.append('<g id="points">')
    for mi, model in enumerate(models):
        shape = MARKER_SHAPES[mi % len(MARKER_SHAPES)]
        coords = aligned.coords[model]
        for gi, group in enumerate(groups):
            color = GROUP_COLORS[gi % len(GROUP_COLORS)]
            x, y = float(coords[gi, 0]), float(coords[gi, 1])
            out.append(_marker(shape, sx(x), sy(y), color,
                               f"{model}:{group} ({x:.4g}, {y:.4g})"))
    out.append("</g>")

    # legend: groups (colors), then models (shapes)
    lx = width - mr + 16
    ly = mt + 8
    out.append('<g id="legend">')
    out.append(f'<text x="{lx}" y="{ly}" font-weight="bold">groups</text>')
    for gi, group in enumerate(groups):
        ly += 17
        color = GROUP_COLORS[gi % len(GROUP_COLORS)]
        mark = " (reference)" if group == aligned.reference else ""
        out.append(f'<rect x="{lx}" y="{ly - 9}" width="11" height="11" fill="{color}"/>')
        out.append(f'<text x="{lx + 16}" y="{ly}">{_esc(group + mark)}</text>')
    ly += 26
    out.append(f'<text x="{lx}" y="{ly}" font-weight="bold">models</text>')
    for mi, model in enumerate(models):
        ly += 17
        shape = MARKER_SHAPES[mi % len(MARKER_SHAPES)]
        out.append(_marker(shape, lx + 5, ly - 4, "#666666", model))
        out.append(f'<text x="{lx + 16}" y="{ly}">{_esc(model)}</text>')
    out.append("</g>")

    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_robustness_heatmap_svg(summary: CorrelationSummary) -> str:
    """Mean +/- std of cross-condition distance-vector correlations."""
    labels = [f"{d}/{f}" for d, f in summary.conditions]
    n = len(labels)
    cw, ch = 104, 34
    label_w = 10 + 7 * max(len(l) for l in labels)
    top = 16 + 7 * max(len(l) for l in labels)
    margin = 10
    title_h = 18
    x0 = margin + label_w
    y0 = margin + title_h + top
    width = x0 + n * cw + margin
    height = y0 + n * ch + margin + 16

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" '
        f'width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{margin}" y="{margin + 11}" font-size="12" fill="#222">'
        f'distance-vector correlation across {summary.n_seeds} seed(s), mean &#177; std</text>',
    ]
    for i in range(n):
        for j in range(n):
            x = x0 + j * cw
            y = y0 + i * ch
            m = float(summary.mean[i, j])
            s = float(summary.std[i, j])
            fill = heat_color((m + 1.0) / 2.0)
            text_fill = "#ffffff" if _luma(fill) < 140 else "#111111"
            out.append(f'<rect class="cell" x="{x}" y="{y}" width="{cw}" height="{ch}" '
                       f'fill="{fill}" stroke="#ffffff" stroke-width="0.5"/>')
            out.append(f'<text x="{_fmt(x + cw / 2)}" y="{_fmt(y + ch / 2 + 4)}" '
                       f'text-anchor="middle" fill="{text_fill}">'
                       f'{m:.2f} &#177; {s:.2f}</text>')
    for i, label in enumerate(labels):
        out.append(f'<text x="{_fmt(x0 - 6)}" y="{_fmt(y0 + (i + 0.5) * ch + 4)}" '
                   f'text-anchor="end">{_esc(label)}</text>')
        x = x0 + (i + 0.5) * cw
        out.append(f'<text x="{_fmt(x)}" y="{_fmt(y0 - 8)}" text-anchor="start" '
                   f'transform="rotate(-55 {_fmt(x)} {_fmt(y0 - 8)})">{_esc(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# audit bundle

BUNDLE_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "mode", "run", "metric_names",
                 "datasets", "training", "robustness"],
    "properties": {
        "schema_version": {"const": 1},
        "mode": {"enum": ["full", "audit"]},
        "metric_names": {
            "type": "array", "items": {"type": "string"},
            "minItems": 13, "maxItems": 13,
        },
        "run": {
            "type": "object",
            "required": ["seeds", "n_folds", "validation_fraction",
                         "search_draws", "model_kinds"],
            "properties": {
                "seeds": {"type": "array", "items": {"type": "integer"},
                          "minItems": 1},
                "n_folds": {"type": "integer"},
                "validation_fraction": {"type": "number"},
                "search_draws": {"type": "integer"},
                "model_kinds": {"type": "array", "items": {"type": "string"}},
            },
        },
        "datasets": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "source_path", "kept_rows",
                             "dropped_rows", "features"],
                "properties": {
                    "name": {"type": "string"},
                    "kept_rows": {"type": "integer"},
                    "dropped_rows": {"type": "integer"},
                    "features": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "object",
                            "required": ["name", "reference", "groups",
                                         "results"],
                            "properties": {
                                "name": {"type": "string"},
                                "reference": {"type": "string"},
                                "groups": {
                                    "type": "array",
                                    "items": {
                                        "type": "object",
                                        "required": ["label", "size"],
                                    },
                                },
                                "results": {
                                    "type": "array",
                                    "minItems": 1,
                                    "items": {
                                        "type": "object",
                                        "required": [
                                            "seed", "rows", "values", "flags",
                                            "column_variances", "col_linkage",
                                            "row_linkage", "col_distance",
                                            "row_distance", "pca",
                                            "full_pca_ratios",
                                        ],
                                        "properties": {
                                            "seed": {"type": "integer"},
                                            "rows": {"type": "array",
                                                     "items": {"type": "string"}},
                                            "values": {"type": "array"},
                                            "flags": {"type": "array"},
                                            "column_variances": {"type": "array"},
                                            "col_linkage": {"type": "array"},
                                            "row_linkage": {"type": "array"},
                                            "pca": {
                                                "type": ["object", "null"],
                                                "required": [
                                                    "reference_model",
                                                    "reference_group", "k",
                                                    "eigenvectors",
                                                    "column_means", "ratios",
                                                    "group_labels", "coords",
                                                ],
                                            },
                                            "full_pca_ratios": {
                                                "type": ["array", "null"],
                                            },
                                        },
                                    },
                                },
                            },
                        },
                    },
                },
            },
        },
        "training": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["dataset", "seed", "kind", "params",
                             "mean_validation_auc", "pooled_test_auc",
                             "fold_thresholds"],
                "properties": {
                    "dataset": {"type": "string"},
                    "seed": {"type": "integer"},
                    "kind": {"type": "string"},
                    "params": {"type": "object"},
                    "mean_validation_auc": {"type": "number"},
                    "pooled_test_auc": {"type": "number"},
                    "fold_thresholds": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["fold", "t_max", "achieved_ba",
                                         "degenerate"],
                        },
                    },
                },
            },
        },
        "robustness": {
            "type": ["object", "null"],
            "required": ["conditions", "n_seeds", "mean", "std"],
            "properties": {
                "conditions": {"type": "array"},
                "n_seeds": {"type": "integer"},
                "mean": {"type": "array"},
                "std": {"type": "array"},
            },
        },
    },
}


def _jsonify(obj, out: list[str], indent: int) -> None:
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        keys = sorted(obj)
        for i, key in enumerate(keys):
            if not isinstance(key, str):
                raise TypeError(f"non-string key {key!r} in bundle")
            out.append(f'{pad}  {json.dumps(key)}: ')
            _jsonify(obj[key], out, indent + 2)
            out.append(",\n" if i < len(keys) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            out.append("[]")
            return
        # scalar-only lists stay on one line; nested ones get one item per line
        if all(not isinstance(v, (dict, list, tuple)) for v in seq):
            out.append("[" + ", ".join(_scalar(v) for v in seq) + "]")
            return
        out.append("[\n")
        for i, v in enumerate(seq):
            out.append(pad + "  ")
            _jsonify(v, out, indent + 2)
            out.append(",\n" if i < len(seq) - 1 else "\n")
        out.append(pad + "]")
    else:
        out.append(_scalar(obj))


def _scalar(v) -> str:
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if not np.isfinite(f):
            raise ValueError(f"non-finite float {f!r} in bundle")
        return format(f, ".17g")  # bit-faithful round-trip
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    raise TypeError(f"cannot serialize {type(v).__name__} in bundle")


def bundle_json_text(bundle: dict) -> str:
    """Canonical JSON: sorted keys, 17-significant-digit floats."""
    _schema_validate(bundle, BUNDLE_SCHEMA)
    out: list[str] = []
    _jsonify(bundle, out, 0)
    return "".join(out) + "\n"


def export_bundle(bundle: dict, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = bundle_json_text(bundle)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def load_bundle(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        bundle = json.load(fh)
    _schema_validate(bundle, BUNDLE_SCHEMA)
    return bundle


# ---------------------------------------------------------------------------
# rehydration from bundle records + full rendering pass

def matrix_from_record(dataset: str, feature: str, rec: dict) -> MetricsMatrix:
    rows = []
    for key in rec["rows"]:
        model, group = key.split(":", 1)
        rows.append(RowKey(group=group, model=model, protected_feature=feature))
    return MetricsMatrix(
        rows=tuple(rows),
        metric_names=METRIC_NAMES,
        values=np.asarray(rec["values"], dtype=np.float64),
        flags=np.asarray(rec["flags"], dtype=bool),
        column_variances=np.asarray(rec["column_variances"], dtype=np.float64),
        provenance=Provenance(dataset=dataset, feature=feature,
                              seed=int(rec["seed"])),
    )


def linkage_from_record(entries: list) -> Linkage:
    merges = tuple((int(l), int(r), float(h), int(s)) for l, r, h, s in entries)
    return Linkage(merges=merges, n_leaves=len(merges) + 1)


def distance_from_record(rec: dict, axis: str) -> DistanceVector:
    return DistanceVector(
        axis=axis,
        condensed=np.asarray(rec["condensed"], dtype=np.float64),
        labels=tuple(rec["labels"]),
        degenerate_pairs=tuple((int(i), int(j))
                               for i, j in rec["degenerate_pairs"]),
    )


def aligned_from_record(pca_rec: dict) -> AlignedProjection:
    return AlignedProjection(
        coords={k: np.asarray(v, dtype=np.float64)
                for k, v in pca_rec["coords"].items()},
        group_labels=tuple(pca_rec["group_labels"]),
        reference=pca_rec["reference_group"],
        ratios=np.asarray(pca_rec["ratios"], dtype=np.float64),
    )


def _write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def render_all(bundle: dict, out_dir: str | Path) -> list[Path]:
    """Write every figure and CSV sidecar for a bundle.

    Layout: <out>/<dataset>/<feature>/seed<k>/{clustermap.svg, pca.svg,
    matrix.csv} plus <out>/robustness/{means.csv, stds.csv, heatmap.svg}.
    pca.svg is only written when the stored projection has two or more
    components (a two-group feature yields a single component).
    """
    out_dir = Path(out_dir)
    written: list[Path] = []
    for ds in bundle["datasets"]:
        for feat in ds["features"]:
            for rec in feat["results"]:
                cell = out_dir / ds["name"] / feat["name"] / f"seed{rec['seed']}"
                matrix = matrix_from_record(ds["name"], feat["name"], rec)
                col_link = linkage_from_record(rec["col_linkage"])
                row_link = linkage_from_record(rec["row_linkage"])
                written.append(_write_text(
                    cell / "clustermap.svg",
                    render_clustermap_svg(matrix, col_link, row_link)))
                written.append(_write_text(cell / "matrix.csv",
                                           matrix_csv_text(matrix)))
                pca_rec = rec["pca"]
                if pca_rec is not None and int(pca_rec["k"]) >= 2:
                    aligned = aligned_from_record(pca_rec)
                    if aligned.ratios.shape[0] > 2:
                        aligned = AlignedProjection(
                            coords={k: v[:, :2] for k, v in aligned.coords.items()},
                            group_labels=aligned.group_labels,
                            reference=aligned.reference,
                            ratios=aligned.ratios[:2],
                        )
                    title = (f"{ds['name']} / {feat['name']} / seed {rec['seed']} "
                             f"(axes from {pca_rec['reference_model']})")
                    written.append(_write_text(
                        cell / "pca.svg",
                        render_pca_scatter_svg(aligned, title=title)))
    rob = bundle["robustness"]
    if rob is not None:
        labels = [f"{d}/{f}" for d, f in rob["conditions"]]
        summary = CorrelationSummary(
            conditions=tuple((d, f) for d, f in rob["conditions"]),
            mean=np.asarray(rob["mean"], dtype=np.float64),
            std=np.asarray(rob["std"], dtype=np.float64),
            n_seeds=int(rob["n_seeds"]),
        )
        rd = out_dir / "robustness"
        for name, mat in (("means.csv", summary.mean), ("stds.csv", summary.std)):
            lines = ["condition," + ",".join(labels)]
            for label, row in zip(labels, mat):
                lines.append(label + "," + ",".join("%.17g" % v for v in row))
            written.append(_write_text(rd / name, "\n".join(lines) + "\n"))
        written.append(_write_text(rd / "heatmap.svg",
                                   render_robustness_heatmap_svg(summary)))
    return written
