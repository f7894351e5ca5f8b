"""Writers for the on-disk artifacts: CSV, JSON, GeoJSON and SVG."""

import colorsys
import csv
import json
from xml.sax.saxutils import escape

import numpy as np

from .features import unproject
from .heatmap import colorize

_PX_PER_MILE = 40.0
_MARGIN = 20.0


def _r(v, nd=6):
    return round(float(v), nd)


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def kmeans_to_dict(ids, result):
    return {
        "method": "kmeans",
        "C": int(result.centroids.shape[0]),
        "assignments": {rid: int(c) for rid, c in zip(ids, result.assignments)},
        "centroids": [[_r(v, 9) for v in row] for row in result.centroids],
        "inertia": _r(result.inertia, 9),
        "inertia_trace": [_r(v, 9) for v in result.inertia_trace],
        "iterations_run": int(result.iterations_run),
        "converged": bool(result.converged),
    }


def gmm_to_dict(ids, result):
    return {
        "method": "gmm",
        "C": len(result.components),
        "assignments": {rid: int(c) for rid, c in zip(ids, result.assignments)},
        "components": [{
            "weight": _r(c.weight, 9),
            "mean": [_r(v, 9) for v in c.mean],
            "spatial_cov": [[_r(v, 9) for v in row] for row in c.spatial_cov],
            "topic_var": [_r(v, 9) for v in c.topic_var],
        } for c in result.components],
        "log_likelihood_trace": [_r(v, 9) for v in result.log_likelihood_trace],
        "converged": bool(result.converged),
    }


def write_gap_csv(path, report):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["C", "log_wk", "ref_mean", "ref_sd", "gap"])
        for i, C in enumerate(report.candidate_Cs):
            w.writerow([C] + [f"{v[i]:.9f}" for v in (report.log_wk, report.ref_log_wk_mean,
                                                      report.ref_log_wk_sd, report.gap)])


def clusters_geojson(restaurants, positions, assignments, labels, origin, method):
    """FeatureCollection of restaurant points plus one point per cluster label.

    ``restaurants`` is a list of dicts with id/name/latitude/longitude.
    Coordinates are lon/lat; projected miles go in the properties.
    """
    feats = []
    for r, (x, y), c in zip(restaurants, positions, assignments):
        feats.append({
            "type": "Feature",
            "geometry": {"type": "Point",
                         "coordinates": [_r(r["longitude"], 7), _r(r["latitude"], 7)]},
            "properties": {"kind": "restaurant", "id": r["id"], "name": r.get("name", ""),
                           "cluster": int(c), "x": _r(x), "y": _r(y), "method": method},
        })
    for lab in labels:
        lat, lon = unproject(lab.anchor.x, lab.anchor.y, origin)
        feats.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [_r(lon, 7), _r(lat, 7)]},
            "properties": {
                "kind": "label", "method": method, "cluster": lab.cluster_id,
                "label_text": lab.label_text, "angle": _r(lab.angle_degrees),
                "member_count": lab.member_count,
                "primary_topic": lab.primary_topic, "secondary_topic": lab.secondary_topic,
                "primary_weight": _r(lab.primary_weight),
                "secondary_weight": _r(lab.secondary_weight),
                "low_confidence": lab.low_confidence,
                "x": _r(lab.anchor.x), "y": _r(lab.anchor.y)},
        })
    return {"type": "FeatureCollection", "features": feats}


def _palette(n):
    cols = []
    for i in range(n):
        r, g, b = colorsys.hsv_to_rgb((i * 0.618033988749895) % 1.0, 0.75, 0.9)
        cols.append(f"#{int(r * 255):02x}{int(g * 255):02x}{int(b * 255):02x}")
    return cols


class _Canvas:
    def __init__(self, min_x, min_y, max_x, max_y):
        self.min_x, self.max_y = min_x, max_y
        self.width = (max_x - min_x) * _PX_PER_MILE + 2 * _MARGIN
        self.height = (max_y - min_y) * _PX_PER_MILE + 2 * _MARGIN

    def px(self, x, y):
        # SVG y grows downwards
        return (_MARGIN + (x - self.min_x) * _PX_PER_MILE,
                _MARGIN + (self.max_y - y) * _PX_PER_MILE)

    def header(self):
        return (f'<?xml version="1.0" encoding="UTF-8"?>\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width:.6f}" '
                f'height="{self.height:.6f}" viewBox="0 0 {self.width:.6f} {self.height:.6f}">\n')


def clusters_svg(positions, assignments, labels, n_clusters):
    pos = np.asarray(positions, dtype=float)
    lo, hi = pos.min(axis=0) - 0.5, pos.max(axis=0) + 0.5
    cv = _Canvas(lo[0], lo[1], hi[0], hi[1])
    colors = _palette(max(n_clusters, 1))
    parts = [cv.header(), f'<rect x="0" y="0" width="{cv.width:.6f}" height="{cv.height:.6f}" '
             'fill="#ffffff"/>\n']
    for (x, y), c in zip(pos, assignments):
        px, py = cv.px(x, y)
        parts.append(f'<circle cx="{px:.6f}" cy="{py:.6f}" r="3.000000" fill="{colors[int(c)]}"/>\n')
    for lab in labels:
        px, py = cv.px(lab.anchor.x, lab.anchor.y)
        parts.append(f'<text x="{px:.6f}" y="{py:.6f}" font-size="11" text-anchor="middle" '
                     f'transform="rotate({-lab.angle_degrees:.6f} {px:.6f} {py:.6f})">'
                     f'{escape(lab.label_text)}</text>\n')
    parts.append("</svg>\n")
    return "".join(parts)


def write_heatmap_csv(path, heat):
    rows, cols = heat.grid.shape
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "col", "center_x", "center_y", "sim"])
        for i in range(rows):
            for j in range(cols):
                cx, cy = heat.centers[i * cols + j]
                w.writerow([i, j, f"{cx:.6f}", f"{cy:.6f}", f"{heat.sims[i, j]:.12e}"])


def heatmap_svg(heat, marker=None):
    """Coloured squares, red for high similarity; ``marker`` (x, y) draws an X."""
    min_x, min_y, max_x, max_y = heat.grid.bounds
    cv = _Canvas(min_x, min_y, max_x, max_y)
    rgb = colorize(heat.sims, heat.min, heat.max)
    w = heat.grid.square_width
    side = w * _PX_PER_MILE
    rows, cols = heat.grid.shape
    parts = [cv.header()]
    for i in range(rows):
        for j in range(cols):
            px, py = cv.px(min_x + j * w, min_y + (i + 1) * w)
            r, g, b = (int(v) for v in rgb[i, j])
            parts.append(f'<rect x="{px:.6f}" y="{py:.6f}" width="{side:.6f}" '
                         f'height="{side:.6f}" fill="rgb({r},{g},{b})"/>\n')
    if marker is not None:
        px, py = cv.px(*marker)
        parts.append(f'<text x="{px:.6f}" y="{py:.6f}" font-size="18" font-weight="bold" '
                     f'text-anchor="middle" dominant-baseline="central" fill="#ffffff">X</text>\n')
    parts.append("</svg>\n")
    return "".join(parts)
