"""Spatial-topical embedding of restaurants.

Each restaurant becomes ``[x, y, S*t_1, ..., S*t_K]`` where ``(x, y)`` are
local miles and ``t`` is its normalized topic vector. Euclidean distance in
this space trades topic dissimilarity against spatial distance through
``S``.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

MILES_PER_DEGREE = 69.172
DEFAULT_SCALE = 0.913


@dataclass(frozen=True)
class ProjectedPoint:
    x: float
    y: float


@dataclass
class FeatureVector:
    restaurant_id: str
    position: ProjectedPoint
    topics: np.ndarray
    scale: float = DEFAULT_SCALE

    def vector(self):
        return build_vector(self.position, self.topics, self.scale)


@dataclass(frozen=True)
class TopicProfile:
    deltas: tuple[float, ...]

    def __post_init__(self):
        if any(d < 0 for d in self.deltas):
            raise ValueError("topic deltas must be non-negative")


def city_origin(latitudes, longitudes):
    return float(np.mean(latitudes)), float(np.mean(longitudes))


def project(lat, lon, origin):
    """Equirectangular projection to miles east/north of ``origin``."""
    lat0, lon0 = origin
    x = (np.asarray(lon, dtype=float) - lon0) * math.cos(math.radians(lat0)) * MILES_PER_DEGREE
    y = (np.asarray(lat, dtype=float) - lat0) * MILES_PER_DEGREE
    if np.ndim(x) == 0:
        return ProjectedPoint(float(x), float(y))
    return np.column_stack([x, y])


def unproject(x, y, origin):
    """Inverse of :func:`project`; returns ``(lat, lon)``."""
    lat0, lon0 = origin
    lat = lat0 + np.asarray(y, dtype=float) / MILES_PER_DEGREE
    lon = lon0 + np.asarray(x, dtype=float) / (math.cos(math.radians(lat0)) * MILES_PER_DEGREE)
    if np.ndim(lat) == 0:
        return float(lat), float(lon)
    return lat, lon


def column_normalize(matrix):
    """Divide each topic column by its total over all restaurants (zero columns stay zero)."""
    w = np.asarray(matrix, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] < 1:
        raise ValueError("expected a non-empty N x K matrix")
    if np.any(w < 0):
        raise ValueError("topic weights must be non-negative")
    col = w.sum(axis=0)
    return np.divide(w, col, out=np.zeros_like(w), where=col > 0)


def vertical_normalize(matrix):
    """Column-normalize the topic weights, then renormalize every row.

    Returns ``(normalized, flags)`` where ``flags`` marks rows that ended up
    all-zero.
    """
    v = column_normalize(matrix)
    row = v.sum(axis=1, keepdims=True)
    flags = row[:, 0] <= 0
    out = np.divide(v, row, out=np.zeros_like(v), where=row > 0)
    return out, flags


def build_vector(position, topics, S):
    if S < 0:
        raise ValueError("scale S must be non-negative")
    topics = np.asarray(topics, dtype=np.float64)
    return np.concatenate([[position.x, position.y], S * topics])


def feature_matrix(positions, topics, S):
    """Stack ``build_vector`` over N restaurants: N x (K + 2)."""
    if S < 0:
        raise ValueError("scale S must be non-negative")
    return np.hstack([np.asarray(positions, dtype=np.float64),
                      S * np.asarray(topics, dtype=np.float64)])


def compute_min_scale(d_near, d_far, profile):
    """Smallest S for which a probe prefers the topic-matching far cluster.

    Solves ``d_far**2 = d_near**2 + S**2 * sum(delta**2)`` for S, where the
    probe sits ``d_near`` from a topically different cluster and ``d_far``
    from a topically identical one.
    """
    if d_near <= 0 or d_far < d_near:
        raise ValueError("need d_far >= d_near > 0")
    deltas = np.asarray(profile.deltas if isinstance(profile, TopicProfile) else profile,
                        dtype=np.float64)
    topic_sq = float(np.sum(deltas ** 2))
    if topic_sq == 0.0:
        raise ZeroDivisionError(
            "topic profile has no difference between clusters; no scale can separate them")
    return math.sqrt((d_far ** 2 - d_near ** 2) / topic_sq)


def write_features_csv(path, ids, positions, topics):
    """Persist unscaled features as ``id,x,y,t0..t{K-1}``."""
    topics = np.asarray(topics)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "x", "y"] + [f"t{k}" for k in range(topics.shape[1])])
        for rid, (x, y), t in zip(ids, positions, topics):
            w.writerow([rid, f"{x:.12g}", f"{y:.12g}"] + [f"{v:.12g}" for v in t])


def read_features_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    body = rows[1:]
    ids = [r[0] for r in body]
    data = np.array([[float(v) for v in r[1:]] for r in body]).reshape(len(body), -1)
    return ids, data[:, :2], data[:, 2:]
