"""Gaussian-weighted topic-similarity grid for a novel restaurant.

For a cell centred at ``c`` the similarity is

    sim(c) = mean_i (offset - ||novel - t_i||) * G(||c - p_i||)

with ``G`` a Gaussian density of width ``sqrt(2) * square_width`` and
``offset = 2*sqrt(2)``, which keeps every summand non-negative.
"""

import math
from dataclasses import dataclass

import numpy as np

from .features import ProjectedPoint

SIMILARITY_OFFSET = 2.0 * math.sqrt(2.0)


@dataclass(frozen=True)
class Grid:
    bounds: tuple[float, float, float, float]
    n: int
    rows: int

    @property
    def square_width(self):
        return (self.bounds[2] - self.bounds[0]) / self.n

    @property
    def shape(self):
        return self.rows, self.n

    def centers(self):
        """Cell centres as a (rows * n) x 2 array, row-major from the south-west."""
        min_x, min_y = self.bounds[0], self.bounds[1]
        w = self.square_width
        cx = min_x + (np.arange(self.n) + 0.5) * w
        cy = min_y + (np.arange(self.rows) + 0.5) * w
        gx, gy = np.meshgrid(cx, cy)
        return np.column_stack([gx.ravel(), gy.ravel()])

    @classmethod
    def from_positions(cls, positions, n=20):
        """Square cells over the bounding box of ``positions``.

        The box is padded on every side by one unpadded cell width
        (x-extent / n); the padded x-extent is split into ``n`` columns and
        as many rows as the padded y-extent needs.
        """
        if n < 1:
            raise ValueError("grid needs at least one cell per side")
        pos = np.asarray(positions, dtype=np.float64)
        lo, hi = pos.min(axis=0), pos.max(axis=0)
        extent = hi - lo
        base = extent[0] if extent[0] > 0 else (extent[1] if extent[1] > 0 else 1.0)
        if not extent.any():
            # a lone point gets a square unit box
            extent = np.array([base, base])
        pad = base / n
        min_x, min_y = lo - pad - (extent - (hi - lo)) / 2
        width = (base + 2 * pad) / n
        max_x = min_x + n * width
        rows = max(1, math.ceil(round((extent[1] + 2 * pad) / width, 9)))
        return cls((float(min_x), float(min_y), float(max_x), float(min_y + rows * width)), n, rows)


@dataclass
class NovelQuery:
    topics: np.ndarray
    exclude_id: str | None = None


@dataclass
class Heatmap:
    grid: Grid
    centers: np.ndarray
    sims: np.ndarray  # rows x n
    min: float
    max: float


def topic_distance(a, b):
    return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


def gaussian_weight(center, pos, square_width):
    """``exp(-d^2 / 2 sigma^2) / (sigma sqrt(2 pi))`` with sigma = sqrt(2) * square_width.

    ``pos`` may be a point or an N x 2 array; ``d`` is Euclidean distance in
    miles.
    """
    if square_width <= 0:
        raise ValueError("square_width must be positive")
    sigma = math.sqrt(2.0) * square_width
    c = np.array([center.x, center.y]) if isinstance(center, ProjectedPoint) else np.asarray(center)
    p = np.array([pos.x, pos.y]) if isinstance(pos, ProjectedPoint) else np.asarray(pos, dtype=float)
    d2 = np.sum((p - c) ** 2, axis=-1)
    g = np.exp(-d2 / (2.0 * sigma * sigma)) / (sigma * math.sqrt(2.0 * math.pi))
    return float(g) if np.ndim(g) == 0 else g


def _restrict(novel, positions, topics, ids):
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    topics = np.asarray(topics, dtype=np.float64)
    if novel.exclude_id is not None and ids is not None:
        keep = np.array([i != novel.exclude_id for i in ids], dtype=bool)
        positions, topics = positions[keep], topics[keep]
    if positions.shape[0] == 0:
        raise ValueError("no restaurants left to compare against")
    return positions, topics


def cell_similarity(center, novel, positions, topics, square_width, ids=None,
                    offset=SIMILARITY_OFFSET):
    positions, topics = _restrict(novel, positions, topics, ids)
    tdist = np.linalg.norm(topics - np.asarray(novel.topics, dtype=float), axis=1)
    g = gaussian_weight(center, positions, square_width)
    return float(np.mean((offset - tdist) * g))


def build_heatmap(grid, novel, positions, topics, ids=None, offset=SIMILARITY_OFFSET):
    positions, topics = _restrict(novel, positions, topics, ids)
    centers = grid.centers()
    tdist = np.linalg.norm(topics - np.asarray(novel.topics, dtype=float), axis=1)
    sigma = math.sqrt(2.0) * grid.square_width
    d2 = np.sum((centers[:, None, :] - positions[None, :, :]) ** 2, axis=-1)
    g = np.exp(-d2 / (2.0 * sigma * sigma)) / (sigma * math.sqrt(2.0 * math.pi))
    sims = np.mean((offset - tdist)[None, :] * g, axis=1).reshape(grid.shape)
    return Heatmap(grid, centers, sims, float(sims.min()), float(sims.max()))


def colorize(sims, lo, hi):
    """Linear blue (0,0,255) to red (255,0,0) ramp; uint8 array of shape (..., 3)."""
    if hi < lo:
        raise ValueError("max must not be below min")
    sims = np.asarray(sims, dtype=np.float64)
    if hi == lo:
        t = np.full(sims.shape, 0.5)
    else:
        t = np.clip((sims - lo) / (hi - lo), 0.0, 1.0)
    red = np.floor(255.0 * t + 0.5)
    blue = np.floor(255.0 * (1.0 - t) + 0.5)
    return np.stack([red, np.zeros_like(red), blue], axis=-1).astype(np.uint8)
