"""
Where would a new restaurant fit?
=================================

Every grid cell scores the Gaussian-weighted topic similarity of nearby
restaurants to a novel restaurant.
"""

import numpy as np

from geotopics.heatmap import Grid, NovelQuery, build_heatmap, colorize

rng = np.random.default_rng(3)
east = rng.normal([3, 0], 0.4, size=(40, 2))
west = rng.normal([-3, 0], 0.4, size=(40, 2))
pos = np.vstack([east, west])
topics = np.vstack([np.tile([0.9, 0.1], (40, 1)), np.tile([0.1, 0.9], (40, 1))])

grid = Grid.from_positions(pos, n=12)
heat = build_heatmap(grid, NovelQuery(np.array([1.0, 0.0])), pos, topics)
print("grid", grid.shape, "square width", round(grid.square_width, 3), "mi")

# crude text rendering: '#' for the top third, '.' for the bottom third
t = (heat.sims - heat.min) / (heat.max - heat.min)
for row in t[::-1]:
    print("".join("#" if v > 2 / 3 else ("+" if v > 1 / 3 else ".") for v in row))

print("hottest cell colour:", colorize(heat.max, heat.min, heat.max))
