"""
How large must the topic scale be?
==================================

A probe restaurant sits 0.25 mi from a topically different cluster and
0.75 mi from a topically identical one. The topic block of each feature
vector is multiplied by ``S``; past a threshold the probe joins its
topical match instead of its neighbour.
"""

import numpy as np

from geotopics.clustering import assign
from geotopics.features import (ProjectedPoint, TopicProfile, build_vector,
                                compute_min_scale, vertical_normalize)

profiles = {
    "all-or-none": TopicProfile((1.0, 1.0)),
    "one dominant topic plus ten minor ones": TopicProfile((0.5, 0.5) + (0.1,) * 10),
}
for name, profile in profiles.items():
    print(f"{name}: S* = {compute_min_scale(0.25, 0.75, profile):.6f}")

###############################################################################
# Check the flip directly for the all-or-none case.

s_star = compute_min_scale(0.25, 0.75, profiles["all-or-none"])
for S in (0.9 * s_star, 1.1 * s_star):
    probe = build_vector(ProjectedPoint(0, 0), [1, 0], S)
    near = build_vector(ProjectedPoint(0.25, 0), [0, 1], S)
    far = build_vector(ProjectedPoint(-0.75, 0), [1, 0], S)
    side = ["near", "far"][assign(probe[None], np.vstack([near, far]))[0]]
    print(f"S = {S:.3f}: probe joins the {side} cluster")

###############################################################################
# Vertical normalization divides each topic by its city-wide total, so a
# topic every restaurant shares stops dominating the distances.

w = np.array([[0.6, 0.4, 0.0],
              [0.6, 0.0, 0.4],
              [0.6, 0.2, 0.2]])
out, flags = vertical_normalize(w)
print(np.round(out, 3))
