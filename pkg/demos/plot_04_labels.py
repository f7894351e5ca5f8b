"""
Labelling clusters
==================

Each cluster is named by the two heaviest topics of its mean topic vector,
and mixture labels are rotated along the dominant spatial axis.
"""

import math

import numpy as np

from geotopics.clustering import gmm_em
from geotopics.labeling import TopicLabelTable, label_clusters, orientation

table = TopicLabelTable.from_csv()
print("topic 4 ->", table.label(4), "| topic 43 ->", table.label(43))

# a street-like cluster running 30 degrees north of east
rng = np.random.default_rng(2)
a = math.radians(30)
R = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
street = rng.multivariate_normal([0, 0], R @ np.diag([1.0, 0.01]) @ R.T, 100)
square = rng.normal([4, 4], 0.3, size=(60, 2))
pos = np.vstack([street, square])

topics = np.zeros((160, 50))
topics[:100, 4], topics[:100, 43] = 0.7, 0.3    # pho and soup
topics[100:, 25], topics[100:, 12] = 0.8, 0.2   # pizza and dim sum

fit = gmm_em(pos, 2, seed=0)
for lab in label_clusters(fit.assignments, pos, topics, table, fit.components):
    print(f"{lab.label_text:<20} {lab.member_count:>3} members, angle {lab.angle_degrees:6.1f}")

print("orientation of diag(1, 4):", orientation(np.diag([1.0, 4.0])))
