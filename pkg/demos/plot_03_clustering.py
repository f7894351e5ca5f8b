"""
Choosing the number of clusters
===============================

Three blobs, an elbow curve, and the gap statistic against uniform
reference data.
"""

import numpy as np

from geotopics.clustering import elbow_curve, gap_statistic, gmm_em, kmeans

rng = np.random.default_rng(1)
pts = np.vstack([rng.normal(c, 0.5, size=(50, 2)) for c in ((0, 0), (5, 0), (2.5, 4))])

for C, logw in elbow_curve(pts, range(1, 7), seed=0):
    print(f"C={C}  log W_k = {logw:.3f}")

report = gap_statistic(pts, range(1, 7), B=10, seed=0)
print("gap:", np.round(report.gap, 3))
print("argmax rule:", report.optimal_C, " standard-error rule:", report.optimal_C_se_rule)

###############################################################################
# K-means and the Gaussian mixture agree on well separated blobs; the
# mixture also keeps a full spatial covariance per component.

km = kmeans(pts, 3, seed=0, n_init=10)
gm = gmm_em(pts, 3, seed=0)
print("k-means inertia:", round(km.inertia, 3), "after", km.iterations_run, "iterations")
print("mixture weights:", np.round(gm.weights, 3))
print("log-likelihood trace:", np.round(gm.log_likelihood_trace, 2))
