"""Culinary-district discovery from geo-tagged review text.

Topic modelling (LDA, online variational Bayes), spatial-topical
embedding, k-means / Gaussian-mixture clustering with gap-statistic model
selection, cluster labelling and topic-similarity heatmaps.
"""

__version__ = "0.1.0"
