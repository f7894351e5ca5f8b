"""Human-readable cluster labels and their on-map orientation."""

import csv
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .features import ProjectedPoint

_ISOTROPY_GAP = 1e-9


@dataclass
class TopicLabelTable:
    entries: dict[int, str]

    def label(self, topic_id):
        return self.entries.get(topic_id) or f"topic-{topic_id}"

    @classmethod
    def from_csv(cls, path=None):
        """Read ``topic_id,label`` rows; the bundled 50-label table by default."""
        if path is None:
            text = resources.files("geotopics.data").joinpath("topic_labels.csv").read_text("utf-8")
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        reader = csv.DictReader(text.splitlines())
        return cls({int(r["topic_id"]): r["label"].strip() for r in reader if r["label"].strip()})

    @classmethod
    def fallback(cls, num_topics):
        return cls({k: f"topic-{k}" for k in range(num_topics)})


@dataclass
class ClusterLabel:
    cluster_id: int
    primary_topic: int
    secondary_topic: int
    primary_weight: float
    secondary_weight: float
    label_text: str
    anchor: ProjectedPoint | None = None
    angle_degrees: float = 0.0
    member_count: int = 0
    low_confidence: bool = False
    isotropic: bool = False


def mean_topic_vector(members):
    """Unweighted mean of member topic vectors (arrays or FeatureVectors)."""
    rows = [getattr(m, "topics", m) for m in members]
    if not rows:
        raise ValueError("cannot average an empty cluster")
    return np.mean(np.asarray(rows, dtype=np.float64), axis=0)


def top2(mean, table, cluster_id=-1):
    mean = np.asarray(mean, dtype=np.float64)
    if mean.size < 2:
        raise ValueError("need at least two topics")
    # stable sort on -weight keeps the lower topic id first on ties
    order = np.argsort(-mean, kind="stable")
    a, b = int(order[0]), int(order[1])
    return ClusterLabel(
        cluster_id, a, b, float(mean[a]), float(mean[b]),
        f"{table.label(a)}/{table.label(b)}",
        low_confidence=bool(mean[b] <= 0.0))


def orientation(component):
    """Angle in degrees of the dominant spatial axis, folded into (-90, 90].

    Accepts a GaussianComponent or a bare 2x2 covariance. Returns
    ``(angle, isotropic)``; isotropic covariances report 0.
    """
    cov = np.asarray(getattr(component, "spatial_cov", component), dtype=np.float64)
    vals, vecs = np.linalg.eigh(cov)
    if not np.all(vals > 0):
        raise np.linalg.LinAlgError(f"covariance is not positive definite: {cov.tolist()}")
    if vals[1] - vals[0] < _ISOTROPY_GAP:
        return 0.0, True
    vx, vy = vecs[:, 1]
    angle = math.degrees(math.atan2(vy, vx))
    if angle <= -90.0:
        angle += 180.0
    elif angle > 90.0:
        angle -= 180.0
    return angle, False


def label_clusters(assignments, positions, topics, table, components=None):
    """One label per non-empty cluster, anchored at the members' spatial mean.

    ``topics`` are the normalized, unscaled topic vectors. With mixture
    ``components`` each label is rotated along its component's dominant
    axis; k-means labels stay horizontal.
    """
    assignments = np.asarray(assignments)
    positions = np.asarray(positions, dtype=np.float64)
    topics = np.asarray(topics, dtype=np.float64)
    n_clusters = len(components) if components is not None else int(assignments.max()) + 1
    labels = []
    for c in range(n_clusters):
        mask = assignments == c
        if not mask.any():
            continue
        lab = top2(mean_topic_vector(topics[mask]), table, c)
        cx, cy = positions[mask].mean(axis=0)
        lab.anchor = ProjectedPoint(float(cx), float(cy))
        lab.member_count = int(mask.sum())
        if components is not None:
            lab.angle_degrees, lab.isotropic = orientation(components[c])
        labels.append(lab)
    return labels
