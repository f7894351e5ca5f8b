"""One test per acceptance criterion; each prints a PASS/FAIL line."""

import csv
import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from sklearn.metrics import adjusted_rand_score

from conftest import ACCEPTANCE_LINES, disjoint_topics, greedy_match, run_pipeline
from geotopics.clustering import assign, gap_statistic, gmm_em, kmeans
from geotopics.features import (ProjectedPoint, TopicProfile, build_vector, column_normalize,
                                compute_min_scale, feature_matrix, vertical_normalize)
from geotopics.fixture import bundled_path, district_centers, planted_labels
from geotopics.heatmap import Grid, NovelQuery, build_heatmap
from geotopics.labeling import orientation
from geotopics.topicmodel import LdaConfig, generate_corpus, train


@contextmanager
def criterion(number, title, bound_s=None):
    """Time the body, record a PASS/FAIL line, re-raise failures."""
    t0 = time.perf_counter()
    status, detail = "PASS", ""
    try:
        yield
    except AssertionError as exc:
        status, detail = "FAIL", f" ({str(exc).splitlines()[0] if str(exc) else 'assertion'})"
        raise
    finally:
        elapsed = time.perf_counter() - t0
        budget = ""
        if bound_s is not None:
            budget = f" [{elapsed:.3f}s / limit {bound_s:g}s]"
            if status == "PASS" and elapsed >= bound_s:
                status, detail = "FAIL", " (runtime over limit)"
        else:
            budget = f" [{elapsed:.3f}s]"
        line = f"criterion {number:>2} {status}: {title}{budget}{detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    if bound_s is not None:
        assert elapsed < bound_s, f"criterion {number} took {elapsed:.3f}s (limit {bound_s}s)"


ALL_OR_NONE = TopicProfile((1.0, 1.0))
DOMINANT = TopicProfile((0.5, 0.5) + (0.1,) * 10)


def scenario_topics(profile):
    """Probe and near-cluster topic vectors whose |difference| matches ``profile``."""
    if profile is ALL_OR_NONE:
        return np.array([1.0, 0.0]), np.array([0.0, 1.0])
    probe = np.array([0.5, 0.0] + [0.1, 0.0] * 5)
    near = np.array([0.0, 0.5] + [0.0, 0.1] * 5)
    np.testing.assert_allclose(np.abs(probe - near), profile.deltas)
    return probe, near


# 1
def test_scaling_thresholds():
    with criterion(1, "scale thresholds 0.5 and sqrt(5/6) to 1e-9", 1e-3):
        a = compute_min_scale(0.25, 0.75, ALL_OR_NONE)
        b = compute_min_scale(0.25, 0.75, DOMINANT)
        assert abs(a - 0.5) <= 1e-9, a
        assert abs(b - math.sqrt(5 / 6)) <= 1e-9, b
        assert round(b, 3) == 0.913


# 2
def test_classification_flip():
    with criterion(2, "probe flips from near to topic-matching cluster across S*", 1.0):
        for profile in (ALL_OR_NONE, DOMINANT):
            s_star = compute_min_scale(0.25, 0.75, profile)
            probe_t, near_t = scenario_topics(profile)
            for factor, expect in ((0.999, 0), (1.001, 1)):
                S = factor * s_star
                probe = build_vector(ProjectedPoint(0.0, 0.0), probe_t, S)
                near = build_vector(ProjectedPoint(0.25, 0.0), near_t, S)
                far = build_vector(ProjectedPoint(-0.75, 0.0), probe_t, S)
                got = int(assign(probe[None, :], np.vstack([near, far]))[0])
                assert got == expect, (profile, factor, got)


# 3
def test_topic_recovery():
    with criterion(3, "5-topic synthetic recovery, greedy cosine >= 0.8", 60.0):
        phi = disjoint_topics(K=5, V=50, seed=0)
        docs = generate_corpus(phi, 0.2, 1000, 100, seed=11)
        model = train(docs, 50, LdaConfig(num_topics=5, tau0=1.0, passes=10, seed=3))
        cos = greedy_match(phi, model.topics)
        print("  matched cosines:", np.round(cos, 4).tolist())
        assert np.all(cos >= 0.8), cos.tolist()


@pytest.fixture(scope="module")
def fixture_points(fixture_bundle):
    topics = fixture_bundle.infer_all()
    normalized, _ = vertical_normalize(topics)
    return feature_matrix(fixture_bundle.positions, normalized, 0.913)


# 4
def test_em_monotonicity(fixture_points):
    with criterion(4, "GMM log-likelihood non-decreasing, k-means inertia non-increasing"):
        for seed in range(20):
            res = gmm_em(fixture_points, 8, seed=seed)
            steps = np.diff(res.log_likelihood_trace)
            assert np.all(steps >= -1e-8), (seed, steps.min())
            km = kmeans(fixture_points, 8, seed=seed)
            trace = km.inertia_trace
            assert all(b <= a for a, b in zip(trace, trace[1:])), seed


# 5
def test_gap_statistic_blobs():
    with criterion(5, "gap statistic picks C=3 on 3 blobs in >= 18/20 runs", 30.0):
        hits = []
        for seed in range(20):
            rng = np.random.default_rng(1000 + seed)
            pts = np.vstack([rng.normal(c, 0.5, size=(50, 2))
                             for c in ((0.0, 0.0), (5.0, 0.0), (2.5, 4.0))])
            hits.append(gap_statistic(pts, range(1, 7), B=10, seed=seed).optimal_C == 3)
        print(f"  optimal_C == 3 in {sum(hits)}/20 runs")
        assert sum(hits) >= 18, sum(hits)


@settings(max_examples=1000, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 15), st.integers(1, 10)),
              elements=st.floats(0.0, 1.0)),
       st.integers(0, 9), st.floats(1e-3, 1.0))
def _normalization_property(m, const_col, const_val):
    col_sums = m.sum(axis=0)
    used = col_sums > 0
    np.testing.assert_allclose(column_normalize(m).sum(axis=0)[used], 1.0, atol=1e-9)
    out, flags = vertical_normalize(m)
    np.testing.assert_allclose(out[~flags].sum(axis=1), 1.0, atol=1e-9)
    assert np.all(out[flags] == 0.0)
    # a constant column is flattened to a constant column
    c = const_col % m.shape[1]
    m2 = m.copy()
    m2[:, c] = const_val
    flat = column_normalize(m2)[:, c]
    np.testing.assert_allclose(flat, flat[0], rtol=0, atol=1e-15)
    np.testing.assert_allclose(flat, 1.0 / m.shape[0], atol=1e-12)


# 6
def test_normalization_invariants():
    with criterion(6, "vertical normalization invariants over 1000 random matrices"):
        _normalization_property()


def direct_oracle(center, novel, positions, topics, w):
    sigma = math.sqrt(2.0) * w
    vals = []
    for p, t in zip(positions, topics):
        d2 = (center[0] - p[0]) ** 2 + (center[1] - p[1]) ** 2
        dist = math.sqrt(math.fsum((a - b) ** 2 for a, b in zip(novel, t)))
        g = math.exp(-d2 / (2.0 * sigma ** 2)) / (sigma * math.sqrt(2.0 * math.pi))
        vals.append((2.0 * math.sqrt(2.0) - dist) * g)
    return math.fsum(vals) / len(vals)


# 7
def test_heatmap_oracle():
    with criterion(7, "heatmap equals direct summation to 1e-12 (50 instances)"):
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(50):
            n_rest = int(rng.integers(1, 6))
            n, rows = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            w = float(rng.uniform(0.2, 2.0))
            x0, y0 = rng.uniform(-5, 5, size=2)
            grid = Grid((x0, y0, x0 + n * w, y0 + rows * w), n, rows)
            pos = np.column_stack([rng.uniform(x0, x0 + n * w, n_rest),
                                   rng.uniform(y0, y0 + rows * w, n_rest)])
            K = int(rng.integers(2, 6))
            top = rng.dirichlet(np.ones(K), size=n_rest)
            novel = rng.dirichlet(np.ones(K))
            heat = build_heatmap(grid, NovelQuery(novel), pos, top)
            for idx, center in enumerate(grid.centers()):
                err = abs(heat.sims.ravel()[idx] - direct_oracle(center, novel, pos, top, w))
                worst = max(worst, err)
        assert worst <= 1e-12, worst
        t = np.array([0.3, 0.7])
        single = build_heatmap(Grid((0.0, 0.0, 1.0, 1.0), 1, 1), NovelQuery(t),
                               [[0.5, 0.5]], [t]).sims[0, 0]
        expect = 2 * math.sqrt(2) / (math.sqrt(2) * math.sqrt(2 * math.pi)) * math.exp(0)
        assert abs(single - expect) <= 1e-12, single


def rot(deg):
    a = math.radians(deg)
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


# 8
def test_orientation():
    with criterion(8, "orientation equivariance and planted 30 degree street axis"):
        rng = np.random.default_rng(8)
        for _ in range(20):
            A = rng.normal(size=(2, 2))
            base = A @ A.T + 0.1 * np.eye(2)
            a0, iso = orientation(base)
            if iso:
                continue
            for theta in (15, 30, 60):
                a, _ = orientation(rot(theta) @ base @ rot(theta).T)
                diff = (a - a0 - theta) % 180.0
                assert min(diff, 180.0 - diff) <= 1e-6, (theta, a, a0)
        cov = rot(30) @ np.diag([1.0, 0.01]) @ rot(30).T
        normal = rot(30) @ np.array([0.0, 1.5])
        pts = np.vstack([rng.multivariate_normal(normal, cov, 150),
                         rng.multivariate_normal(-normal, cov, 150)])
        for comp in gmm_em(pts, 2, seed=0).components:
            angle, _ = orientation(comp)
            assert abs(angle - 30.0) < 5.0, angle


def _run_outputs(run):
    names = [run["cluster"] / "features.csv", run["cluster"] / "gap.csv",
             run["cluster"] / "clusters_kmeans.geojson", run["cluster"] / "clusters_gmm.geojson",
             run["cluster"] / "clusters_kmeans.json", run["cluster"] / "clusters_gmm.json",
             run["heat"] / "heatmap.csv"]
    return {p.name: p.read_bytes() for p in names}


@pytest.fixture(scope="module")
def timed_run(tmp_path_factory):
    t0 = time.perf_counter()
    run = run_pipeline(tmp_path_factory.mktemp("accept_a"))
    return run, time.perf_counter() - t0


def _assignments(path):
    feats = json.loads(path.read_text())["features"]
    return {f["properties"]["id"]: f["properties"]["cluster"]
            for f in feats if f["properties"]["kind"] == "restaurant"}


# 9
def test_end_to_end_fixture(timed_run):
    run, elapsed = timed_run
    with criterion(9, f"fixture pipeline: districts recovered, pho hotspot "
                      f"(pipeline {elapsed:.1f}s / limit 300s)"):
        assert elapsed < 300, elapsed
        planted = planted_labels(bundled_path())
        manifest = json.loads((run["cluster"] / "manifest.json").read_text())
        print(f"  gap optimal_C = {manifest['optimal_C']}")
        for method in ("kmeans", "gmm"):
            got = _assignments(run["cluster"] / f"clusters_{method}.geojson")
            ids = sorted(got)
            ari = adjusted_rand_score([planted[i][0] for i in ids], [got[i] for i in ids])
            print(f"  {method} adjusted Rand = {ari:.4f}")
            if method == "kmeans":
                assert ari >= 0.7, ari

        # hottest cell must sit in the pho district: its nearest district centroid is pho
        feats = json.loads((run["cluster"] / "clusters_kmeans.geojson").read_text())["features"]
        xy = {f["properties"]["id"]: (f["properties"]["x"], f["properties"]["y"])
              for f in feats if f["properties"]["kind"] == "restaurant"}
        centroids = {}
        for rid, (district, name) in planted.items():
            centroids.setdefault(name, []).append(xy[rid])
        centroids = {k: np.mean(v, axis=0) for k, v in centroids.items()}
        with open(run["heat"] / "heatmap.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        hot = max(rows, key=lambda r: float(r["sim"]))
        hx, hy = float(hot["center_x"]), float(hot["center_y"])
        nearest = min(centroids, key=lambda k: np.hypot(*(centroids[k] - (hx, hy))))
        print(f"  hottest cell centre ({hx:.2f}, {hy:.2f}) nearest district: {nearest}")
        assert nearest == "pho", nearest
        assert set(district_centers()) == set(centroids)


# 10
def test_determinism(timed_run, tmp_path):
    run, _ = timed_run
    with criterion(10, "rerun with the same seed gives byte-identical CSV/GeoJSON"):
        again = run_pipeline(tmp_path)
        a, b = _run_outputs(run), _run_outputs(again)
        diff = [k for k in a if a[k] != b[k]]
        assert not diff, diff
