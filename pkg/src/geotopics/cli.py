"""``geotopics`` command line: train, cluster, heatmap and gap stages.

Each stage reads and writes plain files in a directory so the expensive
topic-model training can be reused across scale and cluster-count sweeps.
Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
"""

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .clustering import NumericalError, gap_statistic, gmm_em, kmeans
from .corpus import (BowDocument, Vocabulary, build_vocabulary, clean_text, load_businesses,
                     load_reviews, load_stopwords, restaurant_documents, to_bow)
from .export import (clusters_geojson, clusters_svg, gmm_to_dict, heatmap_svg, kmeans_to_dict,
                     write_gap_csv, write_heatmap_csv, write_json)
from .features import (DEFAULT_SCALE, city_origin, feature_matrix, project, vertical_normalize,
                       write_features_csv)
from .heatmap import Grid, NovelQuery, build_heatmap
from .labeling import TopicLabelTable, label_clusters
from .topicmodel import LdaConfig, TopicModel, train

logger = logging.getLogger("geotopics")

MODEL_FILE = "model.bin"
VOCAB_FILE = "vocab.txt"
DOCS_FILE = "documents.json"
MANIFEST_FILE = "manifest.json"


class InputError(Exception):
    """Bad user input: missing files, unknown ids, inconsistent options."""


@dataclass
class PipelineConfig:
    business: str | None = None
    review: str | None = None
    stopwords: str | None = None
    labels: str | None = None
    model: str | None = None
    out: str | None = None
    city: str | None = None
    topics: int = 50
    vocab: int = 40000
    passes: int = 10
    batch: int = 256
    kappa: float = 0.7
    tau0: float = 1.0
    scale: float = DEFAULT_SCALE
    clusters: str = "30"
    range: str = "5:35"
    refs: int = 10
    method: str = "both"
    grid: int = 20
    target: str | None = None
    seed: int = 0
    threads: int | None = None

    def c_range(self):
        lo, _, hi = self.range.partition(":")
        try:
            lo, hi = int(lo), int(hi)
        except ValueError:
            raise InputError(f"--range must look like LO:HI, got {self.range!r}") from None
        if not 1 <= lo <= hi:
            raise InputError(f"invalid cluster range {self.range!r}")
        return list(range(lo, hi + 1))


def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _require_file(path, what):
    if not path:
        raise InputError(f"missing {what} path")
    if not Path(path).is_file():
        raise InputError(f"{what} file not found: {path}")
    return path


def _thread_count(cfg):
    if cfg.threads:
        return max(1, int(cfg.threads))
    env = os.environ.get("GEOTOPICS_THREADS")
    return max(1, int(env)) if env else (os.cpu_count() or 1)


def _write_manifest(out, cfg, inputs, artifacts, timings, **extra):
    manifest = {
        "version": __version__,
        "config": asdict(cfg),
        "inputs": {str(p): _digest(p) for p in inputs},
        "artifacts": sorted(str(a) for a in artifacts),
        "timings_seconds": {k: round(v, 3) for k, v in timings.items()},
    }
    manifest.update(extra)
    write_json(Path(out) / MANIFEST_FILE, manifest)
    return manifest


def cmd_train(cfg):
    """Build the corpus and fit the topic model; writes model, vocabulary, documents."""
    t0 = time.perf_counter()
    _require_file(cfg.business, "business")
    _require_file(cfg.review, "review")
    if cfg.stopwords:
        _require_file(cfg.stopwords, "stop-word")
    if not cfg.out:
        raise InputError("--out is required")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)

    businesses, _ = load_businesses(cfg.business, cfg.city)
    reviews, _ = load_reviews(cfg.review, {b.id for b in businesses})
    stop = load_stopwords(cfg.stopwords)
    tokenized = [clean_text(r.text, stop) for r in reviews]
    vocab = build_vocabulary(tokenized, cfg.vocab)
    docs, excluded = restaurant_documents(businesses, reviews, vocab, tokenized=tokenized)
    if not docs:
        raise InputError("no restaurant has any in-vocabulary review text")
    t_corpus = time.perf_counter()

    lda_cfg = LdaConfig(num_topics=cfg.topics, minibatch_size=cfg.batch, kappa=cfg.kappa,
                        tau0=cfg.tau0, passes=cfg.passes, seed=cfg.seed)
    model = train(docs, vocab, lda_cfg)
    t_train = time.perf_counter()

    by_id = {b.id: b for b in businesses}
    kept = [by_id[d.restaurant_id] for d in docs]
    origin = city_origin([b.latitude for b in kept], [b.longitude for b in kept])
    model.save(out / MODEL_FILE)
    vocab.save(out / VOCAB_FILE)
    write_json(out / DOCS_FILE, {
        "city": cfg.city,
        "origin": list(origin),
        "excluded": excluded,
        "restaurants": [{"id": b.id, "name": b.name, "latitude": b.latitude,
                         "longitude": b.longitude,
                         "counts": [[w, c] for w, c in d.counts.items()]}
                        for b, d in zip(kept, docs)],
    })
    artifacts = [out / MODEL_FILE, out / (MODEL_FILE + ".json"), out / VOCAB_FILE, out / DOCS_FILE]
    return _write_manifest(out, cfg, [cfg.business, cfg.review], artifacts,
                           {"corpus": t_corpus - t0, "train": t_train - t_corpus},
                           n_restaurants=len(docs), n_excluded=len(excluded),
                           vocab_size=len(vocab), n_reviews=len(reviews))


class ModelBundle:
    """Everything ``train`` left in a model directory."""

    def __init__(self, model_dir):
        d = Path(model_dir or "")
        if not (d / MODEL_FILE).is_file():
            raise InputError(f"no trained model found in {model_dir}")
        self.dir = d
        self.vocab = Vocabulary.load(d / VOCAB_FILE)
        self.model = TopicModel.load(d / MODEL_FILE, vocab=self.vocab.words)
        with open(d / DOCS_FILE, encoding="utf-8") as fh:
            meta = json.load(fh)
        self.origin = tuple(meta["origin"])
        self.restaurants = meta["restaurants"]
        self.ids = [r["id"] for r in self.restaurants]
        self.docs = [BowDocument(r["id"], {int(w): int(c) for w, c in r["counts"]})
                     for r in self.restaurants]
        self.positions = project([r["latitude"] for r in self.restaurants],
                                 [r["longitude"] for r in self.restaurants], self.origin)

    def infer_all(self, threads=1):
        chunks = np.array_split(np.arange(len(self.docs)), max(1, min(threads, len(self.docs))))
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(lambda idx: self.model.infer_many([self.docs[i] for i in idx]),
                                  chunks))
        return np.vstack(parts)


def _features(bundle, cfg):
    topics = bundle.infer_all(_thread_count(cfg))
    normalized, flags = vertical_normalize(topics)
    if flags.any():
        logger.warning("%d restaurants have all-zero topic vectors after normalization",
                       int(flags.sum()))
    return topics, normalized, feature_matrix(bundle.positions, normalized, cfg.scale)


def _label_table(cfg, num_topics):
    if cfg.labels:
        return TopicLabelTable.from_csv(_require_file(cfg.labels, "label table"))
    if num_topics == 50:
        return TopicLabelTable.from_csv()
    return TopicLabelTable.fallback(num_topics)


def cmd_cluster(cfg):
    """Embed, choose C, cluster, label and export maps."""
    t0 = time.perf_counter()
    bundle = ModelBundle(cfg.model)
    out = Path(cfg.out or bundle.dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.method not in ("kmeans", "gmm", "both"):
        raise InputError(f"unknown clustering method {cfg.method!r}")
    _, normalized, points = _features(bundle, cfg)
    write_features_csv(out / "features.csv", bundle.ids, bundle.positions, normalized)
    artifacts = [out / "features.csv"]
    extra = {}

    if cfg.clusters == "auto":
        Cs = [C for C in cfg.c_range() if C <= len(points)]
        if not Cs:
            raise InputError("cluster range exceeds the number of restaurants")
        report = gap_statistic(points, Cs, B=cfg.refs, seed=cfg.seed)
        write_gap_csv(out / "gap.csv", report)
        artifacts.append(out / "gap.csv")
        C = report.optimal_C
        extra["optimal_C"] = C
        extra["optimal_C_se_rule"] = report.optimal_C_se_rule
    else:
        try:
            C = int(cfg.clusters)
        except ValueError:
            raise InputError(f"--clusters must be an integer or 'auto', got {cfg.clusters!r}") from None
    if not 1 <= C <= len(points):
        raise InputError(f"cannot form {C} clusters from {len(points)} restaurants")
    extra["C"] = C

    table = _label_table(cfg, bundle.model.num_topics)
    methods = ["kmeans", "gmm"] if cfg.method == "both" else [cfg.method]
    for method in methods:
        if method == "kmeans":
            res = kmeans(points, C, max_iters=300, seed=cfg.seed, n_init=10)
            assignments, comps, result = res.assignments, None, kmeans_to_dict(bundle.ids, res)
        else:
            res = gmm_em(points, C, seed=cfg.seed)
            assignments, comps, result = res.assignments, res.components, gmm_to_dict(bundle.ids, res)
        labels = label_clusters(assignments, bundle.positions, normalized, table, comps)
        write_json(out / f"clusters_{method}.json", result)
        write_json(out / f"clusters_{method}.geojson",
                   clusters_geojson(bundle.restaurants, bundle.positions, assignments, labels,
                                    bundle.origin, method))
        (out / f"map_{method}.svg").write_text(
            clusters_svg(bundle.positions, assignments, labels, C), encoding="utf-8")
        artifacts += [out / f"clusters_{method}.json", out / f"clusters_{method}.geojson",
                      out / f"map_{method}.svg"]
    return _write_manifest(out, cfg, [bundle.dir / MODEL_FILE, bundle.dir / DOCS_FILE],
                           artifacts, {"cluster": time.perf_counter() - t0}, **extra)


def cmd_heatmap(cfg):
    """Topic-similarity grid for a restaurant id or a file of review text."""
    t0 = time.perf_counter()
    bundle = ModelBundle(cfg.model)
    if not cfg.target:
        raise InputError("--target is required")
    out = Path(cfg.out or bundle.dir)
    out.mkdir(parents=True, exist_ok=True)
    topics = bundle.infer_all(_thread_count(cfg))
    marker = None
    if cfg.target in bundle.ids:
        idx = bundle.ids.index(cfg.target)
        novel = NovelQuery(topics[idx], exclude_id=cfg.target)
        marker = tuple(bundle.positions[idx])
        inputs = [bundle.dir / MODEL_FILE, bundle.dir / DOCS_FILE]
    elif Path(cfg.target).is_file():
        text = Path(cfg.target).read_text(encoding="utf-8")
        counts = to_bow(clean_text(text, load_stopwords(cfg.stopwords)), bundle.vocab)
        novel = NovelQuery(bundle.model.infer(BowDocument("novel", counts)))
        inputs = [bundle.dir / MODEL_FILE, bundle.dir / DOCS_FILE, cfg.target]
    else:
        raise InputError(f"target {cfg.target!r} is neither a known restaurant id nor a file")
    grid = Grid.from_positions(bundle.positions, cfg.grid)
    heat = build_heatmap(grid, novel, bundle.positions, topics, bundle.ids)
    write_heatmap_csv(out / "heatmap.csv", heat)
    (out / "heatmap.svg").write_text(heatmap_svg(heat, marker), encoding="utf-8")
    hot = np.unravel_index(int(np.argmax(heat.sims)), heat.sims.shape)
    return _write_manifest(out, cfg, inputs, [out / "heatmap.csv", out / "heatmap.svg"],
                           {"heatmap": time.perf_counter() - t0},
                           grid_shape=list(grid.shape), square_width=grid.square_width,
                           hottest_cell=[int(hot[0]), int(hot[1])],
                           hottest_center=[float(v) for v in heat.centers[np.argmax(heat.sims)]])


def cmd_gap(cfg):
    """Gap statistic over a cluster-count range; writes gap.csv."""
    bundle = ModelBundle(cfg.model)
    out = Path(cfg.out or bundle.dir)
    out.mkdir(parents=True, exist_ok=True)
    _, _, points = _features(bundle, cfg)
    Cs = [C for C in cfg.c_range() if C <= len(points)]
    if not Cs:
        raise InputError("cluster range exceeds the number of restaurants")
    report = gap_statistic(points, Cs, B=cfg.refs, seed=cfg.seed)
    write_gap_csv(out / "gap.csv", report)
    return {"optimal_C": report.optimal_C, "optimal_C_se_rule": report.optimal_C_se_rule}


COMMANDS = {"train": cmd_train, "cluster": cmd_cluster, "heatmap": cmd_heatmap, "gap": cmd_gap}


def read_config_file(path):
    """Flat ``key = value`` file; ``#`` starts a comment. Keys are flag names."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise InputError(f"{path}:{lineno}: expected key = value")
            values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


def build_parser(defaults=None):
    defaults = dict(defaults or {})
    parser = argparse.ArgumentParser(prog="geotopics", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file supplying defaults for any flag")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, help="worker cap (env GEOTOPICS_THREADS)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--stopwords", help="stop-word file (default: bundled list)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="build the corpus and train LDA")
    p.add_argument("--business")
    p.add_argument("--review")
    p.add_argument("--city")
    p.add_argument("--topics", type=int, default=50)
    p.add_argument("--vocab", type=int, default=40000)
    p.add_argument("--passes", type=int, default=10)
    p.add_argument("--batch", type=int, default=256)
    p.add_argument("--kappa", type=float, default=0.7)
    p.add_argument("--tau0", type=float, default=1.0)

    p = sub.add_parser("cluster", parents=[common], help="cluster and label restaurants")
    p.add_argument("--model")
    p.add_argument("--clusters", default="30", help="integer or 'auto'")
    p.add_argument("--range", default="5:35", help="C range for --clusters auto")
    p.add_argument("--refs", type=int, default=10)
    p.add_argument("--scale", type=float, default=DEFAULT_SCALE)
    p.add_argument("--method", choices=["kmeans", "gmm", "both"], default="both")
    p.add_argument("--labels", help="topic label table CSV (topic_id,label)")

    p = sub.add_parser("heatmap", parents=[common], help="topic-similarity heatmap")
    p.add_argument("--model")
    p.add_argument("--target", help="restaurant id or review-text file")
    p.add_argument("--grid", type=int, default=20)

    p = sub.add_parser("gap", parents=[common], help="gap statistic report")
    p.add_argument("--model")
    p.add_argument("--range", default="5:35")
    p.add_argument("--refs", type=int, default=10)
    p.add_argument("--scale", type=float, default=DEFAULT_SCALE)

    if defaults:
        all_dests = set()
        for sp in sub.choices.values():
            dests = {a.dest for a in sp._actions}
            all_dests |= dests
            sp.set_defaults(**{k: v for k, v in defaults.items() if k in dests})
        unknown = sorted(set(defaults) - all_dests - {"help", "config"})
        if unknown:
            parser.set_defaults(_unknown=unknown)
            for sp in sub.choices.values():
                sp.set_defaults(_unknown=unknown)
    return parser


def _config_from_args(args):
    known = PipelineConfig.__dataclass_fields__
    kwargs = {k: v for k, v in vars(args).items() if k in known and v is not None}
    return PipelineConfig(**kwargs)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config:
            args = build_parser(read_config_file(_require_file(args.config, "config"))
                                ).parse_args(argv)
            if getattr(args, "_unknown", None):
                raise InputError(f"unknown config keys: {', '.join(args._unknown)}")
        cfg = _config_from_args(args)
        result = COMMANDS[args.command](cfg)
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"geotopics {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (InputError, OSError, ValueError, KeyError) as exc:
        print(f"geotopics {args.command}: {exc}", file=sys.stderr)
        return 2
    if args.command == "gap":
        print(json.dumps(result, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
