import csv
import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from geotopics import cli
from geotopics.corpus import BowDocument
from geotopics.fixture import CITY, bundled_path, generate

FX = bundled_path()


def train_args(out, *extra, business=FX / "business.json", review=FX / "review.json"):
    return ["train", "--business", str(business), "--review", str(review), "--city", CITY,
            "--topics", "10", "--out", str(out), *extra]


@pytest.fixture(scope="module")
def three_district(tmp_path_factory):
    root = tmp_path_factory.mktemp("three")
    data = generate(root / "data", per_district=20, n_districts=3, seed=5)
    model = root / "model"
    assert cli.main(train_args(model, "--topics", "8", "--seed", "2",
                               business=data / "business.json",
                               review=data / "review.json")) == 0
    return model


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_missing_review_file(tmp_path, capsys):
    missing = tmp_path / "nowhere.json"
    assert cli.main(train_args(tmp_path / "m", review=missing)) == 2
    assert str(missing) in capsys.readouterr().err


def test_city_without_restaurants(tmp_path, capsys):
    args = train_args(tmp_path / "m")
    args[args.index("--city") + 1] = "Atlantis"
    assert cli.main(args) == 2
    assert "Atlantis" in capsys.readouterr().err


def test_bad_flags_exit_two(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["cluster", "--method", "spectral"])
    assert exc.value.code == 2
    assert cli.main(["cluster", "--model", str(tmp_path)]) == 2


def test_train_outputs(fixture_run):
    model = fixture_run["model"]
    for name in ("model.bin", "model.bin.json", "vocab.txt", "documents.json", "manifest.json"):
        assert (model / name).is_file()
    manifest = json.loads((model / "manifest.json").read_text())
    assert manifest["n_restaurants"] == 200
    assert manifest["config"]["topics"] == 10
    assert all(len(d) == 64 for d in manifest["inputs"].values())
    assert set(manifest["artifacts"]) >= {str(model / "model.bin"), str(model / "vocab.txt")}
    docs = json.loads((model / "documents.json").read_text())
    assert not any(r["id"].startswith("phx") for r in docs["restaurants"])


def test_train_rerun_is_byte_identical(tmp_path, fixture_run):
    from conftest import FIXTURE_SEED
    assert cli.main(train_args(tmp_path / "again", "--seed", str(FIXTURE_SEED))) == 0
    for name in ("model.bin", "vocab.txt", "documents.json"):
        assert (tmp_path / "again" / name).read_bytes() == \
            (fixture_run["model"] / name).read_bytes()


def test_pho_reviews_top_topic_words(fixture_bundle):
    model = fixture_bundle.model
    pho = [d for d in fixture_bundle.docs if d.restaurant_id.startswith("pho-")]

    def top_topic_words(doc):
        k = int(np.argmax(model.infer(doc)))
        return {w for w, _ in model.top_words(k, 6).entries}

    pooled = {}
    for d in pho:
        for w, c in d.counts.items():
            pooled[w] = pooled.get(w, 0) + c
    assert {"pho", "vietnamese", "broth"} <= top_topic_words(BowDocument("all-pho", pooled))
    hits = sum({"pho", "vietnamese", "broth"} <= top_topic_words(d) for d in pho)
    assert hits >= 0.7 * len(pho)


def test_infer_independent_of_threads(fixture_bundle):
    np.testing.assert_array_equal(fixture_bundle.infer_all(1), fixture_bundle.infer_all(4))


def test_fixed_cluster_count(tmp_path, fixture_run):
    out = tmp_path / "c4"
    assert cli.main(["cluster", "--model", str(fixture_run["model"]), "--clusters", "4",
                     "--method", "kmeans", "--out", str(out)]) == 0
    gj = json.loads((out / "clusters_kmeans.geojson").read_text())
    assert gj["type"] == "FeatureCollection"
    kinds = [f["properties"]["kind"] for f in gj["features"]]
    assert kinds.count("label") == 4
    assert kinds.count("restaurant") == 200
    assert not (out / "clusters_gmm.geojson").exists()
    assert json.loads((out / "manifest.json").read_text())["C"] == 4


def test_both_methods(fixture_run):
    out = fixture_run["cluster"]
    for method in ("kmeans", "gmm"):
        gj = json.loads((out / f"clusters_{method}.geojson").read_text())
        labels = [f for f in gj["features"] if f["properties"]["kind"] == "label"]
        assert labels
        assert all(f["properties"]["method"] == method for f in gj["features"])
        for f in gj["features"]:
            lon, lat = f["geometry"]["coordinates"]
            assert -116 < lon < -114 and 35 < lat < 37
        ET.fromstring((out / f"map_{method}.svg").read_bytes())
        angles = [f["properties"]["angle"] for f in labels]
        if method == "kmeans":
            assert all(a == 0 for a in angles)
        else:
            assert all(-90 < a <= 90 for a in angles)
            assert any(a != 0 for a in angles)
    assert len(read_csv(out / "gap.csv")) == 11


def test_auto_on_three_districts(tmp_path, three_district):
    out = tmp_path / "auto"
    assert cli.main(["cluster", "--model", str(three_district), "--clusters", "auto",
                     "--range", "1:6", "--method", "kmeans", "--out", str(out)]) == 0
    assert json.loads((out / "manifest.json").read_text())["optimal_C"] == 3


def test_gap_subcommand(three_district, tmp_path, capsys):
    assert cli.main(["gap", "--model", str(three_district), "--range", "1:5",
                     "--out", str(tmp_path)]) == 0
    assert json.loads(capsys.readouterr().out)["optimal_C"] == 3
    rows = read_csv(tmp_path / "gap.csv")
    assert [int(r["C"]) for r in rows] == [1, 2, 3, 4, 5]
    assert list(rows[0]) == ["C", "log_wk", "ref_mean", "ref_sd", "gap"]


def test_heatmap_for_restaurant(fixture_run):
    out = fixture_run["heat"]
    rows = read_csv(out / "heatmap.csv")
    manifest = json.loads((out / "manifest.json").read_text())
    r, n = manifest["grid_shape"]
    assert n == 20 and len(rows) == r * n
    assert all(float(row["sim"]) >= 0 for row in rows)
    svg = ET.fromstring((out / "heatmap.svg").read_bytes())
    texts = [el.text for el in svg.iter("{http://www.w3.org/2000/svg}text")]
    assert texts == ["X"]


def test_heatmap_for_text_file(tmp_path, fixture_run):
    q = tmp_path / "novel.txt"
    q.write_text("Great pho and broth, fresh spring rolls. Vietnamese noodles!")
    out = tmp_path / "h"
    assert cli.main(["heatmap", "--model", str(fixture_run["model"]), "--target", str(q),
                     "--grid", "1", "--out", str(out)]) == 0
    assert len(read_csv(out / "heatmap.csv")) == 1
    svg = ET.fromstring((out / "heatmap.svg").read_bytes())
    assert not list(svg.iter("{http://www.w3.org/2000/svg}text"))


def test_heatmap_unknown_target(tmp_path, fixture_run, capsys):
    assert cli.main(["heatmap", "--model", str(fixture_run["model"]), "--target", "no-such-id",
                     "--out", str(tmp_path)]) == 2
    assert "no-such-id" in capsys.readouterr().err


def test_config_file(tmp_path, fixture_run):
    conf = tmp_path / "run.conf"
    conf.write_text(f"# fixture\nmodel = {fixture_run['model']}\nclusters = 3\n"
                    "method = kmeans\ngrid = 4\n")
    out = tmp_path / "cfg"
    assert cli.main(["cluster", "--config", str(conf), "--out", str(out)]) == 0
    assert json.loads((out / "manifest.json").read_text())["C"] == 3
    # flags win over the file
    assert cli.main(["cluster", "--config", str(conf), "--clusters", "2",
                     "--out", str(out)]) == 0
    assert json.loads((out / "manifest.json").read_text())["C"] == 2
    conf.write_text("bogus_key = 1\n")
    assert cli.main(["cluster", "--config", str(conf)]) == 2
    conf.write_text("no equals sign\n")
    assert cli.main(["cluster", "--config", str(conf)]) == 2


def test_threads_env(monkeypatch):
    monkeypatch.setenv("GEOTOPICS_THREADS", "3")
    assert cli._thread_count(cli.PipelineConfig()) == 3
    assert cli._thread_count(cli.PipelineConfig(threads=2)) == 2


def test_c_range():
    assert cli.PipelineConfig(range="2:4").c_range() == [2, 3, 4]
    for bad in ("4:2", "x:3", "0:3"):
        with pytest.raises(cli.InputError):
            cli.PipelineConfig(range=bad).c_range()


def test_numerical_failure_exit_code(monkeypatch, fixture_run, tmp_path):
    def boom(*a, **k):
        raise cli.NumericalError("non-finite log-likelihood")
    monkeypatch.setattr(cli, "gmm_em", boom)
    assert cli.main(["cluster", "--model", str(fixture_run["model"]), "--clusters", "3",
                     "--method", "gmm", "--out", str(tmp_path)]) == 3
