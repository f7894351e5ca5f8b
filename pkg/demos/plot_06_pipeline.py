"""
The whole pipeline on the bundled fixture city
==============================================

Train, cluster with an automatically chosen C, and draw a heatmap for one
of the pho restaurants. Outputs land in a temporary directory.
"""

import json
import tempfile
from pathlib import Path

from geotopics import cli
from geotopics.fixture import CITY, bundled_path

fx = bundled_path()
out = Path(tempfile.mkdtemp(prefix="geotopics-"))

cli.main(["train", "--business", str(fx / "business.json"), "--review", str(fx / "review.json"),
          "--city", CITY, "--topics", "10", "--seed", "7", "--out", str(out / "model")])
cli.main(["cluster", "--model", str(out / "model"), "--clusters", "auto", "--range", "2:12",
          "--seed", "7", "--out", str(out / "clusters")])
cli.main(["heatmap", "--model", str(out / "model"), "--target", "pho-00",
          "--out", str(out / "heat")])

man = json.loads((out / "clusters" / "manifest.json").read_text())
print("chosen C:", man["optimal_C"])
gj = json.loads((out / "clusters" / "clusters_kmeans.geojson").read_text())
for f in gj["features"]:
    if f["properties"]["kind"] == "label":
        print(f["properties"]["label_text"], f["properties"]["member_count"])
print("hottest cell:", json.loads((out / "heat" / "manifest.json").read_text())["hottest_center"])
print("artifacts in", out)
