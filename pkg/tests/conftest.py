import numpy as np
import pytest

from geotopics import cli
from geotopics.fixture import CITY, bundled_path

FIXTURE_SEED = 7


def run_pipeline(root, seed=FIXTURE_SEED):
    """train -> cluster --clusters auto -> heatmap on the bundled fixture city."""
    fx = bundled_path()
    model, clus, heat = root / "model", root / "cluster", root / "heat"
    assert cli.main(["train", "--business", str(fx / "business.json"),
                     "--review", str(fx / "review.json"), "--city", CITY,
                     "--topics", "10", "--seed", str(seed), "--out", str(model)]) == 0
    assert cli.main(["cluster", "--model", str(model), "--clusters", "auto", "--range", "2:12",
                     "--method", "both", "--seed", str(seed), "--out", str(clus)]) == 0
    assert cli.main(["heatmap", "--model", str(model), "--target", "pho-00",
                     "--seed", str(seed), "--out", str(heat)]) == 0
    return {"model": model, "cluster": clus, "heat": heat}


@pytest.fixture(scope="session")
def fixture_run(tmp_path_factory):
    return run_pipeline(tmp_path_factory.mktemp("fixture_run"))


@pytest.fixture(scope="session")
def fixture_bundle(fixture_run):
    return cli.ModelBundle(fixture_run["model"])


def disjoint_topics(K=5, V=50, seed=0):
    """K topics on disjoint, equal-size supports of a V-word vocabulary."""
    rng = np.random.default_rng(seed)
    phi = np.zeros((K, V))
    width = V // K
    for k in range(K):
        phi[k, k * width:(k + 1) * width] = rng.dirichlet(np.full(width, 2.0))
    return phi


def greedy_match(true, learned):
    """Greedy one-to-one matching on cosine similarity; returns matched cosines."""
    a = true / np.linalg.norm(true, axis=1, keepdims=True)
    b = learned / np.linalg.norm(learned, axis=1, keepdims=True)
    sim = a @ b.T
    out = np.zeros(true.shape[0])
    for _ in range(true.shape[0]):
        i, j = np.unravel_index(np.argmax(sim), sim.shape)
        out[i] = sim[i, j]
        sim[i, :] = -np.inf
        sim[:, j] = -np.inf
    return out


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
