"""Synthetic eight-district city used by the tests and demos.

Restaurants are planted in spatial blobs, one cuisine per district. Review
text is sampled from the LDA generative process over hand-written cuisine
topics plus two city-wide background topics, then dressed with stop-words,
digits and punctuation so the cleaning step has something to do.

Run ``python -m geotopics.fixture <dir>`` to regenerate the bundled copy.
"""

import csv
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .features import MILES_PER_DEGREE

CITY = "Fixture City"
ORIGIN = (36.1500, -115.1500)

DISTRICTS = {
    "pho": "pho vietnamese rolls broth spring bowl noodles basil sprouts vermicelli banh sriracha",
    "pizza": "pizza crust slice pepperoni toppings slices pie sausage mozzarella oven dough calzone",
    "sushi": "sushi roll sashimi tuna nigiri salmon wasabi ginger eel sake tempura miso",
    "tacos": "tacos taco asada carne burrito salsa tortilla pastor guacamole enchilada tamale horchata",
    "bbq": "bbq ribs brisket pulled smoked sauce cornbread slaw smoker rub pitmaster beans",
    "thai": "thai pad curry tom yum satay papaya mango sticky peanut lemongrass coconut",
    "indian": "indian naan masala tikka lamb paneer biryani samosa chutney tandoori dal vindaloo",
    "dimsum": "dim sum dumplings bao siu har gow pork buns cart shumai turnip",
}
BACKGROUND = (
    "service friendly staff waitress server ordered table wait minutes came prices menu",
    "delicious tasty place food great nice people location parking atmosphere clean loved",
)
FILLER = ["the", "and", "was", "we", "it", "very", "a", "to", "of", "our"]

# district centres in miles (x east, y north); wider than tall
CENTERS = np.array([
    [-4.5, 1.6], [-1.5, 1.8], [1.5, 1.5], [4.5, 1.7],
    [-4.4, -1.7], [-1.6, -1.5], [1.4, -1.8], [4.6, -1.6],
])


def true_topics(rng):
    """Row-stochastic topic matrix over the fixture vocabulary, and its words."""
    topic_words = [w.split() for w in DISTRICTS.values()] + [w.split() for w in BACKGROUND]
    vocab = sorted({w for ws in topic_words for w in ws})
    index = {w: i for i, w in enumerate(vocab)}
    phi = np.zeros((len(topic_words), len(vocab)))
    for k, ws in enumerate(topic_words):
        phi[k, [index[w] for w in ws]] = rng.dirichlet(np.full(len(ws), 5.0))
    return phi, vocab


def generate(out_dir, per_district=25, reviews_per_restaurant=4, review_len=30,
             spread=0.35, seed=2024, n_districts=8):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    phi, vocab = true_topics(rng)
    n_cuisine = len(DISTRICTS)
    K = phi.shape[0]
    lat0, lon0 = ORIGIN
    mpd_lon = MILES_PER_DEGREE * np.cos(np.radians(lat0))

    businesses, reviews, planted = [], [], []
    for d, name in enumerate(list(DISTRICTS)[:n_districts]):
        for j in range(per_district):
            bid = f"{name}-{j:02d}"
            x, y = CENTERS[d] + rng.normal(scale=spread, size=2)
            businesses.append({
                "business_id": bid, "name": f"{name.title()} Place {j}",
                "latitude": round(lat0 + y / MILES_PER_DEGREE, 7),
                "longitude": round(lon0 + x / mpd_lon, 7),
                "city": CITY, "categories": "Restaurants"})
            planted.append((bid, d, name))
            conc = np.full(K, 0.05)
            conc[d] = 3.0
            conc[n_cuisine:] = 1.0
            theta = rng.dirichlet(conc)
            for r in range(reviews_per_restaurant):
                z = rng.choice(K, size=review_len, p=theta)
                words = [vocab[rng.choice(len(vocab), p=phi[k])] for k in z]
                text = []
                for w in words:
                    if rng.random() < 0.3:
                        text.append(FILLER[rng.integers(len(FILLER))])
                    text.append(w.capitalize() if rng.random() < 0.1 else w)
                tail = f" {rng.integers(1, 11)}/10!!" if rng.random() < 0.5 else "."
                reviews.append({"business_id": bid, "text": " ".join(text) + tail,
                                "stars": int(rng.integers(1, 6)), "date": f"2015-0{r + 1}-15"})

    # a neighbouring city that the city filter must drop
    for j in range(5):
        businesses.append({"business_id": f"phx-{j}", "name": f"Elsewhere {j}",
                           "latitude": 33.45, "longitude": -112.07 + 0.01 * j,
                           "city": "Phoenix", "categories": "Restaurants"})
        reviews.append({"business_id": f"phx-{j}", "text": "great tacos in phoenix",
                        "stars": 4, "date": "2015-01-01"})

    with open(out / "business.json", "w", encoding="utf-8", newline="\n") as fh:
        for b in businesses:
            fh.write(json.dumps(b, sort_keys=True) + "\n")
    with open(out / "review.json", "w", encoding="utf-8", newline="\n") as fh:
        for r in reviews:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
    with open(out / "planted.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["business_id", "district", "district_name"])
        w.writerows(planted)
    return out


def bundled_path():
    """Directory holding the bundled fixture files."""
    return Path(str(resources.files("geotopics.data").joinpath("fixture")))


def planted_labels(path=None):
    path = Path(path or bundled_path()) / "planted.csv"
    with open(path, encoding="utf-8") as fh:
        return {r["business_id"]: (int(r["district"]), r["district_name"])
                for r in csv.DictReader(fh)}


def district_centers():
    return dict(zip(DISTRICTS, CENTERS))


if __name__ == "__main__":
    generate(sys.argv[1] if len(sys.argv) > 1 else bundled_path())
