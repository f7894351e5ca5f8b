"""Review ingestion, text cleaning and bag-of-words construction."""

import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import NamedTuple

logger = logging.getLogger(__name__)

# letters only, with internal apostrophes kept ("roberto's")
_TOKEN_RE = re.compile(r"[^\W\d_]+(?:'[^\W\d_]+)*")
_APOSTROPHES = str.maketrans({"’": "'", "‘": "'", "`": "'"})


class EmptyResultError(ValueError):
    """Raised when a filter leaves nothing to work with."""


@dataclass(frozen=True)
class Business:
    id: str
    name: str
    latitude: float
    longitude: float
    city: str


@dataclass(frozen=True)
class Review:
    business_id: str
    text: str
    stars: int | None = None
    date: str | None = None


@dataclass
class Vocabulary:
    words: list[str]
    doc_frequency: list[int]
    word_to_id: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.word_to_id = {w: i for i, w in enumerate(self.words)}
        if len(self.word_to_id) != len(self.words):
            raise ValueError("vocabulary contains duplicate words")

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.word_to_id

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for w in self.words:
                fh.write(w + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            words = [line.rstrip("\n") for line in fh if line.rstrip("\n")]
        return cls(words, [0] * len(words))


@dataclass
class BowDocument:
    restaurant_id: str
    counts: dict[int, int]

    @property
    def length(self):
        return sum(self.counts.values())


class Loaded(NamedTuple):
    records: list
    skipped: int


def _iter_json_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError:
                yield lineno, None


def _parse_business(obj):
    bid = obj.get("business_id", obj.get("id"))
    lat = float(obj["latitude"])
    lon = float(obj["longitude"])
    if bid is None or not (-90.0 <= lat <= 90.0) or not (-180.0 <= lon <= 180.0):
        raise ValueError("bad business record")
    return Business(str(bid), str(obj.get("name", "")), lat, lon, str(obj.get("city", "")))


def load_businesses(path, city_filter=None):
    """Read a JSON-lines business file.

    Matching on ``city_filter`` is case-insensitive and exact. Malformed lines
    are skipped and counted. Raises :class:`EmptyResultError` when nothing
    matches.
    """
    wanted = city_filter.strip().lower() if city_filter else None
    out, skipped, seen = [], 0, set()
    for lineno, obj in _iter_json_lines(path):
        try:
            if not isinstance(obj, dict):
                raise ValueError("not an object")
            biz = _parse_business(obj)
        except (KeyError, TypeError, ValueError):
            skipped += 1
            logger.debug("skipping malformed business line %d", lineno)
            continue
        if biz.id in seen:
            skipped += 1
            continue
        if wanted is not None and biz.city.strip().lower() != wanted:
            continue
        seen.add(biz.id)
        out.append(biz)
    if skipped:
        logger.warning("%s: skipped %d malformed business lines", path, skipped)
    if not out:
        raise EmptyResultError(f"no businesses matched city {city_filter!r} in {path}")
    return Loaded(out, skipped)


def load_reviews(path, business_ids):
    """Read reviews whose business id is in ``business_ids``, in file order.

    Reviews with empty text (and malformed lines) are dropped and counted in
    ``skipped``.
    """
    business_ids = set(business_ids)
    out, skipped = [], 0
    for _, obj in _iter_json_lines(path):
        if not isinstance(obj, dict) or "business_id" not in obj:
            skipped += 1
            continue
        if obj["business_id"] not in business_ids:
            continue
        text = obj.get("text") or ""
        if not isinstance(text, str) or not text.strip():
            skipped += 1
            continue
        stars = obj.get("stars")
        out.append(Review(obj["business_id"], text,
                          int(stars) if stars is not None else None,
                          obj.get("date")))
    return Loaded(out, skipped)


def load_stopwords(path=None):
    """Stop-word set from a one-word-per-line file; ``#`` lines are comments.

    With no path, the bundled 318-word English list is used.
    """
    if path is None:
        text = resources.files("geotopics.data").joinpath("stopwords.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    return words


def clean_text(raw, stopwords=frozenset()):
    """Lower-case, split on anything that is not a letter, drop stop-words.

    Digits and punctuation act as separators; apostrophes survive only
    between letters.
    """
    if not raw:
        return []
    text = raw.lower().translate(_APOSTROPHES)
    # \w also admits numeric symbols such as fractions and marks
    text = "".join(c if c.isalpha() or c == "'" else " " for c in text)
    tokens = _TOKEN_RE.findall(text)
    return [t for t in tokens if t not in stopwords]


def build_vocabulary(docs, target_size):
    """Keep the ``target_size`` words around the median document-frequency rank.

    Words are ranked by document frequency (descending, ties
    lexicographic). The surplus is trimmed symmetrically: ``ceil(surplus/2)``
    from the frequent end, the rest from the rare end.
    """
    if target_size <= 0:
        raise ValueError("target_size must be positive")
    if not docs:
        raise ValueError("cannot build a vocabulary from zero documents")
    df = Counter()
    for tokens in docs:
        df.update(set(tokens))
    ranked = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))
    surplus = len(ranked) - target_size
    if surplus > 0:
        top = math.ceil(surplus / 2)
        ranked = ranked[top:top + target_size]
    return Vocabulary([w for w, _ in ranked], [c for _, c in ranked])


def to_bow(tokens, vocab):
    ids = vocab.word_to_id
    counts = Counter(ids[t] for t in tokens if t in ids)
    return dict(sorted(counts.items()))


def restaurant_documents(businesses, reviews, vocab, stopwords=frozenset(), tokenized=None):
    """One bag-of-words document per restaurant from its concatenated reviews.

    Returns ``(documents, excluded_ids)``; restaurants with no in-vocabulary
    tokens (including those with no reviews) are excluded. ``tokenized`` may
    carry pre-cleaned token lists parallel to ``reviews``.
    """
    per_biz = {b.id: [] for b in businesses}
    if tokenized is None:
        tokenized = (clean_text(r.text, stopwords) for r in reviews)
    for review, tokens in zip(reviews, tokenized):
        if review.business_id in per_biz:
            per_biz[review.business_id].extend(tokens)
    docs, excluded = [], []
    for b in businesses:
        counts = to_bow(per_biz[b.id], vocab)
        if counts:
            docs.append(BowDocument(b.id, counts))
        else:
            excluded.append(b.id)
    if excluded:
        logger.info("excluded %d restaurants with no in-vocabulary tokens", len(excluded))
    return docs, excluded
