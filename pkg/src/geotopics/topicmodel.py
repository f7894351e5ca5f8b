"""LDA trained with online variational Bayes.

The global variational parameter ``lam`` (K x V) is updated one minibatch at
a time: a local E-step fits each document's ``gamma`` with ``lam`` held
fixed, then ``lam`` moves towards the minibatch estimate with step size
``rho_t = (tau0 + t) ** -kappa``.
"""

import json
import struct
from dataclasses import asdict, dataclass

import numpy as np
from scipy import sparse
from scipy.special import gammaln, logsumexp

from .corpus import BowDocument
from .special import dirichlet_expectation

_MAGIC = b"GTLDA\x00\x00\x01"
_HEADER = struct.Struct("<IIddqQ")
_TRUNCATE_BELOW = 1e-4


@dataclass(frozen=True)
class LdaConfig:
    num_topics: int = 50
    alpha: float | None = None
    beta: float | None = None
    minibatch_size: int = 256
    kappa: float = 0.7
    tau0: float = 1024.0
    passes: int = 1
    e_step_max_iters: int = 100
    e_step_tol: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.num_topics < 2:
            raise ValueError("num_topics must be at least 2")
        # symmetric 1/K priors unless given
        if self.alpha is None:
            object.__setattr__(self, "alpha", 1.0 / self.num_topics)
        if self.beta is None:
            object.__setattr__(self, "beta", 1.0 / self.num_topics)
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")
        if not 0.5 < self.kappa <= 1.0:
            raise ValueError("kappa must lie in (0.5, 1]")
        if self.tau0 < 0:
            raise ValueError("tau0 must be non-negative")
        if min(self.minibatch_size, self.passes, self.e_step_max_iters) < 1:
            raise ValueError("minibatch_size, passes and e_step_max_iters must be positive")
        if self.e_step_tol <= 0:
            raise ValueError("e_step_tol must be positive")


@dataclass
class TopicWordList:
    topic_id: int
    entries: list[tuple[str, float]]


def _as_csr(docs, vocab_size):
    indptr = [0]
    indices, data = [], []
    for doc in docs:
        for wid, cnt in sorted(doc.counts.items()):
            if not 0 <= wid < vocab_size:
                raise ValueError(f"word id {wid} outside vocabulary of size {vocab_size}")
            indices.append(wid)
            data.append(cnt)
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64),
         np.asarray(indptr, dtype=np.int64)),
        shape=(len(docs), vocab_size))


def _e_step(X, exp_elogbeta, alpha, gamma, max_iters, tol, callback=None):
    """Coordinate ascent on every document's gamma, holding lambda fixed.

    Documents are updated in lockstep; a document stops updating once its
    mean absolute gamma change drops below ``tol``. Returns the final gamma
    and the sufficient statistics for the lambda update.
    """
    gamma = gamma.copy()
    n_docs = X.shape[0]
    rows = np.repeat(np.arange(n_docs), np.diff(X.indptr))
    cols = X.indices
    cts = X.data
    eb_nz = exp_elogbeta[:, cols].T  # nnz x K

    exp_elogtheta = np.exp(dirichlet_expectation(gamma))
    phinorm = np.einsum("nk,nk->n", exp_elogtheta[rows], eb_nz) + 1e-100
    active = np.ones(n_docs, dtype=bool)
    for _ in range(max_iters):
        ratio = sparse.csr_matrix((cts / phinorm, cols, X.indptr), shape=X.shape)
        new_gamma = alpha + exp_elogtheta * (ratio @ exp_elogbeta.T)
        change = np.mean(np.abs(new_gamma - gamma), axis=1)
        gamma[active] = new_gamma[active]
        exp_elogtheta[active] = np.exp(dirichlet_expectation(gamma[active]))
        nz_active = active[rows]
        phinorm[nz_active] = np.einsum(
            "nk,nk->n", exp_elogtheta[rows[nz_active]], eb_nz[nz_active]) + 1e-100
        if callback is not None:
            callback(gamma)
        active &= change >= tol
        if not active.any():
            break
    ratio = sparse.csr_matrix((cts / phinorm, cols, X.indptr), shape=X.shape)
    sstats = np.asarray((ratio.T @ exp_elogtheta).T) * exp_elogbeta
    return gamma, sstats


class TopicModel:
    """Trained LDA model: variational word-topic parameters plus priors."""

    def __init__(self, config, lam, update_count=0, vocab=None):
        lam = np.asarray(lam, dtype=np.float64)
        if lam.ndim != 2 or lam.shape[0] != config.num_topics:
            raise ValueError("lambda must be a K x V matrix")
        if not np.all(lam > 0):
            raise ValueError("lambda entries must be positive")
        self.config = config
        self.lam = lam
        self.update_count = update_count
        self.vocab = vocab
        self._refresh()

    def _refresh(self):
        self._elogbeta = dirichlet_expectation(self.lam)
        self._exp_elogbeta = np.exp(self._elogbeta)

    @property
    def num_topics(self):
        return self.lam.shape[0]

    @property
    def vocab_size(self):
        return self.lam.shape[1]

    @property
    def topics(self):
        """Expected word distribution of every topic (rows sum to one)."""
        return self.lam / self.lam.sum(axis=1, keepdims=True)

    def _initial_gamma(self, n_docs):
        rng = np.random.default_rng(self.config.seed)
        row = rng.gamma(100.0, 1.0 / 100.0, self.num_topics)
        return np.tile(row, (n_docs, 1))

    def infer_gamma(self, docs):
        X = _as_csr(docs, self.vocab_size)
        gamma, _ = _e_step(X, self._exp_elogbeta, self.config.alpha,
                           self._initial_gamma(len(docs)),
                           self.config.e_step_max_iters, self.config.e_step_tol)
        return gamma

    def infer_many(self, docs):
        """Topic distribution for each document (rows of an N x K array)."""
        if not docs:
            return np.zeros((0, self.num_topics))
        gamma = self.infer_gamma(docs)
        weights = np.clip(gamma - self.config.alpha, 0.0, None)
        totals = weights.sum(axis=1, keepdims=True)
        empty = totals[:, 0] <= 0
        weights = np.divide(weights, totals, out=np.zeros_like(weights), where=totals > 0)
        weights[weights < _TRUNCATE_BELOW] = 0.0
        weights /= np.where(empty, 1.0, weights.sum(axis=1))[:, np.newaxis]
        weights[empty] = 1.0 / self.num_topics
        return weights

    def infer(self, doc):
        return self.infer_many([doc])[0]

    def document_bound(self, doc, gamma):
        """Per-document variational bound with phi at its optimum for ``gamma``.

        Terms that depend only on lambda are omitted.
        """
        alpha = self.config.alpha
        gamma = np.asarray(gamma, dtype=np.float64)
        elogtheta = dirichlet_expectation(gamma)
        ids = np.fromiter(doc.counts.keys(), dtype=np.int64)
        cts = np.fromiter(doc.counts.values(), dtype=np.float64)
        score = 0.0
        if ids.size:
            score += np.sum(cts * logsumexp(elogtheta[:, None] + self._elogbeta[:, ids], axis=0))
        score += np.sum((alpha - gamma) * elogtheta)
        score += np.sum(gammaln(gamma) - gammaln(alpha))
        score += gammaln(alpha * self.num_topics) - gammaln(gamma.sum())
        return float(score)

    def bound_trace(self, doc):
        """Bound after every E-step iteration when inferring ``doc``."""
        X = _as_csr([doc], self.vocab_size)
        gamma0 = self._initial_gamma(1)
        trace = [self.document_bound(doc, gamma0[0])]
        _e_step(X, self._exp_elogbeta, self.config.alpha, gamma0,
                self.config.e_step_max_iters, self.config.e_step_tol,
                callback=lambda g: trace.append(self.document_bound(doc, g[0])))
        return trace

    def top_words(self, topic_id, n):
        if not 0 <= topic_id < self.num_topics:
            raise ValueError(f"topic_id {topic_id} out of range [0, {self.num_topics})")
        if n < 1:
            raise ValueError("n must be positive")
        phi = self.topics[topic_id]
        order = np.lexsort((np.arange(phi.size), -phi))[:n]
        words = self.vocab if self.vocab is not None else [str(i) for i in range(phi.size)]
        return TopicWordList(topic_id, [(words[i], float(phi[i])) for i in order])

    def save(self, path):
        """Write the little-endian binary model plus a ``.json`` sidecar.

        Layout: 8-byte magic, then ``<IIddqQ`` (K, V, alpha, beta, seed,
        update_count), then K*V float64 values of lambda in row-major order.
        """
        cfg = self.config
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(_HEADER.pack(self.num_topics, self.vocab_size, cfg.alpha, cfg.beta,
                                  cfg.seed, self.update_count))
            fh.write(np.ascontiguousarray(self.lam, dtype="<f8").tobytes())
        header = {"K": self.num_topics, "V": self.vocab_size, "alpha": cfg.alpha,
                  "beta": cfg.beta, "seed": cfg.seed, "update_count": self.update_count,
                  "config": asdict(cfg)}
        with open(str(path) + ".json", "w", encoding="utf-8") as fh:
            json.dump(header, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path, vocab=None):
        with open(path, "rb") as fh:
            if fh.read(len(_MAGIC)) != _MAGIC:
                raise ValueError(f"{path} is not a topic model file")
            K, V, alpha, beta, seed, update_count = _HEADER.unpack(fh.read(_HEADER.size))
            lam = np.frombuffer(fh.read(8 * K * V), dtype="<f8")
        if lam.size != K * V:
            raise ValueError(f"{path} is truncated")
        extra = {}
        try:
            with open(str(path) + ".json", encoding="utf-8") as fh:
                extra = json.load(fh).get("config", {})
        except FileNotFoundError:
            pass
        extra.update(num_topics=K, alpha=alpha, beta=beta, seed=seed)
        return cls(LdaConfig(**extra), lam.reshape(K, V).astype(np.float64),
                   update_count, vocab)


def train(corpus, vocab, cfg):
    """Fit LDA to ``corpus`` (list of BowDocument) with online VB.

    ``vocab`` is a Vocabulary or a vocabulary size. Documents are consumed
    in the given order, ``cfg.passes`` times; the result depends only on
    ``cfg.seed`` and that order.
    """
    if not corpus:
        raise ValueError("cannot train on an empty corpus")
    vocab_size = vocab if isinstance(vocab, int) else len(vocab)
    if vocab_size <= 0:
        raise ValueError("vocabulary is empty")
    words = None if isinstance(vocab, int) else list(vocab.words)
    rng = np.random.default_rng(cfg.seed)
    K = cfg.num_topics
    lam = rng.gamma(100.0, 1.0 / 100.0, (K, vocab_size))
    model = TopicModel(cfg, lam, 0, words)
    X = _as_csr(corpus, vocab_size)
    n_docs = X.shape[0]
    for _ in range(cfg.passes):
        for start in range(0, n_docs, cfg.minibatch_size):
            batch = X[start:start + cfg.minibatch_size]
            gamma0 = rng.gamma(100.0, 1.0 / 100.0, (batch.shape[0], K))
            _, sstats = _e_step(batch, model._exp_elogbeta, cfg.alpha, gamma0,
                                cfg.e_step_max_iters, cfg.e_step_tol)
            rho = (cfg.tau0 + model.update_count + 1) ** -cfg.kappa
            target = cfg.beta + n_docs * sstats / batch.shape[0]
            model.lam = (1.0 - rho) * model.lam + rho * target
            model.update_count += 1
            model._refresh()
    return model


def generate_corpus(true_topics, alpha, n_docs, doc_len, seed, return_theta=False):
    """Sample documents from the LDA generative process.

    theta_d ~ Dirichlet(alpha), then per token z ~ Discrete(theta_d) and
    w ~ Discrete(true_topics[z]).
    """
    phi = np.asarray(true_topics, dtype=np.float64)
    if phi.ndim != 2 or np.any(phi < 0) or not np.allclose(phi.sum(axis=1), 1.0, atol=1e-9):
        raise ValueError("true_topics rows must be probability vectors")
    K, V = phi.shape
    rng = np.random.default_rng(seed)
    docs, thetas = [], []
    for d in range(n_docs):
        theta = rng.dirichlet(np.full(K, float(alpha)))
        z = rng.choice(K, size=doc_len, p=theta)
        counts = np.zeros(V, dtype=np.int64)
        for k, m in enumerate(np.bincount(z, minlength=K)):
            if m:
                counts += np.bincount(rng.choice(V, size=m, p=phi[k]), minlength=V)
        docs.append(BowDocument(f"doc{d}", {int(w): int(c) for w, c in enumerate(counts) if c}))
        thetas.append(theta)
    if return_theta:
        return docs, np.array(thetas).reshape(n_docs, K)
    return docs
