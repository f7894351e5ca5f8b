"""
Training a topic model on a synthetic corpus
============================================

Documents are sampled from five known topics, then an LDA model is fitted
with online variational Bayes and its topics are compared to the truth.
"""

import numpy as np

from geotopics.topicmodel import LdaConfig, generate_corpus, train

# five topics over a 50-word vocabulary, each living on its own 10 words
rng = np.random.default_rng(0)
true = np.zeros((5, 50))
for k in range(5):
    true[k, 10 * k:10 * (k + 1)] = rng.dirichlet(np.full(10, 2.0))

docs = generate_corpus(true, alpha=0.2, n_docs=1000, doc_len=100, seed=11)
print(len(docs), "documents, first one:", dict(list(docs[0].counts.items())[:6]), "...")

###############################################################################
# A small corpus needs a fast-moving step size: tau0 = 1 and several passes.

model = train(docs, 50, LdaConfig(num_topics=5, tau0=1.0, passes=10, seed=3))

cos = (true / np.linalg.norm(true, axis=1, keepdims=True)) @ \
    (model.topics / np.linalg.norm(model.topics, axis=1, keepdims=True)).T
print("best cosine per true topic:", np.round(cos.max(axis=1), 3))

###############################################################################
# Inference on a fresh document returns a sparse topic distribution.

theta = model.infer(docs[0])
print("topic weights of doc0:", np.round(theta, 3))
for k in np.argsort(-theta)[:2]:
    print(f"topic {k}:", [w for w, _ in model.top_words(int(k), 5).entries])
