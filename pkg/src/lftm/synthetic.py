"""Planted-topic corpora and matching embeddings for tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .corpus_io import Corpus, Document, Vocabulary


def planted_corpus(n_docs: int = 200, doc_len: int = 8, n_topics: int = 2, block: int = 25,
                   purity: float = 0.9, seed: int = 0) -> Corpus:
    """Each document belongs to one block of ``block`` words and draws each
    token from it with probability ``purity``, otherwise from the other blocks.
    Labels alternate so classes are balanced."""
    rng = np.random.default_rng(seed)
    V = n_topics * block
    vocab = Vocabulary([f"b{_letters(b)}w{_letters(k)}" for b in range(n_topics) for k in range(block)])
    docs = []
    for d in range(n_docs):
        label = d % n_topics
        own = rng.random(doc_len) < purity
        other = (label + rng.integers(1, n_topics, size=doc_len)) % n_topics if n_topics > 1 \
            else np.zeros(doc_len, dtype=np.int64)
        blocks = np.where(own, label, other)
        tokens = blocks * block + rng.integers(0, block, size=doc_len)
        docs.append(Document(tokens.tolist(), label))
    assert V == vocab.V
    return Corpus(vocab, docs, [str(b) for b in range(n_topics)])


def _letters(n: int) -> str:
    # alphabetic names survive the reference-corpus cleaner: 0 -> "a", 26 -> "ba"
    out = ""
    while True:
        n, r = divmod(n, 26)
        out = chr(97 + r) + out
        if n == 0:
            return out


def block_embeddings(n_topics: int = 2, block: int = 25, dim: int = 10, spread: float = 0.3,
                     separation: float = 1.0, seed: int = 0) -> np.ndarray:
    """Word vectors clustered by block: Gaussian noise around one random center per block."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(scale=separation, size=(n_topics, dim))
    omega = np.repeat(centers, block, axis=0) + rng.normal(scale=spread, size=(n_topics * block, dim))
    omega.setflags(write=False)
    return omega


def random_corpus(n_docs: int, V: int, max_len: int, seed: int = 0, min_len: int = 1) -> Corpus:
    """Uniform random word ids; every vocabulary word is forced to appear at least once."""
    rng = np.random.default_rng(seed)
    docs = [rng.integers(0, V, size=rng.integers(min_len, max_len + 1)).tolist()
            for _ in range(n_docs)]
    docs[0] = list(range(V)) + docs[0]
    return Corpus(Vocabulary([f"v{_letters(i)}" for i in range(V)]), [Document(d) for d in docs])
