"""Topic coherence (NPMI), clustering purity/NMI and topic-proportion classification."""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from sklearn.metrics import f1_score
from sklearn.model_selection import StratifiedKFold

logger = logging.getLogger(__name__)

COOC_VERSION = 1


# -- co-occurrence statistics and NPMI

@dataclass
class CooccurrenceStats:
    window_count: int
    word_windows: dict[int, int]
    pair_windows: dict[tuple[int, int], int]
    window: int = 10

    def p(self, w: int) -> float:
        return self.word_windows.get(w, 0) / self.window_count

    def p_joint(self, wi: int, wj: int) -> float:
        key = (wi, wj) if wi < wj else (wj, wi)
        return self.pair_windows.get(key, 0) / self.window_count

    def to_json(self, corpus_hash: str = "") -> dict:
        return {
            "version": COOC_VERSION,
            "corpus_hash": corpus_hash,
            "window": self.window,
            "window_count": self.window_count,
            "word_windows": [[w, c] for w, c in sorted(self.word_windows.items())],
            "pair_windows": [[i, j, c] for (i, j), c in sorted(self.pair_windows.items())],
        }

    @classmethod
    def from_json(cls, data: dict) -> "CooccurrenceStats":
        if data.get("version") != COOC_VERSION:
            raise ValueError("unsupported co-occurrence cache version")
        return cls(int(data["window_count"]),
                   {int(w): int(c) for w, c in data["word_windows"]},
                   {(int(i), int(j)): int(c) for i, j, c in data["pair_windows"]},
                   int(data["window"]))


def save_cooccurrence(stats: CooccurrenceStats, path, corpus_hash: str) -> None:
    Path(path).write_text(json.dumps(stats.to_json(corpus_hash)), encoding="utf-8")


def load_cooccurrence(path, corpus_hash: str, window: int) -> CooccurrenceStats | None:
    """Cached stats if the file matches (corpus hash, window), else None."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError):
        return None
    if data.get("corpus_hash") != corpus_hash or data.get("window") != window:
        return None
    return CooccurrenceStats.from_json(data)


def build_cooccurrence(reference: Iterable[Sequence[int]], window: int = 10,
                       words: Iterable[int] | None = None) -> CooccurrenceStats:
    """Count sliding windows (step 1, never crossing documents) containing each word and pair.

    A document shorter than ``window`` is a single window. Negative ids are
    placeholders that occupy positions but are not counted. ``words``
    restricts counting to a subset of ids, which keeps the pair table small
    on large reference corpora.
    """
    if window < 2:
        raise ValueError("window must be >= 2")
    keep = None if words is None else np.unique(np.fromiter(words, dtype=np.int64))
    rows, cols = [], []
    n_windows = 0
    for doc in reference:
        doc = np.asarray(doc, dtype=np.int64)
        L = doc.shape[0]
        if L == 0:
            continue
        nwin = max(L - window + 1, 1)
        pos = np.flatnonzero(doc >= 0 if keep is None else np.isin(doc, keep))
        if pos.size:
            # a token at position p lies in windows max(0, p-W+1) .. min(p, nwin-1)
            first = np.maximum(pos - window + 1, 0)
            last = np.minimum(pos, nwin - 1)
            span = last - first + 1
            rows.append(np.repeat(first, span) + _ramp(span) + n_windows)
            cols.append(np.repeat(doc[pos], span))
        n_windows += nwin
    if not rows:
        return CooccurrenceStats(n_windows, {}, {}, window)
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    vocab, col_idx = np.unique(cols, return_inverse=True)
    member = sp.coo_matrix((np.ones(rows.shape[0], dtype=np.int64), (rows, col_idx)),
                           shape=(n_windows, vocab.shape[0])).tocsr()
    member.data[:] = 1  # duplicates summed by tocsr: a word counts once per window
    word_counts = np.asarray(member.sum(axis=0)).ravel()
    pairs = sp.triu(member.T @ member, k=1).tocoo()
    return CooccurrenceStats(
        n_windows,
        {int(vocab[k]): int(c) for k, c in enumerate(word_counts)},
        {(int(vocab[i]), int(vocab[j])): int(c) for i, j, c in zip(pairs.row, pairs.col, pairs.data)},
        window,
    )


def _ramp(span: np.ndarray) -> np.ndarray:
    # concatenation of arange(k) for every k in span
    ends = np.cumsum(span)
    return np.arange(ends[-1]) - np.repeat(ends - span, span)


def npmi_pair(stats: CooccurrenceStats, wi: int, wj: int) -> float:
    """Normalized PMI of two words over reference windows, in [-1, 1].

    Never co-occurring: -1. Either word absent from the reference: 0.
    Co-occurring in every window: 1.
    """
    pi, pj = stats.p(wi), stats.p(wj)
    if pi == 0.0 or pj == 0.0:
        return 0.0
    pij = stats.p_joint(wi, wj)
    if pij == 0.0:
        return -1.0
    if pij == 1.0:
        return 1.0
    return float(np.log(pij / (pi * pj)) / -np.log(pij))


def npmi_topic(stats: CooccurrenceStats, top_words: Sequence[int], n: int = 15) -> float:
    """Sum of pairwise NPMI over the first ``n`` words (unscorable words skipped)."""
    if n < 2:
        raise ValueError("n must be >= 2")
    scorable = [w for w in top_words[:n] if stats.word_windows.get(w, 0) > 0]
    if len(scorable) < 2:
        warnings.warn("fewer than two top words occur in the reference corpus; NPMI set to 0",
                      stacklevel=2)
        return 0.0
    return float(sum(npmi_pair(stats, a, b) for a, b in combinations(scorable, 2)))


def npmi_model(stats: CooccurrenceStats, summary, n: int = 15) -> float:
    top = summary.top_words if hasattr(summary, "top_words") else summary
    return float(np.mean([npmi_topic(stats, words, n) for words in top]))


# -- clustering

def cluster_assign(summary) -> np.ndarray:
    """Most probable topic per document; np.argmax already prefers the lowest index."""
    theta = summary.theta if hasattr(summary, "theta") else np.asarray(summary)
    return np.argmax(theta, axis=1)


@dataclass
class ContingencyTable:
    counts: np.ndarray

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def from_assignments(cls, clusters, labels) -> "ContingencyTable":
        clusters, labels = np.asarray(clusters), np.asarray(labels)
        _, ci = np.unique(clusters, return_inverse=True)
        _, li = np.unique(labels, return_inverse=True)
        counts = np.zeros((ci.max() + 1, li.max() + 1), dtype=np.int64)
        np.add.at(counts, (ci, li), 1)
        return cls(counts)


def purity(table: ContingencyTable) -> float:
    return float(table.counts.max(axis=1).sum() / table.n)


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(table: ContingencyTable) -> float:
    """Mutual information over the arithmetic mean of the two entropies."""
    c = table.counts.astype(np.float64)
    n = table.n
    c = c[c.sum(axis=1) > 0][:, c.sum(axis=0) > 0]
    h_clusters = _entropy(c.sum(axis=1), n)
    h_labels = _entropy(c.sum(axis=0), n)
    if h_clusters == 0.0 and h_labels == 0.0:
        return 1.0
    if h_clusters == 0.0 or h_labels == 0.0:
        return 0.0
    rows, cols = c.sum(axis=1, keepdims=True), c.sum(axis=0, keepdims=True)
    nz = c > 0
    mi = float((c[nz] / n * np.log(n * c[nz] / (rows @ cols)[nz])).sum())
    return float(np.clip(mi / ((h_clusters + h_labels) / 2.0), 0.0, 1.0))


# -- classification

class LogisticOvR:
    """One-vs-rest L2-regularized logistic regression trained by full-batch gradient descent.

    Objective per class: mean log-loss + l2 * ||w||^2 / (2 n); the bias is
    not penalized.
    """

    def __init__(self, l2: float = 1.0, epochs: int = 200, lr: float = 0.1):
        self.l2, self.epochs, self.lr = l2, epochs, lr

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int) -> "LogisticOvR":
        n, f = X.shape
        Y = (y[:, None] == np.arange(n_classes)[None, :]).astype(np.float64)
        W = np.zeros((f, n_classes))
        b = np.zeros(n_classes)
        for _ in range(self.epochs):
            P = 1.0 / (1.0 + np.exp(-(X @ W + b)))
            R = (P - Y) / n
            W -= self.lr * (X.T @ R + self.l2 * W / n)
            b -= self.lr * R.sum(axis=0)
        self.W, self.b = W, b
        return self

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return X @ self.W + self.b

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.decision_function(X), axis=1)


def macro_f1(y_true, y_pred, n_classes: int) -> float:
    return float(f1_score(y_true, y_pred, labels=np.arange(n_classes), average="macro",
                          zero_division=0))


def classify(summary, labels, folds: int = 10, seed: int = 0, **clf_args) -> float:
    """Stratified k-fold macro-F1 of a linear classifier on topic proportions."""
    X = summary.theta if hasattr(summary, "theta") else np.asarray(summary, dtype=np.float64)
    y = np.asarray(labels)
    classes, y = np.unique(y, return_inverse=True)
    if classes.shape[0] < 2:
        raise ValueError("classification needs at least two classes")
    smallest = int(np.bincount(y).min())
    if smallest < folds:
        if smallest < 2:
            raise ValueError("every class needs at least two documents for cross-validation")
        warnings.warn(f"reducing folds from {folds} to {smallest} (smallest class size)",
                      stacklevel=2)
        folds = smallest
    pred = np.empty_like(y)
    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    for train_idx, test_idx in splitter.split(X, y):
        clf = LogisticOvR(**clf_args).fit(X[train_idx], y[train_idx], classes.shape[0])
        pred[test_idx] = clf.predict(X[test_idx])
    return macro_f1(y, pred, classes.shape[0])
