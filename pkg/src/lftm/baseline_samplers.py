"""Collapsed Gibbs samplers for LDA and DMM, plus the shared count state.

The count state carries both the Dirichlet-multinomial tensors (``n_*``) and
the latent-feature tensors (``k_*``); the baseline models simply never move
tokens into the latter.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gammaln

from . import kernels
from .corpus_io import Corpus

LDA_FAMILY = ("lda", "lf-lda")
DMM_FAMILY = ("dmm", "lf-dmm")
KINDS = LDA_FAMILY + DMM_FAMILY


@dataclass(frozen=True)
class Hyperparams:
    T: int
    alpha: float = 0.1
    beta: float = 0.01
    lam: float = 0.0
    mu: float = 0.01
    seed: int = 0
    baseline_iters: int | None = None
    lf_iters: int = 500

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.mu < 0:
            raise ValueError("mu must be non-negative")

    def baseline_sweeps(self, kind: str) -> int:
        """Baseline sweeps: 2000 for plain models, 1500 before an LF phase."""
        if self.baseline_iters is not None:
            return self.baseline_iters
        return 1500 if kind.startswith("lf-") else 2000

    def with_(self, **changes) -> "Hyperparams":
        return replace(self, **changes)


def family(kind: str) -> str:
    if kind in LDA_FAMILY:
        return "lda"
    if kind in DMM_FAMILY:
        return "dmm"
    raise ValueError(f"unknown model kind {kind!r}")


@dataclass
class CountState:
    family: str
    doc_ptr: np.ndarray
    words: np.ndarray
    z: np.ndarray
    s: np.ndarray
    n_tw: np.ndarray
    n_t: np.ndarray
    n_dt: np.ndarray
    k_tw: np.ndarray
    k_t: np.ndarray
    k_dt: np.ndarray
    m_t: np.ndarray
    # DMM bookkeeping: per-document distinct words and their counts (CSR)
    uniq_ptr: np.ndarray = field(repr=False, default=None)
    uniq_words: np.ndarray = field(repr=False, default=None)
    uniq_counts: np.ndarray = field(repr=False, default=None)

    @property
    def T(self) -> int:
        return self.n_tw.shape[0]

    @property
    def V(self) -> int:
        return self.n_tw.shape[1]

    @property
    def D(self) -> int:
        return self.doc_ptr.shape[0] - 1

    def doc_slice(self, d: int) -> slice:
        return slice(int(self.doc_ptr[d]), int(self.doc_ptr[d + 1]))

    def token_topics(self) -> np.ndarray:
        """Topic of every token (DMM-family documents broadcast to their tokens)."""
        if self.family == "lda":
            return self.z
        return np.repeat(self.z, np.diff(self.doc_ptr))

    def copy(self) -> "CountState":
        arrays = {k: v.copy() for k, v in self.__dict__.items()
                  if isinstance(v, np.ndarray) and k not in _SHARED}
        return replace(self, **arrays)

    def tensors(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in _COUNT_FIELDS}

    def consistent(self) -> bool:
        fresh = recount(self.family, self.doc_ptr, self.words, self.z, self.s, self.T, self.V)
        return all(np.array_equal(fresh[k], getattr(self, k)) for k in _COUNT_FIELDS)


_COUNT_FIELDS = ("n_tw", "n_t", "n_dt", "k_tw", "k_t", "k_dt", "m_t")
_SHARED = ("doc_ptr", "words", "uniq_ptr", "uniq_words", "uniq_counts")


def recount(fam: str, doc_ptr, words, z, s, T: int, V: int) -> dict[str, np.ndarray]:
    """Build every count tensor from scratch out of the assignments."""
    D = doc_ptr.shape[0] - 1
    doc_of = np.repeat(np.arange(D), np.diff(doc_ptr))
    topic = z if fam == "lda" else np.repeat(z, np.diff(doc_ptr))
    on = s.astype(bool)
    out = {}
    for prefix, mask in (("n", ~on), ("k", on)):
        tw = np.zeros((T, V), dtype=np.int64)
        np.add.at(tw, (topic[mask], words[mask]), 1)
        dt = np.zeros((D, T), dtype=np.int64)
        np.add.at(dt, (doc_of[mask], topic[mask]), 1)
        out[f"{prefix}_tw"] = tw
        out[f"{prefix}_t"] = tw.sum(axis=1)
        out[f"{prefix}_dt"] = dt
    out["m_t"] = (np.bincount(z, minlength=T).astype(np.int64) if fam == "dmm"
                  else np.zeros(T, dtype=np.int64))
    return out


def _unique_per_doc(doc_ptr, words):
    ptr = [0]
    uw, uc = [], []
    for d in range(doc_ptr.shape[0] - 1):
        w, c = np.unique(words[doc_ptr[d]:doc_ptr[d + 1]], return_counts=True)
        uw.append(w)
        uc.append(c)
        ptr.append(ptr[-1] + len(w))
    return (np.array(ptr, dtype=np.int64), np.concatenate(uw).astype(np.int64),
            np.concatenate(uc).astype(np.int64))


def state_from_assignments(corpus: Corpus, T: int, fam: str, z, s=None) -> CountState:
    doc_ptr, words = corpus.flat()
    z = np.asarray(z, dtype=np.int64)
    s = np.zeros(words.shape[0], dtype=np.int8) if s is None else np.asarray(s, dtype=np.int8)
    expected = words.shape[0] if fam == "lda" else len(corpus)
    if z.shape != (expected,) or s.shape != words.shape:
        raise ValueError("assignment arrays do not match the corpus")
    if z.size and (z.min() < 0 or z.max() >= T):
        raise ValueError("topic assignment out of range")
    V = corpus.vocabulary.V
    counts = recount(fam, doc_ptr, words, z, s, T, V)
    uniq = _unique_per_doc(doc_ptr, words) if fam == "dmm" else (None, None, None)
    return CountState(fam, doc_ptr, words, z, s, **counts,
                      uniq_ptr=uniq[0], uniq_words=uniq[1], uniq_counts=uniq[2])


def init_assignments(corpus: Corpus, hp: Hyperparams, kind: str, rng: np.random.Generator) -> CountState:
    """Uniform random topics per token (LDA family) or per document (DMM family)."""
    fam = family(kind)
    n = corpus.num_tokens if fam == "lda" else len(corpus)
    z = rng.integers(0, hp.T, size=n)
    return state_from_assignments(corpus, hp.T, fam, z)


# -- single-site conditionals (reference implementations, used by tests and summaries)

def remove_token(state: CountState, d: int, i: int) -> None:
    """Take token ``i`` of document ``d`` out of the counts (LDA family)."""
    _move_token(state, d, i, -1)


def add_token(state: CountState, d: int, i: int, t: int, s: int = 0) -> None:
    pos = int(state.doc_ptr[d]) + i
    state.z[pos] = t
    state.s[pos] = s
    _move_token(state, d, i, +1)


def _move_token(state, d, i, sign):
    pos = int(state.doc_ptr[d]) + i
    w, t = state.words[pos], state.z[pos]
    if state.s[pos]:
        state.k_tw[t, w] += sign
        state.k_t[t] += sign
        state.k_dt[d, t] += sign
    else:
        state.n_tw[t, w] += sign
        state.n_t[t] += sign
        state.n_dt[d, t] += sign


def remove_document(state: CountState, d: int) -> None:
    """Take document ``d`` out of the counts (DMM family)."""
    _move_document(state, d, -1)


def add_document(state: CountState, d: int, t: int, s=None) -> None:
    state.z[d] = t
    if s is not None:
        state.s[state.doc_slice(d)] = s
    _move_document(state, d, +1)


def _move_document(state, d, sign):
    t = state.z[d]
    sl = state.doc_slice(d)
    ws, on = state.words[sl], state.s[sl].astype(bool)
    state.m_t[t] += sign
    np.add.at(state.n_tw[t], ws[~on], sign)
    np.add.at(state.k_tw[t], ws[on], sign)
    state.n_t[t] += sign * int((~on).sum())
    state.k_t[t] += sign * int(on.sum())
    state.n_dt[d, t] += sign * int((~on).sum())
    state.k_dt[d, t] += sign * int(on.sum())


def dirichlet_word_term(state: CountState, hp: Hyperparams, w: int) -> np.ndarray:
    """(n_tw[t, w] + beta) / (n_t[t] + V beta) for every topic."""
    return (state.n_tw[:, w] + hp.beta) / (state.n_t + state.V * hp.beta)


def lda_conditional(state: CountState, hp: Hyperparams, d: int, i: int) -> np.ndarray:
    """Unnormalized topic weights for token (d, i), its counts already removed."""
    w = state.words[int(state.doc_ptr[d]) + i]
    return (state.n_dt[d] + hp.alpha) * dirichlet_word_term(state, hp, w)


def dmm_log_weights(state: CountState, corpus: Corpus | None, hp: Hyperparams, d: int) -> np.ndarray:
    """Log of the collapsed DMM conditional for document ``d`` (already removed).

    Gamma ratios are evaluated with ``gammaln``; they overflow in linear space
    for realistic counts.
    """
    sl = state.doc_slice(d)
    uw, uc = np.unique(state.words[sl], return_counts=True)
    nd = sl.stop - sl.start
    vbeta = state.V * hp.beta
    base = state.n_tw[:, uw] + hp.beta
    return (np.log(state.m_t + hp.alpha) + gammaln(state.n_t + vbeta)
            - gammaln(state.n_t + nd + vbeta)
            + (gammaln(base + uc) - gammaln(base)).sum(axis=1))


def normalize_log(logw: np.ndarray) -> np.ndarray:
    p = np.exp(logw - logw.max())
    return p / p.sum()


# -- sweeps

def _no_cate(state):
    return np.zeros((1, 1))


def lda_sweep(state: CountState, corpus: Corpus | None, hp: Hyperparams,
              rng: np.random.Generator) -> CountState:
    """One pass over every token in corpus order.

    Draws a (2, N) block of uniforms: the first row picks topics, the second
    is reserved for indicators so LF-LDA sweeps consume the stream identically.
    """
    u = rng.random((2, state.words.shape[0]))
    kernels.active().lda_sweep(
        state.doc_ptr, state.words, state.z, state.s, state.n_tw, state.n_t, state.n_dt,
        state.k_tw, state.k_t, state.k_dt, _no_cate(state), hp.alpha, hp.beta, 0.0, False,
        u[0], u[1])
    return state


def dmm_sweep(state: CountState, corpus: Corpus | None, hp: Hyperparams,
              rng: np.random.Generator) -> CountState:
    u = rng.random(state.D)
    kernels.active().dmm_sweep(
        state.doc_ptr, state.words, state.uniq_ptr, state.uniq_words, state.uniq_counts,
        state.z, state.n_tw, state.n_t, state.n_dt, state.m_t, hp.alpha, hp.beta, u)
    return state


def baseline_sweep(kind: str):
    return lda_sweep if family(kind) == "lda" else dmm_sweep


def train_baseline(corpus: Corpus, hp: Hyperparams, kind: str, iters: int | None = None,
                   rng: np.random.Generator | None = None, callback=None) -> CountState:
    """Random initialization followed by ``iters`` baseline sweeps."""
    if rng is None:
        rng = np.random.default_rng(hp.seed)
    if iters is None:
        iters = hp.baseline_sweeps(kind)
    state = init_assignments(corpus, hp, kind, rng)
    sweep = baseline_sweep(kind)
    for it in range(iters):
        sweep(state, corpus, hp, rng)
        if callback is not None:
            callback(it, state)
    return state
