"""LF-LDA and LF-DMM: Dirichlet-multinomial topic models whose topic-to-word
distribution mixes the usual smoothed multinomial with a log-linear model
over pre-trained word vectors.

Training runs the matching baseline sampler first, seeds the component
indicators from their Bernoulli(lambda) prior, then alternates a MAP refit of
the topic vectors with one Gibbs sweep over the corpus.
"""

from __future__ import annotations

import datetime as _dt
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import gammaln, xlogy

from . import kernels
from .baseline_samplers import (
    CountState,
    Hyperparams,
    add_document,
    dirichlet_word_term,
    dmm_log_weights,
    family,
    normalize_log,
    remove_document,
    state_from_assignments,
    train_baseline,
)
from .corpus_io import Corpus, Vocabulary
from .latent_feature import OptConfig, cate_table, map_estimate

logger = logging.getLogger(__name__)

SNAPSHOT_VERSION = 1


class SnapshotMismatch(ValueError):
    """Snapshot does not belong to the given corpus."""


@dataclass
class LfModel:
    hp: Hyperparams
    state: CountState
    tau: np.ndarray
    omega: np.ndarray | None
    kind: str
    opt: OptConfig = field(default_factory=OptConfig)
    threads: int = 1
    last_objective: float = float("nan")

    @property
    def latent(self) -> bool:
        return self.kind.startswith("lf-")

    @property
    def lam(self) -> float:
        return self.hp.lam if self.latent else 0.0

    def cate(self) -> np.ndarray:
        """T x V CatE probabilities for the current topic vectors."""
        if not self.latent:
            return np.zeros((self.state.T, self.state.V))
        return np.exp(cate_table(self.tau, self.omega))

    def refit_topic_vectors(self) -> None:
        self.tau, fits = map_estimate(self.tau, self.state.k_tw, self.omega, self.hp.mu,
                                      self.opt, self.threads, return_fits=True)
        self.last_objective = float(sum(f.objective for f in fits))


def _cate_column(tau, omega, w, cate):
    if cate is not None:
        return cate[:, w]
    return np.exp(cate_table(tau, omega)[:, w])


def indicator_probability(dirichlet: np.ndarray, cate_p: np.ndarray, lam: float) -> np.ndarray:
    """P(s = 1): share of the latent-feature component in the word mixture."""
    p1 = lam * np.asarray(cate_p)
    return p1 / ((1.0 - lam) * np.asarray(dirichlet) + p1)


# -- LF-LDA

def lflda_conditional_topic(state: CountState, tau, omega, hp: Hyperparams, d: int, i: int,
                            cate=None) -> np.ndarray:
    """Topic weights for token (d, i) with the indicator integrated out."""
    w = state.words[int(state.doc_ptr[d]) + i]
    word_term = (1.0 - hp.lam) * dirichlet_word_term(state, hp, w) + hp.lam * _cate_column(tau, omega, w, cate)
    return (state.n_dt[d] + state.k_dt[d] + hp.alpha) * word_term


def lflda_sample_indicator(state: CountState, tau, omega, hp: Hyperparams, d: int, i: int,
                           t: int, rng: np.random.Generator, cate=None) -> int:
    w = state.words[int(state.doc_ptr[d]) + i]
    p = indicator_probability(dirichlet_word_term(state, hp, w)[t],
                              _cate_column(tau, omega, w, cate)[t], hp.lam)
    return int(rng.random() < p)


def lflda_sweep(model: LfModel, corpus: Corpus | None, rng: np.random.Generator) -> LfModel:
    """MAP refit of every topic vector, then one pass over all tokens."""
    model.refit_topic_vectors()
    st = model.state
    u = rng.random((2, st.words.shape[0]))
    kernels.active().lda_sweep(
        st.doc_ptr, st.words, st.z, st.s, st.n_tw, st.n_t, st.n_dt, st.k_tw, st.k_t, st.k_dt,
        model.cate(), model.hp.alpha, model.hp.beta, model.hp.lam, True, u[0], u[1])
    return model


# -- LF-DMM

def lfdmm_exact_joint(state: CountState, tau, omega, hp: Hyperparams, d: int, t: int,
                      s_vector) -> float:
    """Unnormalized log probability of (z_d = t, s_d) without the frozen-count shortcut.

    Exponential in document length if enumerated over ``s_d``; kept as an
    oracle for the factorized sampler.
    """
    sl = state.doc_slice(d)
    ws = state.words[sl]
    sv = np.asarray(s_vector, dtype=bool)
    lam, vbeta = hp.lam, state.V * hp.beta
    n_dir, n_lat = int((~sv).sum()), int(sv.sum())
    out = xlogy(n_lat, lam) + xlogy(n_dir, 1.0 - lam) + np.log(state.m_t[t] + hp.alpha)
    out += gammaln(state.n_t[t] + vbeta) - gammaln(state.n_t[t] + n_dir + vbeta)
    uw, uc = np.unique(ws[~sv], return_counts=True)
    base = state.n_tw[t, uw] + hp.beta
    out += float((gammaln(base + uc) - gammaln(base)).sum())
    if n_lat:
        log_cate = cate_table(tau[t:t + 1], omega)[0]
        out += float(log_cate[ws[sv]].sum())
    return float(out)


def lfdmm_log_topic_weights(state: CountState, tau, omega, hp: Hyperparams, d: int,
                            cate=None) -> np.ndarray:
    ws = state.words[state.doc_slice(d)]
    if cate is None:
        cate = np.exp(cate_table(tau, omega))
    dirichlet = (state.n_tw[:, ws] + hp.beta) / (state.n_t + state.V * hp.beta)[:, None]
    with np.errstate(divide="ignore"):
        mix = np.log((1.0 - hp.lam) * dirichlet + hp.lam * cate[:, ws])
    return np.log(state.m_t + hp.alpha) + mix.sum(axis=1)


def lfdmm_topic_weights(state: CountState, tau, omega, hp: Hyperparams, d: int,
                        cate=None) -> np.ndarray:
    """Frozen-count topic weights for document ``d`` (already removed), indicators summed out."""
    return np.exp(lfdmm_log_topic_weights(state, tau, omega, hp, d, cate))


def lfdmm_sample_indicators(state: CountState, tau, omega, hp: Hyperparams, d: int, t: int,
                            rng: np.random.Generator, cate=None) -> np.ndarray:
    ws = state.words[state.doc_slice(d)]
    if cate is None:
        cate = np.exp(cate_table(tau, omega))
    dirichlet = (state.n_tw[t, ws] + hp.beta) / (state.n_t[t] + state.V * hp.beta)
    p = indicator_probability(dirichlet, cate[t, ws], hp.lam)
    return (rng.random(ws.shape[0]) < p).astype(np.int8)


def lfdmm_sweep(model: LfModel, corpus: Corpus | None, rng: np.random.Generator) -> LfModel:
    model.refit_topic_vectors()
    st = model.state
    u_topic = rng.random(st.D)
    u_ind = rng.random(st.words.shape[0])
    kernels.active().lfdmm_sweep(
        st.doc_ptr, st.words, st.z, st.s, st.n_tw, st.n_t, st.n_dt, st.k_tw, st.k_t, st.k_dt,
        st.m_t, model.cate(), model.hp.alpha, model.hp.beta, model.hp.lam, u_topic, u_ind)
    return model


def lf_sweep(kind: str):
    return lflda_sweep if family(kind) == "lda" else lfdmm_sweep


# -- training

def streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """(sampling stream, indicator-initialization stream) for a run seed.

    Seeding the indicators from a separate stream keeps the sampling stream
    identical to a plain baseline run of the same length.
    """
    main, ind = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(main), np.random.default_rng(ind)


def train(corpus: Corpus, hp: Hyperparams, kind: str, omega: np.ndarray | None = None,
          opt: OptConfig = OptConfig(), threads: int = 1, callback=None) -> LfModel:
    """Train any of lda, dmm, lf-lda, lf-dmm.

    ``callback(phase, iteration, model)`` is invoked after every sweep.
    """
    fam = family(kind)
    latent = kind.startswith("lf-")
    if latent:
        if omega is None:
            raise ValueError(f"{kind} needs word embeddings")
        if omega.shape[0] != corpus.vocabulary.V:
            raise ValueError("embedding rows do not match the vocabulary")
    rng, ind_rng = streams(hp.seed)
    model = LfModel(hp, None, np.zeros((hp.T, omega.shape[1] if latent else 0)),
                    omega if latent else None, kind, opt, threads)

    def on_baseline(it, state):
        if callback is not None:
            model.state = state
            callback("baseline", it, model)

    state = train_baseline(corpus, hp, fam, hp.baseline_sweeps(kind), rng=rng, callback=on_baseline)
    model.state = state
    if not latent:
        return model

    s = (ind_rng.random(state.words.shape[0]) < hp.lam).astype(np.int8)
    model.state = state_from_assignments(corpus, hp.T, fam, state.z, s)
    sweep = lf_sweep(kind)
    for it in range(hp.lf_iters):
        sweep(model, corpus, rng)
        if callback is not None:
            callback("lf", it, model)
    return model


# -- posterior summaries

@dataclass
class PosteriorSummary:
    theta: np.ndarray
    topic_word: np.ndarray
    top_words: list[list[int]]


def topic_word_distribution(model: LfModel) -> np.ndarray:
    st, hp = model.state, model.hp
    lam = model.lam
    dirichlet = (st.n_tw + hp.beta) / (st.n_t + st.V * hp.beta)[:, None]
    if lam == 0.0:
        return dirichlet
    return (1.0 - lam) * dirichlet + lam * model.cate()


def top_word_ids(topic_word: np.ndarray, n: int = 15) -> list[list[int]]:
    """Descending probability, lowest word id first among ties."""
    V = topic_word.shape[1]
    ids = np.arange(V)
    return [np.lexsort((ids, -row))[:n].tolist() for row in topic_word]


def document_topic_distribution(model: LfModel) -> np.ndarray:
    st, hp = model.state, model.hp
    if st.family == "lda":
        theta = st.n_dt + st.k_dt + hp.alpha
        return theta / theta.sum(axis=1, keepdims=True)
    work = st.copy()
    cate = model.cate() if model.latent else None
    theta = np.empty((st.D, st.T))
    for d in range(st.D):
        remove_document(work, d)
        if model.latent:
            logw = lfdmm_log_topic_weights(work, model.tau, model.omega, hp, d, cate)
        else:
            logw = dmm_log_weights(work, None, hp, d)
        theta[d] = normalize_log(logw)
        add_document(work, d, work.z[d])
    return theta


def summarize(model: LfModel, top: int = 15) -> PosteriorSummary:
    topic_word = topic_word_distribution(model)
    topic_word = topic_word / topic_word.sum(axis=1, keepdims=True)
    return PosteriorSummary(document_topic_distribution(model), topic_word,
                            top_word_ids(topic_word, top))


# -- snapshots

def to_snapshot(model: LfModel, vocab: Vocabulary, config: dict | None = None) -> dict:
    tau = model.tau if model.latent else np.zeros((model.hp.T, 0))
    return {
        "schema_version": SNAPSHOT_VERSION,
        "kind": model.kind,
        "hp": asdict(model.hp),
        "opt": asdict(model.opt),
        "vocab_sha256": vocab.digest(),
        "num_docs": int(model.state.D),
        "z": model.state.z.tolist(),
        "s": model.state.s.tolist(),
        "tau": {"shape": list(tau.shape), "data": tau.ravel().tolist()},
        "config": config or {},
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }


def dumps_snapshot(snapshot: dict) -> str:
    return json.dumps(snapshot, sort_keys=True, indent=1)


def save_model(model: LfModel, vocab: Vocabulary, path, config: dict | None = None) -> None:
    Path(path).write_text(dumps_snapshot(to_snapshot(model, vocab, config)), encoding="utf-8")


def from_snapshot(data: dict, corpus: Corpus, omega: np.ndarray | None = None) -> LfModel:
    if data.get("schema_version") != SNAPSHOT_VERSION:
        raise SnapshotMismatch(f"unsupported snapshot version {data.get('schema_version')}")
    if data["vocab_sha256"] != corpus.vocabulary.digest() or data["num_docs"] != len(corpus):
        raise SnapshotMismatch("snapshot was trained on a different corpus")
    kind = data["kind"]
    hp = Hyperparams(**data["hp"])
    state = state_from_assignments(corpus, hp.T, family(kind), data["z"], data["s"])
    tau = np.array(data["tau"]["data"], dtype=np.float64).reshape(data["tau"]["shape"])
    if kind.startswith("lf-"):
        if omega is None:
            raise ValueError(f"{kind} snapshot needs word embeddings")
        if omega.shape[1] != tau.shape[1]:
            raise SnapshotMismatch("embedding dimensionality differs from the snapshot")
    return LfModel(hp, state, tau, omega if kind.startswith("lf-") else None, kind,
                   OptConfig(**data["opt"]))


def load_model(path, corpus: Corpus, omega: np.ndarray | None = None) -> LfModel:
    return from_snapshot(json.loads(Path(path).read_text(encoding="utf-8")), corpus, omega)
