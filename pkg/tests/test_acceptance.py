"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line (printed in the "acceptance criteria"
section of the pytest summary) before asserting. Tolerances are pinned as
module constants.
"""

import itertools
import json
import os
import time
import warnings

import numpy as np
import pytest

from lftm.baseline_samplers import (
    Hyperparams,
    lda_conditional,
    normalize_log,
    recount,
    remove_document,
    remove_token,
    state_from_assignments,
)
from lftm.cli import main
from lftm.corpus_io import Corpus, Document
from lftm.evaluation import (
    ContingencyTable,
    CooccurrenceStats,
    build_cooccurrence,
    classify,
    cluster_assign,
    nmi,
    npmi_model,
    npmi_pair,
    purity,
)
from lftm.latent_feature import ConvergenceWarning, map_estimate, topic_nll, topic_nll_gradient
from lftm.lf_models import (
    LfModel,
    lfdmm_exact_joint,
    lfdmm_log_topic_weights,
    lfdmm_sweep,
    lfdmm_topic_weights,
    lflda_conditional_topic,
    summarize,
    train,
)
from lftm.synthetic import block_embeddings, planted_corpus, random_corpus

C1_MAX_SECONDS = 10.0
C2_INSTANCES, C2_REL_TOL, C2_MAX_SECONDS = 100, 1e-5, 5.0
C3_STATES, C3_REL_TOL = 1000, 1e-12
C4_STATES, C4_TOL, C4_TV_BOUND = 500, 1e-9, 0.5
C5_NORM_BOUND = 1e-4
C6_SEEDS, C6_MIN_PURITY, C6_MAX_SECONDS = 10, 0.90, 60.0
C7_SEEDS = 10
PLANTED_SWEEPS = dict(baseline_iters=200, lf_iters=100)


def _random_state(seed, fam, lam, single=False, max_len=4, zero_k=False):
    rng = np.random.default_rng(seed)
    T = int(rng.integers(1, 6))
    V = int(rng.integers(2, 9))
    corpus = random_corpus(n_docs=int(rng.integers(2, 8)), V=V, max_len=max_len, seed=seed)
    if single:
        corpus = Corpus(corpus.vocabulary, corpus.documents + [Document([int(rng.integers(V))])])
    n = corpus.num_tokens if fam == "lda" else len(corpus)
    s = None if zero_k else (rng.random(corpus.num_tokens) < 0.5).astype(np.int8)
    state = state_from_assignments(corpus, T, fam, rng.integers(0, T, size=n), s)
    dim = int(rng.integers(1, 5))
    omega = rng.normal(size=(V, dim)) * 2
    tau = rng.normal(size=(T, dim))
    hp = Hyperparams(T=T, lam=lam, alpha=float(rng.uniform(0.01, 2)), beta=float(rng.uniform(0.001, 1)))
    return corpus, state, tau, omega, hp


def test_c1_count_consistency(acceptance):
    corpus = planted_corpus(seed=0)
    omega = block_embeddings(seed=0)
    total = corpus.num_tokens
    checks = []

    def check(phase, it, model):
        st = model.state
        fresh = recount(st.family, st.doc_ptr, st.words, st.z, st.s, st.T, st.V)
        ok = all(np.array_equal(v, getattr(st, k)) for k, v in fresh.items())
        checks.append(ok and st.n_t.sum() + st.k_t.sum() == total)

    start = time.perf_counter()
    for kind in ("lda", "dmm", "lf-lda", "lf-dmm"):
        train(corpus, Hyperparams(T=3, lam=0.6, seed=1, baseline_iters=20, lf_iters=20), kind, omega,
              callback=check)
    elapsed = time.perf_counter() - start
    passed = all(checks) and elapsed < C1_MAX_SECONDS
    acceptance(1, passed, f"{sum(checks)}/{len(checks)} sweeps consistent, {elapsed:.2f}s "
                          f"(limit {C1_MAX_SECONDS:.0f}s)")
    assert passed


def test_c2_gradient_check(acceptance):
    start = time.perf_counter()
    worst = 0.0
    for k in range(C2_INSTANCES):
        rng = np.random.default_rng(1000 + k)
        d, V = int(rng.integers(1, 6)), int(rng.integers(2, 11))
        mu = (0.0, 0.01)[k % 2]
        omega, tau = rng.normal(size=(V, d)), rng.normal(size=d)
        kr = rng.integers(0, 10, size=V).astype(float)
        g = topic_nll_gradient(tau, kr, omega, mu)
        fd = np.empty(d)
        for j in range(d):
            h = 1e-5 * (1 + abs(tau[j]))
            e = np.zeros(d)
            e[j] = h
            fd[j] = (topic_nll(tau + e, kr, omega, mu) - topic_nll(tau - e, kr, omega, mu)) / (2 * h)
        # relative to the gradient scale, floored at 1 so near-zero gradients are not amplified
        worst = max(worst, float(np.abs(g - fd).max() / max(1.0, np.abs(fd).max())))
    elapsed = time.perf_counter() - start
    passed = worst <= C2_REL_TOL and elapsed < C2_MAX_SECONDS
    acceptance(2, passed, f"max relative error {worst:.2e} (tol {C2_REL_TOL:.0e}) over "
                          f"{C2_INSTANCES} instances, {elapsed:.2f}s")
    assert passed


def test_c3_reduction_equivalence(acceptance):
    worst_lda = worst_dmm = 0.0
    for k in range(C3_STATES):
        corpus, state, tau, omega, hp = _random_state(k, "lda", 0.0, zero_k=True)
        d = k % len(corpus)
        remove_token(state, d, 0)
        a = lflda_conditional_topic(state, tau, omega, hp, d, 0)
        b = lda_conditional(state, hp, d, 0)
        worst_lda = max(worst_lda, float(np.max(np.abs(a - b) / b)))

        corpus, state, tau, omega, hp = _random_state(k, "dmm", 0.0)
        d = k % len(corpus)
        remove_document(state, d)
        ws = state.words[state.doc_slice(d)]
        frozen = (state.m_t + hp.alpha) * np.prod(
            (state.n_tw[:, ws] + hp.beta) / (state.n_t + state.V * hp.beta)[:, None], axis=1)
        got = lfdmm_topic_weights(state, tau, omega, hp, d)
        worst_dmm = max(worst_dmm, float(np.max(np.abs(got - frozen) / frozen)))
    passed = worst_lda <= C3_REL_TOL and worst_dmm <= C3_REL_TOL
    acceptance(3, passed, f"LF-LDA vs LDA max rel diff {worst_lda:.1e}, LF-DMM vs frozen DMM "
                          f"{worst_dmm:.1e} (tol {C3_REL_TOL:.0e}) on {C3_STATES} states each")
    assert passed


def _exact_posterior(state, tau, omega, hp, d):
    n = state.doc_slice(d).stop - state.doc_slice(d).start
    logs = [np.logaddexp.reduce([lfdmm_exact_joint(state, tau, omega, hp, d, t, sv)
                                 for sv in itertools.product([0, 1], repeat=n)])
            for t in range(state.T)]
    return normalize_log(np.array(logs))


def test_c4_single_token_oracle(acceptance):
    worst = 0.0
    for k in range(C4_STATES):
        lam = float(np.random.default_rng(k).random())
        corpus, state, tau, omega, hp = _random_state(k, "dmm", lam, single=True)
        d = len(corpus) - 1
        remove_document(state, d)
        q = normalize_log(lfdmm_log_topic_weights(state, tau, omega, hp, d))
        worst = max(worst, float(np.abs(q - _exact_posterior(state, tau, omega, hp, d)).max()))
    gaps = []
    for k in range(200):
        lam = float(np.random.default_rng(k).random())
        corpus, state, tau, omega, hp = _random_state(10_000 + k, "dmm", lam, max_len=3)
        d = next((i for i in range(len(corpus)) if 2 <= len(corpus.documents[i].tokens) <= 3), None)
        if d is None:
            continue
        remove_document(state, d)
        q = normalize_log(lfdmm_log_topic_weights(state, tau, omega, hp, d))
        gaps.append(0.5 * float(np.abs(q - _exact_posterior(state, tau, omega, hp, d)).sum()))
    gaps = np.array(gaps)
    passed = worst <= C4_TOL and np.isfinite(gaps).all() and gaps.max() < C4_TV_BOUND
    acceptance(4, passed, f"single-token max abs diff {worst:.1e} (tol {C4_TOL:.0e}, {C4_STATES} states); "
                          f"2-3 token TV gap median {np.median(gaps):.4f} max {gaps.max():.4f} "
                          f"over {gaps.size} docs (bound {C4_TV_BOUND})")
    assert passed


def test_c5_map_step(acceptance):
    rng = np.random.default_rng(0)
    omega = rng.normal(size=(20, 5))
    tau = map_estimate(rng.normal(size=(4, 5)) * 3, np.zeros((4, 20)), omega, 0.01)
    zero_norm = float(np.linalg.norm(tau, axis=1).max())

    corpus = planted_corpus(seed=2)
    model = train(corpus, Hyperparams(T=3, lam=0.6, seed=2, baseline_iters=30, lf_iters=1), "lf-dmm",
                  block_embeddings(seed=2))
    worst_grad, increases = 0.0, 0
    sweep_rng = np.random.default_rng(5)
    with warnings.catch_warnings():
        warnings.simplefilter("error", ConvergenceWarning)
        for _ in range(15):
            K = model.state.k_tw.astype(float)
            before = model.tau.copy()
            lfdmm_sweep(model, corpus, sweep_rng)  # refits tau against K, then resamples
            for t in range(model.hp.T):
                g = np.linalg.norm(topic_nll_gradient(model.tau[t], K[t], model.omega, model.hp.mu))
                worst_grad = max(worst_grad, float(g))
                if topic_nll(model.tau[t], K[t], model.omega, 0.01) > \
                        topic_nll(before[t], K[t], model.omega, 0.01) + 1e-12:
                    increases += 1
    passed = zero_norm < C5_NORM_BOUND and worst_grad <= C5_NORM_BOUND and increases == 0
    acceptance(5, passed, f"K=0 max ||tau_t|| {zero_norm:.1e}; warm-started max ||grad|| "
                          f"{worst_grad:.1e} (bound {C5_NORM_BOUND:.0e}); objective increases {increases}")
    assert passed


def _planted_run(seed, kind, lam):
    corpus = planted_corpus(seed=seed)
    omega = block_embeddings(seed=seed) if kind.startswith("lf-") else None
    model = train(corpus, Hyperparams(T=2, lam=lam, seed=seed, **PLANTED_SWEEPS), kind, omega)
    return corpus, summarize(model)


def test_c6_planted_recovery(acceptance):
    start = time.perf_counter()
    scores = {"lf-dmm": [], "dmm": []}
    for seed in range(C6_SEEDS):
        for kind, lam in (("lf-dmm", 0.6), ("dmm", 0.0)):
            corpus, summ = _planted_run(seed, kind, lam)
            table = ContingencyTable.from_assignments(cluster_assign(summ), corpus.labels)
            scores[kind].append(purity(table))
    elapsed = time.perf_counter() - start
    lf, base = float(np.median(scores["lf-dmm"])), float(np.median(scores["dmm"]))
    passed = lf >= C6_MIN_PURITY and lf >= base and elapsed < C6_MAX_SECONDS
    acceptance(6, passed, f"median purity LF-DMM {lf:.4f} vs DMM {base:.4f} (min {C6_MIN_PURITY}), "
                          f"{elapsed:.1f}s (limit {C6_MAX_SECONDS:.0f}s)")
    assert passed


@pytest.mark.xfail(strict=True, reason="embeddings carry no signal beyond the corpus it is scored on; "
                                      "see the decisions ledger")
def test_c7_coherence_direction(acceptance):
    scores = {"lf-dmm": [], "dmm": []}
    for seed in range(C7_SEEDS):
        for kind, lam in (("lf-dmm", 1.0), ("dmm", 0.0)):
            corpus, summ = _planted_run(seed, kind, lam)
            stats = build_cooccurrence([d.tokens for d in corpus.documents], window=10)
            scores[kind].append(npmi_model(stats, summ, 15))
    lf, base = float(np.median(scores["lf-dmm"])), float(np.median(scores["dmm"]))
    passed = lf >= base
    acceptance(7, passed, f"median NPMI LF-DMM(lambda=1) {lf:.3f} vs DMM {base:.3f}")
    assert passed


def test_c8_metric_units(acceptance):
    checks = {
        "purity 4/6": purity(ContingencyTable.from_assignments(
            [0, 0, 0, 1, 1, 1], ["a", "a", "b", "b", "b", "a"])) == pytest.approx(4 / 6, abs=1e-15),
        "nmi identical": nmi(ContingencyTable.from_assignments([0, 1, 1, 2], [5, 4, 4, 3])) == pytest.approx(1.0, abs=1e-12),
        "nmi single cluster": nmi(ContingencyTable.from_assignments([0, 0, 0, 0], [0, 1, 0, 1])) == 0.0,
        "npmi perfect": npmi_pair(CooccurrenceStats(5, {0: 1, 1: 1}, {(0, 1): 1}), 0, 1) == pytest.approx(1.0, abs=1e-12),
        "npmi independent": npmi_pair(CooccurrenceStats(4, {0: 2, 1: 2}, {(0, 1): 1}), 0, 1) == pytest.approx(0.0, abs=1e-12),
        "classify separable": classify(np.eye(2)[np.repeat([0, 1], 10)], np.repeat([0, 1], 10)) == 1.0,
    }
    failed = [k for k, v in checks.items() if not v]
    acceptance(8, not failed, f"{len(checks) - len(failed)}/{len(checks)} exact values"
                              + (f", failed: {failed}" if failed else ""))
    assert not failed


def test_c9_determinism(acceptance, tmp_path):
    corpus = planted_corpus(n_docs=60, seed=4)
    cpath = tmp_path / "corpus.json"
    corpus.save(cpath)
    epath = tmp_path / "vec.txt"
    epath.write_text("".join(w + " " + " ".join(repr(float(x)) for x in row) + "\n"
                             for w, row in zip(corpus.vocabulary.words, block_embeddings(seed=4))))
    identical = []
    for kind in ("lda", "dmm", "lf-lda", "lf-dmm"):
        blobs = []
        for run in range(2):
            out = tmp_path / f"{kind}-{run}.json"
            assert main(["train", "--corpus", str(cpath), "--kind", kind, "--lambda", "0.6",
                         "--embeddings", str(epath), "-T", "3", "--seed", "7", "--baseline-iters", "20",
                         "--lf-iters", "10", "--log-every", "0", "--output", str(out)]) == 0
            blobs.append("\n".join(line for line in out.read_text().splitlines()
                                   if not line.lstrip().startswith('"created"')))
        identical.append(blobs[0] == blobs[1])
        assert "created" in json.loads(out.read_text())
    acceptance(9, all(identical), f"{sum(identical)}/4 model kinds byte-identical modulo timestamp")
    assert all(identical)


N20_CORPUS = os.environ.get("LFTM_N20_CORPUS")
GLOVE_VECTORS = os.environ.get("LFTM_GLOVE_VECTORS")


def test_c10_external_n20(acceptance, tmp_path):
    if not (N20_CORPUS and GLOVE_VECTORS):
        acceptance(10, "SKIP", "optional; set LFTM_N20_CORPUS and LFTM_GLOVE_VECTORS to run")
        pytest.skip("external 20-Newsgroups/GloVe data not provided")
    out = tmp_path / "n20.json"
    code = main(["preprocess", "--input", N20_CORPUS, "--output", str(out), "--min-count", "10",
                 "--embeddings", GLOVE_VECTORS])
    corpus = Corpus.load(out)
    v_ok = abs(corpus.vocabulary.V - 19572) <= 0.05 * 19572
    d_ok = abs(len(corpus) - 18820) <= 0.01 * 18820
    acceptance(10, code == 0 and v_ok and d_ok, f"V={corpus.vocabulary.V} docs={len(corpus)}")
    assert code == 0 and v_ok and d_ok
