"""Time Gibbs sweeps under the numba and pure-numpy kernel backends.

    python benchmarks/bench_sweeps.py [--docs 2000] [--topics 20] [--sweeps 5]

Prints one TSV row per (model kind, backend) with seconds per sweep and the
speedup of numba over numpy. Compilation is excluded by a warm-up sweep.
LF timings include the per-sweep topic-vector refit, which is the same
scipy code under both backends.
"""

import argparse
import time
import warnings

import numpy as np

from lftm import kernels
from lftm.baseline_samplers import Hyperparams, baseline_sweep, init_assignments, state_from_assignments
from lftm.latent_feature import ConvergenceWarning
from lftm.lf_models import LfModel, lf_sweep, streams
from lftm.synthetic import block_embeddings, planted_corpus


def _setup(corpus, omega, hp, kind):
    rng, ind_rng = streams(hp.seed)
    state = init_assignments(corpus, hp, kind, rng)
    if not kind.startswith("lf-"):
        return (lambda: baseline_sweep(kind)(state, corpus, hp, rng))
    s = (ind_rng.random(state.words.shape[0]) < hp.lam).astype(np.int8)
    state = state_from_assignments(corpus, hp.T, state.family, state.z, s)
    model = LfModel(hp, state, np.zeros((hp.T, omega.shape[1])), omega, kind)
    sweep = lf_sweep(kind)
    return lambda: sweep(model, corpus, rng)


def time_kind(corpus, omega, hp, kind, backend, sweeps):
    kernels.set_backend(backend)
    run = _setup(corpus, omega, hp, kind)
    run()  # warm-up (JIT compilation for numba)
    start = time.perf_counter()
    for _ in range(sweeps):
        run()
    return (time.perf_counter() - start) / sweeps


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--docs", type=int, default=2000)
    ap.add_argument("--doc-len", type=int, default=20)
    ap.add_argument("--topics", type=int, default=20)
    ap.add_argument("--sweeps", type=int, default=5)
    args = ap.parse_args(argv)
    # early refits from tau = 0 may stop at max_iter; irrelevant for timing
    warnings.simplefilter("ignore", ConvergenceWarning)

    n_blocks = 10
    corpus = planted_corpus(n_docs=args.docs, doc_len=args.doc_len, n_topics=n_blocks, block=50, seed=0)
    omega = block_embeddings(n_topics=n_blocks, block=50, dim=50, seed=0)
    hp = Hyperparams(T=args.topics, lam=0.6, seed=0)
    backends = ["numpy"] + (["numba"] if kernels.numba_backend is not None else [])
    print(f"# docs={args.docs} tokens={corpus.num_tokens} V={corpus.vocabulary.V} T={args.topics}")
    print("kind\tbackend\tsec_per_sweep\tspeedup")
    for kind in ("lda", "dmm", "lf-lda", "lf-dmm"):
        times = {b: time_kind(corpus, omega, hp, kind, b, args.sweeps) for b in backends}
        for b in backends:
            speed = times["numpy"] / times[b]
            print(f"{kind}\t{b}\t{times[b]:.4f}\t{speed:.1f}x")


if __name__ == "__main__":
    main()
