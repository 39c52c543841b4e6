"""Command line interface: ``lftm preprocess|train|topics|eval``.

Exit codes: 0 success, 2 input error, 3 empty result, 4 model/data mismatch.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import kernels
from .baseline_samplers import KINDS, Hyperparams
from .corpus_io import (
    Corpus,
    CorpusError,
    build_corpus,
    default_stopwords,
    encode_reference,
    read_labels,
    read_lines,
    read_normalization,
    read_stopwords,
    tokenize_and_clean,
)
from .embeddings import EmbeddingError, VocabularyMismatch, embedding_vocabulary, load_embeddings
from .evaluation import (
    ContingencyTable,
    build_cooccurrence,
    classify,
    cluster_assign,
    load_cooccurrence,
    npmi_model,
    nmi,
    purity,
    save_cooccurrence,
)
from .latent_feature import OptConfig
from .lf_models import SnapshotMismatch, dumps_snapshot, load_model, summarize, to_snapshot, train

logger = logging.getLogger("lftm")

EXIT_INPUT, EXIT_EMPTY, EXIT_MISMATCH = 2, 3, 4


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _require_file(path, flag):
    if path is None:
        raise CliError(f"{flag} is required")
    if not Path(path).is_file():
        raise CliError(f"{flag}: no such file: {path}")
    return path


def _header(args, out) -> None:
    """Reproducibility header: every resolved flag, as '# key=value' lines."""
    for key, value in sorted(_resolved(args).items()):
        out.write(f"# {key}={value}\n")


def _resolved(args) -> dict:
    skip = {"func", "output", "verbose"}
    cfg = {k: v for k, v in vars(args).items() if k not in skip}
    cfg["backend"] = kernels.backend_name()
    return cfg


def _stopwords(args):
    if args.stopwords:
        return read_stopwords(_require_file(args.stopwords, "--stopwords"))
    return default_stopwords()


# -- preprocess

def cmd_preprocess(args) -> int:
    lines = read_lines(_require_file(args.input, "--input"))
    labels = read_labels(_require_file(args.labels, "--labels")) if args.labels else None
    if labels is not None and len(labels) != len(lines):
        raise CliError(f"{len(labels)} labels for {len(lines)} documents")
    norm = read_normalization(_require_file(args.normalize, "--normalize")) if args.normalize else None
    stop = _stopwords(args)
    docs = [tokenize_and_clean(line, stop, args.min_len, norm) for line in lines]
    if args.remove:
        drop = set(args.remove)
        docs = [[w for w in doc if w not in drop] for doc in docs]
    vocab_filter = None
    for path in args.embeddings or ():
        words = embedding_vocabulary(_require_file(path, "--embeddings"))
        vocab_filter = words if vocab_filter is None else vocab_filter & words
    try:
        corpus = build_corpus(docs, labels, args.min_count, vocab_filter, args.min_len)
    except CorpusError as exc:
        raise CliError(str(exc), EXIT_EMPTY) from None
    corpus.save(args.output)
    rep = corpus.report
    out = sys.stdout
    _header(args, out)
    out.write("docs\tV\tavg_len\ttokens\tdocs_dropped\twords_removed\n")
    out.write(f"{len(corpus)}\t{corpus.vocabulary.V}\t{corpus.num_tokens / len(corpus):.4f}\t"
              f"{corpus.num_tokens}\t{rep.docs_in - rep.docs_kept}\t{rep.words_removed}\n")
    return 0


# -- train

def _load_corpus(path) -> Corpus:
    try:
        return Corpus.load(_require_file(path, "--corpus"))
    except (ValueError, KeyError) as exc:
        raise CliError(f"cannot read corpus {path}: {exc}") from None


def _hyperparams(args, seed=None) -> Hyperparams:
    latent = args.kind.startswith("lf-")
    if latent and args.lam is None:
        raise CliError(f"--lambda is required for {args.kind}")
    try:
        return Hyperparams(T=args.topics, alpha=args.alpha, beta=args.beta,
                           lam=args.lam if args.lam is not None else 0.0, mu=args.mu,
                           seed=args.seed if seed is None else seed,
                           baseline_iters=args.baseline_iters, lf_iters=args.lf_iters)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _omega(args, corpus):
    if not args.kind.startswith("lf-"):
        return None
    path = _require_file(args.embeddings, "--embeddings")
    try:
        return load_embeddings(path, corpus.vocabulary)
    except VocabularyMismatch as exc:
        raise CliError(str(exc), EXIT_MISMATCH) from None
    except EmbeddingError as exc:
        raise CliError(str(exc)) from None


def _progress(every):
    def cb(phase, it, model):
        if every and (it + 1) % every == 0:
            extra = f"\tmap_objective={model.last_objective:.6f}" if phase == "lf" else ""
            logger.info("%s\titer=%d%s", phase, it + 1, extra)
    return cb


def _train_one(args, corpus, omega, seed, threads):
    hp = _hyperparams(args, seed)
    opt = OptConfig(tol=args.opt_tol, max_iter=args.opt_max_iter)
    return train(corpus, hp, args.kind, omega, opt, threads, _progress(args.log_every))


def cmd_train(args) -> int:
    _hyperparams(args)
    corpus = _load_corpus(args.corpus)
    omega = _omega(args, corpus)
    for key, value in sorted(_resolved(args).items()):
        logger.info("config %s=%s", key, value)
    model = _train_one(args, corpus, omega, args.seed, args.threads)
    Path(args.output).write_text(
        dumps_snapshot(to_snapshot(model, corpus.vocabulary, _resolved(args))), encoding="utf-8")
    return 0


# -- topics

def _load_snapshot(args, corpus):
    path = _require_file(args.model, "--model")
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    args.kind = data["kind"]
    omega = _omega(args, corpus)
    try:
        return load_model(path, corpus, omega)
    except SnapshotMismatch as exc:
        raise CliError(str(exc), EXIT_MISMATCH) from None


def cmd_topics(args) -> int:
    corpus = _load_corpus(args.corpus)
    model = _load_snapshot(args, corpus)
    summary = summarize(model, args.top)
    out = sys.stdout
    _header(args, out)
    out.write("topic\trank\tword\tprobability\n")
    words = corpus.vocabulary.words
    for t, ids in enumerate(summary.top_words):
        for rank, w in enumerate(ids, 1):
            out.write(f"{t}\t{rank}\t{words[w]}\t{summary.topic_word[t, w]:.8g}\n")
    return 0


# -- eval

def _ref_hash(path, corpus, args) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    h.update(corpus.vocabulary.digest().encode())
    h.update(f"{args.min_len}|{args.stopwords}".encode())
    return h.hexdigest()


def cmd_eval(args) -> int:
    mode = args.mode
    corpus = _load_corpus(args.corpus)
    labels = corpus.labels
    if mode in ("clustering", "classify") and labels is None:
        raise CliError(f"eval {mode} needs a corpus with labels")
    if mode == "coherence" and not args.ref_corpus:
        raise CliError("eval coherence needs --ref-corpus")
    if mode == "coherence":
        _require_file(args.ref_corpus, "--ref-corpus")

    if args.model:
        models = [_load_snapshot(args, corpus)]
        seeds = [models[0].hp.seed]
    else:
        _hyperparams(args)
        omega = _omega(args, corpus)
        seeds = [args.seed + r for r in range(args.repeat)]
        parallel = args.threads > 1 and len(seeds) > 1
        run = lambda sd: _train_one(args, corpus, omega, sd, 1 if parallel else args.threads)  # noqa: E731
        if parallel:
            with ThreadPoolExecutor(max_workers=args.threads) as pool:
                models = list(pool.map(run, seeds))
        else:
            models = [run(sd) for sd in seeds]

    summaries = [summarize(m, max(args.top, 15)) for m in models]
    results: dict[str, list[float]] = {}
    if mode == "coherence":
        stats = _reference_stats(args, corpus, summaries)
        results["npmi"] = [npmi_model(stats, s.top_words, args.top) for s in summaries]
    elif mode == "clustering":
        for s in summaries:
            table = ContingencyTable.from_assignments(cluster_assign(s), labels)
            results.setdefault("purity", []).append(purity(table))
            results.setdefault("nmi", []).append(nmi(table))
    else:
        results["macro_f1"] = [classify(s, labels, args.folds, sd) for s, sd in zip(summaries, seeds)]

    out = sys.stdout
    _header(args, out)
    out.write(f"# seeds={','.join(map(str, seeds))}\n")
    out.write("metric\tmean\tsd\truns\tvalues\n")
    for metric, values in results.items():
        v = np.asarray(values)
        out.write(f"{metric}\t{v.mean():.6f}\t{v.std():.6f}\t{v.size}\t"
                  f"{','.join(f'{x:.6f}' for x in v)}\n")
    return 0


def _reference_stats(args, corpus, summaries):
    words = sorted({w for s in summaries for ids in s.top_words for w in ids[:args.top]})
    key = _ref_hash(args.ref_corpus, corpus, args)
    if args.cooc_cache:
        cached = load_cooccurrence(args.cooc_cache, key, args.window)
        if cached is not None:
            return cached
    ref = encode_reference(read_lines(args.ref_corpus), corpus.vocabulary, _stopwords(args),
                           args.min_len)
    # a cache must serve any later model, so it covers the whole vocabulary
    restrict = None if args.cooc_cache else words
    stats = build_cooccurrence(ref, args.window, restrict)
    if args.cooc_cache:
        save_cooccurrence(stats, args.cooc_cache, key)
    return stats


# -- parser

def _add_train_flags(p):
    p.add_argument("--corpus", required=True, help="encoded corpus JSON (from preprocess)")
    p.add_argument("--kind", choices=KINDS, default="lf-dmm")
    p.add_argument("--topics", "-T", type=int, default=20)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="mixture weight of the latent-feature component (required for lf-*)")
    p.add_argument("--mu", type=float, default=0.01, help="L2 regularizer for topic vectors")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--baseline-iters", type=int, default=None,
                   help="baseline sweeps (default 2000, or 1500 before an LF phase)")
    p.add_argument("--lf-iters", type=int, default=500)
    p.add_argument("--embeddings", help="plain-text word vectors")
    p.add_argument("--opt-tol", type=float, default=1e-5)
    p.add_argument("--opt-max-iter", type=int, default=100)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--log-every", type=int, default=1, help="log progress every N sweeps (0: never)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lftm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="clean and encode a raw corpus")
    p.add_argument("--input", required=True, help="one document per line")
    p.add_argument("--labels", help="one label per line, aligned with --input")
    p.add_argument("--output", required=True)
    p.add_argument("--stopwords", help="stopword file (default: bundled English list)")
    p.add_argument("--normalize", help="two-column lexical normalization dictionary")
    p.add_argument("--min-len", type=int, default=3)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--embeddings", action="append",
                   help="keep only words present in this vector file (repeatable: intersection)")
    p.add_argument("--remove", nargs="*", default=[], help="extra words to drop")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train a topic model and write a snapshot")
    _add_train_flags(p)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("topics", help="print the top words of every topic")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--top", type=int, default=15)
    p.set_defaults(func=cmd_topics)

    p = sub.add_parser("eval", help="train --repeat models and report metric mean/sd")
    p.add_argument("mode", choices=("coherence", "clustering", "classify"))
    _add_train_flags(p)
    p.add_argument("--repeat", type=int, default=10)
    p.add_argument("--model", help="evaluate an existing snapshot instead of training")
    p.add_argument("--ref-corpus", help="reference corpus for NPMI, one document per line")
    p.add_argument("--cooc-cache", help="co-occurrence cache file (full vocabulary)")
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--top", type=int, default=15)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--stopwords", help="stopwords applied to the reference corpus")
    p.add_argument("--min-len", type=int, default=3)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(name)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"lftm: error: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"lftm: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
