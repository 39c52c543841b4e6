"""Latent-feature topic models (LF-LDA, LF-DMM) with collapsed Gibbs baselines."""

from .baseline_samplers import CountState, Hyperparams, train_baseline
from .corpus_io import Corpus, Document, Vocabulary, build_corpus, tokenize_and_clean
from .embeddings import align_to_vocab, load_embeddings, parse_embedding_file
from .latent_feature import OptConfig, cate_distribution, map_estimate, topic_nll, topic_nll_gradient
from .lf_models import LfModel, PosteriorSummary, load_model, save_model, summarize, train

__version__ = "0.1.0"
