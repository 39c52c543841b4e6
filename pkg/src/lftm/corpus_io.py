"""Raw-text ingestion, cleaning and integer encoding of corpora."""

from __future__ import annotations

import hashlib
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

_ALPHA = re.compile(r"^[a-z]+$")
_EDGE_PUNCT = re.compile(r"^[^\w]+|[^\w]+$")


class CorpusError(ValueError):
    """Raised when ingestion leaves nothing usable."""


@dataclass
class Vocabulary:
    words: list[str]
    index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ValueError("duplicate words in vocabulary")

    @property
    def V(self) -> int:
        return len(self.words)

    def __len__(self) -> int:
        return len(self.words)

    def digest(self) -> str:
        """Stable hash identifying this vocabulary (order-sensitive)."""
        return hashlib.sha256("\n".join(self.words).encode("utf-8")).hexdigest()


@dataclass
class Document:
    tokens: list[int]
    label: int | None = None


@dataclass
class BuildReport:
    docs_in: int
    docs_kept: int
    words_in: int
    words_removed: int


@dataclass
class Corpus:
    vocabulary: Vocabulary
    documents: list[Document]
    label_names: list[str] | None = None
    report: BuildReport | None = None

    def __post_init__(self):
        if not self.documents:
            raise CorpusError("corpus has no documents")

    @property
    def num_labels(self) -> int:
        return len(self.label_names) if self.label_names else 0

    @property
    def labels(self) -> np.ndarray | None:
        if not self.num_labels:
            return None
        return np.array([doc.label for doc in self.documents], dtype=np.int64)

    @property
    def num_tokens(self) -> int:
        return sum(len(doc.tokens) for doc in self.documents)

    def __len__(self) -> int:
        return len(self.documents)

    def flat(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR-style view: (doc_ptr of length D+1, flat word ids)."""
        lengths = np.fromiter((len(d.tokens) for d in self.documents), dtype=np.int64,
                              count=len(self.documents))
        doc_ptr = np.zeros(len(self.documents) + 1, dtype=np.int64)
        np.cumsum(lengths, out=doc_ptr[1:])
        words = np.fromiter((w for d in self.documents for w in d.tokens), dtype=np.int64,
                            count=int(doc_ptr[-1]))
        return doc_ptr, words

    def to_json(self) -> dict:
        out = {
            "vocab": list(self.vocabulary.words),
            "docs": [list(map(int, d.tokens)) for d in self.documents],
            "labels": None if self.labels is None else [int(x) for x in self.labels],
        }
        if self.label_names:
            out["label_names"] = list(self.label_names)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Corpus":
        vocab = Vocabulary(list(data["vocab"]))
        labels = data.get("labels")
        docs = []
        for i, toks in enumerate(data["docs"]):
            if any(not 0 <= w < vocab.V for w in toks):
                raise CorpusError(f"document {i} has out-of-range word ids")
            docs.append(Document(list(toks), None if labels is None else int(labels[i])))
        names = data.get("label_names")
        if labels is not None and names is None:
            names = [str(i) for i in range(max(labels) + 1)]
        return cls(vocab, docs, names)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Corpus":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def default_stopwords() -> set[str]:
    text = resources.files("lftm.data").joinpath("stopwords_en.txt").read_text(encoding="utf-8")
    return {w.strip() for w in text.splitlines() if w.strip()}


def read_stopwords(path) -> set[str]:
    with open(path, encoding="utf-8") as fh:
        return {w.strip().lower() for w in fh if w.strip()}


def read_normalization(path) -> dict[str, str]:
    """Two-column (whitespace separated) lexical normalization mapping."""
    mapping = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise CorpusError(f"{path}:{lineno}: expected two columns")
            mapping.setdefault(parts[0].lower(), parts[1].lower())
    return mapping


def tokenize_and_clean(raw_line: str, stopwords: Iterable[str] = (), min_len: int = 3,
                       normalization: dict[str, str] | None = None) -> list[str]:
    """Lowercase, then drop tokens that are non-alphabetic, stopwords or too short.

    Punctuation at either end of a token is stripped first ("quake!" ->
    "quake"); a token still holding any character outside ``[a-z]`` is then
    dropped whole, so ``"u.s."`` disappears rather than becoming ``"us"``.
    """
    stop = stopwords if isinstance(stopwords, (set, frozenset)) else set(stopwords)
    out = []
    for tok in raw_line.lower().split():
        if normalization:
            tok = normalization.get(tok, tok)
        tok = _EDGE_PUNCT.sub("", tok)
        if len(tok) < min_len or not _ALPHA.match(tok) or tok in stop:
            continue
        out.append(tok)
    return out


def build_corpus(docs: Sequence[Sequence[str]], labels: Sequence[str] | None = None,
                 min_count: int = 1, embedding_words: set[str] | None = None,
                 min_len: int = 0) -> Corpus:
    """Filter words by frequency/length/embedding coverage and integer-encode.

    Documents left empty are dropped together with their labels. Word ids
    follow first appearance in the surviving corpus, label ids follow first
    appearance of each label string among surviving documents.
    """
    if labels is not None and len(labels) != len(docs):
        raise ValueError(f"{len(labels)} labels for {len(docs)} documents")
    freq = Counter(tok for doc in docs for tok in doc)

    def keep(w):
        return (freq[w] >= min_count and len(w) >= min_len
                and (embedding_words is None or w in embedding_words))

    kept_words = {w for w in freq if keep(w)}
    words: list[str] = []
    index: dict[str, int] = {}
    label_index: dict[str, int] = {}
    out_docs = []
    for k, doc in enumerate(docs):
        toks = [w for w in doc if w in kept_words]
        if not toks:
            continue
        ids = []
        for w in toks:
            if w not in index:
                index[w] = len(words)
                words.append(w)
            ids.append(index[w])
        label = None
        if labels is not None:
            label = label_index.setdefault(str(labels[k]), len(label_index))
        out_docs.append(Document(ids, label))
    if not out_docs:
        raise CorpusError("all documents became empty after filtering")
    report = BuildReport(len(docs), len(out_docs), len(freq), len(freq) - len(words))
    logger.info("kept %d/%d documents, removed %d/%d word types",
                report.docs_kept, report.docs_in, report.words_removed, report.words_in)
    names = list(label_index) if labels is not None else None
    return Corpus(Vocabulary(words), out_docs, names, report)


def read_lines(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh]


def read_labels(path) -> list[str]:
    return [line.strip() for line in read_lines(path)]


def encode_reference(lines: Iterable[str], vocab: Vocabulary, stopwords: Iterable[str] = (),
                     min_len: int = 3) -> list[np.ndarray]:
    """Clean reference-corpus lines and map them onto ``vocab``.

    Out-of-vocabulary tokens become -1 so they still occupy window positions.
    """
    stop = set(stopwords)
    out = []
    for line in lines:
        toks = tokenize_and_clean(line, stop, min_len)
        if toks:
            out.append(np.array([vocab.index.get(t, -1) for t in toks], dtype=np.int64))
    return out
