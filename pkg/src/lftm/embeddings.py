"""Plain-text word vector files and their alignment to a vocabulary."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .corpus_io import Vocabulary


class EmbeddingError(ValueError):
    pass


class VocabularyMismatch(EmbeddingError):
    """Some vocabulary words have no vector."""

    def __init__(self, missing: list[str]):
        self.missing = missing
        shown = ", ".join(missing[:20]) + (" ..." if len(missing) > 20 else "")
        super().__init__(f"{len(missing)} vocabulary words missing from embeddings: {shown}")


def parse_embedding_file(path, expected_dim: int | None = None,
                         restrict: set[str] | None = None) -> dict[str, np.ndarray]:
    """Read ``word v1 ... vd`` lines, skipping an optional ``count dim`` header.

    ``restrict`` limits which words are kept (every line is still validated).
    The first occurrence of a duplicated word wins.
    """
    vectors: dict[str, np.ndarray] = {}
    dim = expected_dim
    with open(path, encoding="utf-8", errors="strict") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").rstrip().split(" ")
            if not parts or parts == [""]:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                if dim is not None and int(parts[1]) != dim:
                    raise EmbeddingError(f"{path}:1: header dim {parts[1]} != expected {dim}")
                dim = int(parts[1])
                continue
            word, comps = parts[0], parts[1:]
            if dim is None:
                dim = len(comps)
            if len(comps) != dim or dim == 0:
                raise EmbeddingError(f"{path}:{lineno}: expected {dim} components, got {len(comps)}")
            if word in vectors or (restrict is not None and word not in restrict):
                continue
            try:
                vec = np.array([float(c) for c in comps])
            except ValueError as exc:
                raise EmbeddingError(f"{path}:{lineno}: non-numeric component ({exc})") from None
            if not np.all(np.isfinite(vec)):
                raise EmbeddingError(f"{path}:{lineno}: non-finite component")
            vectors[word] = vec
    return vectors


def embedding_vocabulary(path) -> set[str]:
    """Words present in an embedding file, without parsing the vectors."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split(" ", 2)
            if lineno == 1 and len(parts) == 2 and all(p.strip().isdigit() for p in parts):
                continue
            if parts and parts[0].strip():
                words.add(parts[0])
    return words


def align_to_vocab(vectors: dict[str, np.ndarray], vocab: Vocabulary) -> np.ndarray:
    """Stack vectors into a read-only V x d matrix ordered by vocabulary id."""
    missing = [w for w in vocab.words if w not in vectors]
    if missing:
        raise VocabularyMismatch(missing)
    omega = np.array([vectors[w] for w in vocab.words], dtype=np.float64)
    if omega.ndim != 2:
        raise EmbeddingError("inconsistent vector dimensionality")
    omega.setflags(write=False)
    return omega


def load_embeddings(path, vocab: Vocabulary) -> np.ndarray:
    return align_to_vocab(parse_embedding_file(Path(path), restrict=set(vocab.words)), vocab)
