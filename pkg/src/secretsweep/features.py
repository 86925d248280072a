"""Feature extraction: token counts, code-shape features, and TF-IDF.

Fitted objects (Vocabulary, CodeFeatureSpec, TfIdfModel) are immutable;
transforms are pure functions over them.
"""

import math
import re
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .detectors import Finding

_TOKEN_RE = re.compile(r"[a-z0-9_]{2,}")

CODE_LAYOUT = "counts|extension|entropy"

DEFAULT_EXTENSIONS = (
    "py", "java", "ini", "yaml", "yml", "json", "xml", "properties",
    "sh", "cfg", "conf", "env", "txt", "md",
)

ENTROPY_SCALE = 8.0


class FitError(ValueError):
    pass


def tokenize(s: str) -> List[str]:
    """Maximal lowercase [a-z0-9_] runs of length >= 2, in order."""
    return _TOKEN_RE.findall(s.lower())


@dataclass(frozen=True)
class Vocabulary:
    token_to_index: Dict[str, int]
    fitted_on: int

    def __post_init__(self):
        indices = sorted(self.token_to_index.values())
        if indices != list(range(len(indices))):
            raise ValueError("vocabulary indices must be 0..V-1 with no gaps")

    def __len__(self):
        return len(self.token_to_index)

    @property
    def tokens(self) -> List[str]:
        """Tokens ordered by index."""
        by_index = sorted(self.token_to_index.items(), key=lambda kv: kv[1])
        return [token for token, _ in by_index]


@dataclass(frozen=True)
class FeatureVector:
    entries: Tuple[Tuple[int, float], ...]
    dimension: int

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((int(i), float(v)) for i, v in self.entries))
        prev = -1
        for index, value in self.entries:
            if index <= prev:
                raise ValueError("entry indices must be strictly increasing")
            if index >= self.dimension:
                raise ValueError(f"index {index} out of range for dimension {self.dimension}")
            if not math.isfinite(value):
                raise ValueError(f"non-finite value at index {index}")
            prev = index

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dimension, dtype=np.float64)
        for index, value in self.entries:
            dense[index] = value
        return dense

    def l2_norm(self) -> float:
        return math.sqrt(sum(v * v for _, v in self.entries))


def fit_vocabulary(corpus: Sequence[Sequence[str]]) -> Vocabulary:
    """Sorted unique tokens across the corpus, indexed in sorted order."""
    if not corpus:
        raise FitError("cannot fit a vocabulary on an empty corpus")
    unique = sorted({token for tokens in corpus for token in tokens})
    return Vocabulary(
        token_to_index={token: i for i, token in enumerate(unique)},
        fitted_on=len(corpus),
    )


def vectorize_counts(tokens: Sequence[str], vocab: Vocabulary) -> FeatureVector:
    counts: Dict[int, float] = {}
    lookup = vocab.token_to_index
    for token in tokens:
        index = lookup.get(token)
        if index is not None:
            counts[index] = counts.get(index, 0.0) + 1.0
    return FeatureVector(entries=tuple(sorted(counts.items())), dimension=len(vocab))


@dataclass(frozen=True)
class CodeFeatureSpec:
    """Layout: [token counts | extension one-hot + other | entropy_bits/8]."""

    vocab: Vocabulary
    extension_vocab: Tuple[str, ...] = DEFAULT_EXTENSIONS
    layout: str = CODE_LAYOUT

    def __post_init__(self):
        if self.layout != CODE_LAYOUT:
            raise ValueError(f"unsupported layout {self.layout!r}")
        if len(set(self.extension_vocab)) != len(self.extension_vocab):
            raise ValueError("extension vocabulary contains duplicates")

    @property
    def dimension(self) -> int:
        return len(self.vocab) + len(self.extension_vocab) + 1 + 1

    def extension_slot(self, extension: str) -> int:
        base = len(self.vocab)
        ext = extension.lower().lstrip(".")
        try:
            return base + self.extension_vocab.index(ext)
        except ValueError:
            return base + len(self.extension_vocab)  # the "other" bucket

    @property
    def entropy_slot(self) -> int:
        return self.dimension - 1

    def to_dict(self) -> dict:
        return {
            "kind": "code",
            "layout": self.layout,
            "tokens": self.vocab.tokens,
            "fitted_on": self.vocab.fitted_on,
            "extensions": list(self.extension_vocab),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CodeFeatureSpec":
        vocab = Vocabulary(
            token_to_index={t: i for i, t in enumerate(d["tokens"])},
            fitted_on=d["fitted_on"],
        )
        return cls(vocab=vocab, extension_vocab=tuple(d["extensions"]), layout=d["layout"])


def fit_code_spec(candidates: Sequence[str],
                  extension_vocab: Tuple[str, ...] = DEFAULT_EXTENSIONS) -> CodeFeatureSpec:
    """Fit the candidate-token vocabulary for code features."""
    vocab = fit_vocabulary([tokenize(c) for c in candidates])
    return CodeFeatureSpec(vocab=vocab, extension_vocab=tuple(extension_vocab))


def assemble_code_features(finding: Finding, extension: str,
                           spec: CodeFeatureSpec) -> FeatureVector:
    if finding.candidate is None:
        raise ValueError("cannot featurize a redacted finding (no candidate)")
    counts = vectorize_counts(tokenize(finding.candidate), spec.vocab)
    entries = list(counts.entries)
    entries.append((spec.extension_slot(extension), 1.0))
    entropy_value = finding.entropy_bits / ENTROPY_SCALE
    if entropy_value != 0.0:
        entries.append((spec.entropy_slot, entropy_value))
    return FeatureVector(entries=tuple(entries), dimension=spec.dimension)


@dataclass(frozen=True)
class TfIdfModel:
    vocab: Vocabulary
    doc_freq: Tuple[int, ...]
    n_docs: int

    def __post_init__(self):
        if self.n_docs < 1:
            raise ValueError("n_docs must be >= 1")
        if len(self.doc_freq) != len(self.vocab):
            raise ValueError("doc_freq must align with the vocabulary")
        if any(df < 1 for df in self.doc_freq):
            raise ValueError("document frequencies must be >= 1")

    def idf(self, index: int) -> float:
        return math.log((1 + self.n_docs) / (1 + self.doc_freq[index])) + 1.0

    def to_dict(self) -> dict:
        return {
            "kind": "tfidf",
            "tokens": self.vocab.tokens,
            "doc_freq": list(self.doc_freq),
            "n_docs": self.n_docs,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TfIdfModel":
        vocab = Vocabulary(
            token_to_index={t: i for i, t in enumerate(d["tokens"])},
            fitted_on=d["n_docs"],
        )
        return cls(vocab=vocab, doc_freq=tuple(d["doc_freq"]), n_docs=d["n_docs"])


def fit_tfidf(rows: Sequence[Sequence[str]]) -> TfIdfModel:
    if not rows:
        raise FitError("cannot fit TF-IDF on an empty corpus")
    vocab = fit_vocabulary(rows)
    doc_freq = [0] * len(vocab)
    for tokens in rows:
        for token in set(tokens):
            doc_freq[vocab.token_to_index[token]] += 1
    return TfIdfModel(vocab=vocab, doc_freq=tuple(doc_freq), n_docs=len(rows))


def transform_tfidf(tokens: Sequence[str], model: TfIdfModel) -> FeatureVector:
    counts = vectorize_counts(tokens, model.vocab)
    weighted = [(i, v * model.idf(i)) for i, v in counts.entries]
    norm = math.sqrt(sum(w * w for _, w in weighted))
    if norm > 0.0:
        weighted = [(i, w / norm) for i, w in weighted]
    return FeatureVector(entries=tuple(weighted), dimension=len(model.vocab))


def stack_features(vectors: Sequence[FeatureVector]):
    """Stack FeatureVectors into CSR arrays (indptr, indices, data, shape)."""
    if not vectors:
        raise ValueError("nothing to stack")
    dimension = vectors[0].dimension
    if any(v.dimension != dimension for v in vectors):
        raise ValueError("inconsistent dimensions")
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    nnz = sum(len(v.entries) for v in vectors)
    indices = np.zeros(nnz, dtype=np.int64)
    data = np.zeros(nnz, dtype=np.float64)
    pos = 0
    for row, vec in enumerate(vectors):
        for index, value in vec.entries:
            indices[pos] = index
            data[pos] = value
            pos += 1
        indptr[row + 1] = pos
    return indptr, indices, data, (len(vectors), dimension)
