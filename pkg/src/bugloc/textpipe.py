"""Text preprocessing, tf-idf vectors over a shared vocabulary, cosine similarity."""

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np
from nltk.stem.porter import PorterStemmer

from .errors import DimensionMismatch, EmptyCorpus, IoFailure

_CHUNK = re.compile(r"[A-Za-z0-9_]+")
_CAMEL = re.compile(r"[A-Z]+(?![a-z])|[A-Z]?[a-z]+|[0-9]+")

_stemmer = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)


@lru_cache(maxsize=None)
def stem(word):
    return _stemmer.stem(word)


def load_stopwords(path=None):
    """Read a one-word-per-line stop list; the bundled English list by default."""
    if path is None:
        text = resources.files("bugloc").joinpath("data/stopwords.txt").read_text(encoding="utf-8")
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise IoFailure(f"cannot read stop-word list {path}: {exc}") from exc
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


STOPWORDS = load_stopwords()


def use_stopwords(path=None):
    """Replace the process-wide default stop list (``None`` restores the bundled one)."""
    global STOPWORDS
    STOPWORDS = load_stopwords(path)
    return STOPWORDS


def split_identifier(word):
    """Split camelCase and snake_case words; the compound itself comes first.

    >>> split_identifier("NullPointer")
    ['NullPointer', 'Null', 'Pointer']
    >>> split_identifier("plain")
    ['plain']
    """
    word = word.strip("_")
    if not word:
        return []
    parts = []
    for piece in word.split("_"):
        if piece:
            parts.extend(_CAMEL.findall(piece))
    if len(parts) <= 1:
        return [word]
    return [word] + parts


def preprocess(text, stopwords=None):
    """Tokenize, split identifiers, lowercase, drop stop words, Porter-stem."""
    if stopwords is None:
        stopwords = STOPWORDS
    out = []
    for chunk in _CHUNK.findall(text or ""):
        for token in split_identifier(chunk):
            token = token.lower()
            if len(token) < 2 or token in stopwords:
                continue
            out.append(stem(token))
    return out


@dataclass
class Vocabulary:
    terms: dict
    document_count: int
    document_frequency: dict
    _idf: np.ndarray = field(default=None, repr=False, compare=False)

    def __len__(self):
        return len(self.terms)

    @property
    def idf(self):
        if self._idf is None:
            idf = np.zeros(len(self.terms))
            for term, i in self.terms.items():
                idf[i] = math.log(self.document_count / self.document_frequency[term])
            self._idf = idf
        return self._idf

    def to_dict(self):
        ordered = sorted(self.terms, key=self.terms.__getitem__)
        return {
            "terms": ordered,
            "document_count": self.document_count,
            "document_frequency": [self.document_frequency[t] for t in ordered],
        }

    @classmethod
    def from_dict(cls, data):
        terms = {t: i for i, t in enumerate(data["terms"])}
        df = dict(zip(data["terms"], data["document_frequency"]))
        return cls(terms, int(data["document_count"]), df)


def build_vocabulary(documents):
    """Vocabulary over the union of terms; terms indexed in first-seen order."""
    documents = list(documents)
    if not documents:
        raise EmptyCorpus("cannot build a vocabulary from zero documents")
    terms = {}
    df = Counter()
    for doc in documents:
        for term in doc:
            if term not in terms:
                terms[term] = len(terms)
        df.update(set(doc))
    return Vocabulary(terms, len(documents), dict(df))


@dataclass(frozen=True)
class SparseVec:
    dimension: int
    indices: np.ndarray
    weights: np.ndarray

    @classmethod
    def zeros(cls, dimension):
        return cls(dimension, np.zeros(0, dtype=np.int64), np.zeros(0))

    @classmethod
    def from_dense(cls, dense):
        dense = np.asarray(dense, dtype=float)
        idx = np.flatnonzero(dense)
        return cls(dense.shape[0], idx.astype(np.int64), dense[idx].copy())

    def to_dense(self):
        out = np.zeros(self.dimension)
        out[self.indices] = self.weights
        return out

    def norm(self):
        return float(np.sqrt(np.dot(self.weights, self.weights)))

    def is_zero(self):
        return self.indices.size == 0


def tfidf(tokens, vocab):
    """Log-tf times ln(N/df), L2-normalized; out-of-vocabulary terms ignored."""
    counts = Counter(t for t in tokens if t in vocab.terms)
    idf = vocab.idf
    pairs = []
    for term, f in counts.items():
        i = vocab.terms[term]
        w = (1.0 + math.log(f)) * idf[i]
        if w != 0.0:
            pairs.append((i, w))
    if not pairs:
        return SparseVec.zeros(len(vocab))
    pairs.sort()
    indices = np.array([i for i, _ in pairs], dtype=np.int64)
    weights = np.array([w for _, w in pairs])
    weights /= np.sqrt(np.dot(weights, weights))
    return SparseVec(len(vocab), indices, weights)


def cosine(u, v):
    if u.dimension != v.dimension:
        raise DimensionMismatch(f"cosine of vectors of width {u.dimension} and {v.dimension}")
    if u.is_zero() or v.is_zero():
        return 0.0
    _, iu, iv = np.intersect1d(u.indices, v.indices, assume_unique=True, return_indices=True)
    dot = float(np.dot(u.weights[iu], v.weights[iv]))
    score = dot / (u.norm() * v.norm())
    return max(-1.0, min(1.0, score))
