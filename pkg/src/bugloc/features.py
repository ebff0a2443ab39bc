"""Per-pair IR and history features.

All history-dependent scores look only at bugs reported strictly before the
bug being scored.  The IR vocabulary is built from the code corpus alone, so
adding or removing bug reports never changes any vector.
"""

import bisect
import csv
import math
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np
from scipy import sparse

from .errors import IoFailure
from .textpipe import build_vocabulary, cosine, preprocess, tfidf

FEATURE_NAMES = ("f1", "f2", "f3", "f4", "f5", "f6")
CSV_HEADER = ("bug_id", "file") + FEATURE_NAMES + ("label",)


def as_utc(ts):
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


@dataclass(frozen=True)
class BugReport:
    id: str
    summary: str
    description: str
    reported_at: datetime
    fixed_files: frozenset = frozenset()
    status: str = ""

    def __post_init__(self):
        object.__setattr__(self, "reported_at", as_utc(self.reported_at))
        object.__setattr__(self, "fixed_files", frozenset(self.fixed_files))

    @property
    def text(self):
        return f"{self.summary}\n{self.description}"

    @property
    def trainable(self):
        return bool(self.fixed_files)

    def tokens(self):
        return preprocess(self.text)


def chronological(bugs):
    return sorted(bugs, key=lambda b: (b.reported_at, b.id))


class FixHistory:
    """Chronological record of resolved bugs and the files their fixes touched."""

    def __init__(self, bugs=()):
        self.entries = chronological(b for b in bugs if b.fixed_files)
        self._by_file = {}
        for b in self.entries:
            for path in b.fixed_files:
                self._by_file.setdefault(path, []).append(b)
        self._keys = {p: [b.reported_at for b in lst] for p, lst in self._by_file.items()}

    def __len__(self):
        return len(self.entries)

    def prior(self, when):
        """Entries strictly earlier than ``when``."""
        keys = [b.reported_at for b in self.entries]
        return self.entries[: bisect.bisect_left(keys, as_utc(when))]

    def prior_fixes(self, path, when):
        """Bugs strictly earlier than ``when`` whose fix touched ``path``."""
        lst = self._by_file.get(path)
        if not lst:
            return []
        return lst[: bisect.bisect_left(self._keys[path], as_utc(when))]


@dataclass
class UnitIndex:
    block_vectors: list
    block_lengths: list
    characteristics_vector: object


class CorpusIndex:
    """Vocabulary, block vectors and block-length bounds for one corpus."""

    def __init__(self, corpus):
        self.corpus = corpus
        block_tokens = {}
        char_tokens = {}
        documents = []
        for unit in corpus:
            blocks = [preprocess(" ".join(b.tokens)) for b in unit.blocks]
            chars = preprocess(" ".join(unit.characteristics.all_tokens()))
            block_tokens[unit.path] = blocks
            char_tokens[unit.path] = chars
            documents.extend(blocks)
            documents.append(chars)
        self.vocab = build_vocabulary(documents)
        lengths = [len(t) for blocks in block_tokens.values() for t in blocks]
        self.min_len = min(lengths) if lengths else 0
        self.max_len = max(lengths) if lengths else 0
        self.units = {
            path: UnitIndex(
                [tfidf(t, self.vocab) for t in blocks],
                [len(t) for t in blocks],
                tfidf(char_tokens[path], self.vocab),
            )
            for path, blocks in block_tokens.items()
        }
        self.paths = sorted(self.units)
        self._build_matrices()
        self._bug_vectors = {}

    def _build_matrices(self):
        rows, cols, vals, factors, owners = [], [], [], [], []
        crow, ccol, cval = [], [], []
        for u, path in enumerate(self.paths):
            entry = self.units[path]
            for vec, length in zip(entry.block_vectors, entry.block_lengths):
                r = len(factors)
                rows.extend([r] * vec.indices.size)
                cols.extend(vec.indices.tolist())
                vals.extend(vec.weights.tolist())
                factors.append(length_factor(length, self.min_len, self.max_len))
                owners.append(u)
            cv = entry.characteristics_vector
            crow.extend([u] * cv.indices.size)
            ccol.extend(cv.indices.tolist())
            cval.extend(cv.weights.tolist())
        V = len(self.vocab)
        self._blocks = sparse.csr_matrix((vals, (rows, cols)), shape=(len(factors), V))
        self._factors = np.array(factors)
        self._owners = np.array(owners, dtype=np.int64)
        self._chars = sparse.csr_matrix((cval, (crow, ccol)), shape=(len(self.paths), V))

    def textual_all(self, bug):
        """f1 of ``bug`` against every unit, aligned with ``self.paths``.

        Vectors are unit-normalized, so the sparse dot product is the cosine.
        """
        out = np.zeros(len(self.paths))
        q = self.bug_vector(bug)
        if q.is_zero() or self._factors.size == 0:
            return out
        dots = self._blocks[:, q.indices] @ q.weights
        scores = self._factors * np.clip(dots, 0.0, 1.0)
        np.maximum.at(out, self._owners, scores)
        return out

    def characteristics_all(self, bug):
        """f3 of ``bug`` against every unit, aligned with ``self.paths``."""
        q = self.bug_vector(bug)
        if q.is_zero():
            return np.zeros(len(self.paths))
        return np.clip(self._chars[:, q.indices] @ q.weights, 0.0, 1.0)

    def bug_vector(self, bug):
        key = (bug.id, bug.text)
        vec = self._bug_vectors.get(key)
        if vec is None:
            vec = tfidf(bug.tokens(), self.vocab)
            self._bug_vectors[key] = vec
        return vec


def length_factor(length, min_len, max_len):
    """Logistic length boost: longer blocks score higher."""
    if max_len == min_len:
        n = 0.5
    else:
        n = (length - min_len) / (max_len - min_len)
    return 1.0 / (1.0 + math.exp(-n))


def _rvsm(query_vec, block_vec, length, min_len, max_len):
    sim = cosine(query_vec, block_vec)
    if sim <= 0.0:
        return 0.0
    return length_factor(length, min_len, max_len) * sim


def rvsm_similarity(query, block, corpus_stats):
    """rVSM score of a preprocessed query against one code block."""
    tokens = preprocess(" ".join(block.tokens))
    return _rvsm(
        tfidf(query, corpus_stats.vocab),
        tfidf(tokens, corpus_stats.vocab),
        len(tokens),
        corpus_stats.min_len,
        corpus_stats.max_len,
    )


def textual_similarity(bug, unit, corpus_stats):
    """Best rVSM score over the unit's blocks (0.0 for a blockless unit)."""
    query = corpus_stats.bug_vector(bug)
    entry = corpus_stats.units.get(unit.path)
    if entry is None:
        tokens = [preprocess(" ".join(b.tokens)) for b in unit.blocks]
        vectors = [tfidf(t, corpus_stats.vocab) for t in tokens]
        lengths = [len(t) for t in tokens]
    else:
        vectors, lengths = entry.block_vectors, entry.block_lengths
    best = 0.0
    for vec, length in zip(vectors, lengths):
        best = max(best, _rvsm(query, vec, length, corpus_stats.min_len, corpus_stats.max_len))
    return best


def collaborative_filtering(bug, path, history, vocab, vector_of=None):
    """Sum over earlier bugs fixed in ``path`` of similarity / number of files they fixed."""
    if vector_of is None:
        def vector_of(b):
            return tfidf(b.tokens(), vocab)
    prior = history.prior_fixes(path, bug.reported_at)
    if not prior:
        return 0.0
    query = vector_of(bug)
    total = 0.0
    for other in prior:
        total += max(0.0, cosine(query, vector_of(other))) / len(other.fixed_files)
    return total


def feature_name_similarity(bug, unit, vocab, unit_vector=None, bug_vector=None):
    if unit_vector is None:
        unit_vector = tfidf(preprocess(" ".join(unit.characteristics.all_tokens())), vocab)
    if bug_vector is None:
        bug_vector = tfidf(bug.tokens(), vocab)
    return max(0.0, cosine(bug_vector, unit_vector))


def month_difference(later, earlier):
    later, earlier = as_utc(later), as_utc(earlier)
    return (later.year - earlier.year) * 12 + (later.month - earlier.month)


def bug_fixing_recency(bug, path, history):
    prior = history.prior_fixes(path, bug.reported_at)
    if not prior:
        return 0.0
    delta = month_difference(bug.reported_at, prior[-1].reported_at)
    return 1.0 / (delta + 1)


def bug_fixing_frequency(bug, path, history):
    return len(history.prior_fixes(path, bug.reported_at))


@dataclass
class FeatureRow:
    bug_id: str
    file: str
    f1: float
    f2: float
    f3: float
    f4: float
    f5: int
    f6: float = 0.0
    label: int = 0

    def vector(self):
        return [self.f1, self.f2, self.f3, self.f4, float(self.f5), self.f6]


def feature_matrix(rows):
    if not rows:
        return np.zeros((0, len(FEATURE_NAMES)))
    return np.array([r.vector() for r in rows], dtype=float)


@dataclass
class FeatureExtractor:
    """Computes f1..f5 for (bug, file) pairs over one corpus and history."""

    index: CorpusIndex
    history: FixHistory

    def textual(self, bug, path):
        return textual_similarity(bug, self.index.corpus.units[path], self.index)

    def row(self, bug, path, textual=None, characteristics=None):
        unit = self.index.corpus.units[path]
        if textual is None:
            textual = textual_similarity(bug, unit, self.index)
        if characteristics is None:
            characteristics = feature_name_similarity(
                bug, unit, self.index.vocab,
                unit_vector=self.index.units[path].characteristics_vector,
                bug_vector=self.index.bug_vector(bug))
        return FeatureRow(
            bug_id=bug.id,
            file=path,
            f1=textual,
            f2=collaborative_filtering(bug, path, self.history, self.index.vocab,
                                       vector_of=self.index.bug_vector),
            f3=characteristics,
            f4=bug_fixing_recency(bug, path, self.history),
            f5=bug_fixing_frequency(bug, path, self.history),
            label=int(path in bug.fixed_files),
        )


def write_rows_csv(path, rows):
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for r in rows:
                writer.writerow([r.bug_id, r.file, repr(r.f1), repr(r.f2), repr(r.f3),
                                 repr(r.f4), r.f5, repr(r.f6), r.label])
    except OSError as exc:
        raise IoFailure(f"cannot write feature rows to {path}: {exc}") from exc


def read_rows_csv(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            return [
                FeatureRow(
                    bug_id=rec["bug_id"],
                    file=rec["file"],
                    f1=float(rec["f1"]),
                    f2=float(rec["f2"]),
                    f3=float(rec["f3"]),
                    f4=float(rec["f4"]),
                    f5=int(rec["f5"]),
                    f6=float(rec["f6"]),
                    label=int(rec["label"]),
                )
                for rec in reader
            ]
    except OSError as exc:
        raise IoFailure(f"cannot read feature rows from {path}: {exc}") from exc
