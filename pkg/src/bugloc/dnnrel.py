"""Learned bug/file relevancy: a shared autoencoder feeding a small classifier.

Bug texts and per-file characteristic bags share one tf-idf vocabulary.  Both
sides are compressed by the same autoencoder and the two encodings are
concatenated into the input of a one-hidden-layer sigmoid network.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import CorruptModel, NoPositivePairs, VocabularyMismatch
from .mlcore import Activation, FeedForwardNet, Loss, net_train
from .textpipe import Vocabulary, build_vocabulary, preprocess, tfidf


def encoding_width(vocab_size):
    """ceil(0.75 * V) in exact integer arithmetic."""
    return (3 * vocab_size + 3) // 4


@dataclass
class RelevancyConfig:
    hidden: int = 700
    activation: str = "ReLU"
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 0.01
    ae_epochs: int = 50
    ae_batch_size: int = 32
    ae_learning_rate: float = 0.01
    seed: int = 0

    @classmethod
    def from_dict(cls, data):
        known = {k: v for k, v in (data or {}).items() if k in cls.__dataclass_fields__}
        return cls(**known)

    def to_dict(self):
        return asdict(self)


def characteristics_tokens(unit):
    return preprocess(" ".join(unit.characteristics.all_tokens()))


@dataclass
class RelevancyModel:
    vocab: Vocabulary
    autoencoder: FeedForwardNet
    net: FeedForwardNet
    config: RelevancyConfig = field(default_factory=RelevancyConfig)
    ae_trace: list = field(default_factory=list)
    trace: list = field(default_factory=list)

    @property
    def width(self):
        return len(self.vocab)

    def dense(self, tokens):
        return tfidf(tokens, self.vocab).to_dense()

    def encode(self, vectors):
        vectors = np.asarray(vectors, dtype=float)
        if vectors.shape[-1] != self.width:
            raise VocabularyMismatch(
                f"vector width {vectors.shape[-1]} does not match the model vocabulary ({self.width})")
        return self.autoencoder.forward_to(vectors, 1)

    def score_vectors(self, bug_vectors, code_vectors):
        """Scores for row-aligned dense bug and code vectors."""
        bug_vectors = np.atleast_2d(bug_vectors)
        code_vectors = np.atleast_2d(code_vectors)
        x = np.hstack([self.encode(bug_vectors), self.encode(code_vectors)])
        return self.net.forward(x)[:, 0]

    def score_units(self, bug, units):
        """Relevancy of one bug against many units, in the given order."""
        units = list(units)
        if not units:
            return np.zeros(0)
        code = np.array([self.dense(characteristics_tokens(u)) for u in units])
        enc_code = self.encode(code)
        enc_bug = self.encode(self.dense(bug.tokens()))
        x = np.hstack([np.tile(enc_bug, (len(units), 1)), enc_code])
        return self.net.forward(x)[:, 0]

    def to_dict(self):
        return {
            "vocabulary": self.vocab.to_dict(),
            "autoencoder": self.autoencoder.to_dict(),
            "relevancy_net": self.net.to_dict(),
            "config": self.config.to_dict(),
            "autoencoder_trace": list(self.ae_trace),
            "relevancy_trace": list(self.trace),
        }

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(
                Vocabulary.from_dict(data["vocabulary"]),
                FeedForwardNet.from_dict(data["autoencoder"]),
                FeedForwardNet.from_dict(data["relevancy_net"]),
                RelevancyConfig.from_dict(data.get("config")),
                list(data.get("autoencoder_trace", [])),
                list(data.get("relevancy_trace", [])),
            )
        except (KeyError, TypeError) as exc:
            raise CorruptModel(f"bad relevancy model payload: {exc}") from exc


def relevancy_score(model, bug, unit):
    return float(model.score_units(bug, [unit])[0])


def balance_pairs(pairs, textual_scores):
    """Keep each bug's positives plus its ``k`` best-scoring negatives, ``k`` = #positives.

    ``pairs`` holds ``(bug_id, file, label)`` triples; ``textual_scores`` maps
    ``(bug_id, file)`` to the f1 score.  Negatives tied on score are taken in
    ascending file order.  Output keeps the input's bug order.
    """
    grouped = {}
    for bug_id, path, label in pairs:
        grouped.setdefault(bug_id, ([], []))[0 if label else 1].append(path)
    out = []
    for bug_id, (pos, neg) in grouped.items():
        if not pos:
            continue
        neg = sorted(neg, key=lambda p: (-textual_scores.get((bug_id, p), 0.0), p))
        out.extend((bug_id, p, 1) for p in pos)
        out.extend((bug_id, p, 0) for p in neg[: len(pos)])
    return out


def train_relevancy_model(bugs, corpus, config=None, textual_scores=None, index=None):
    """Fit the autoencoder and relevancy net on ``bugs`` against ``corpus``.

    Only bugs with at least one fixed file inside the corpus contribute.
    ``textual_scores`` (``(bug_id, file) -> f1``) orders negatives for
    balancing; missing scores are computed from ``index`` (a
    :class:`~bugloc.features.CorpusIndex`), built on demand.
    """
    config = config if isinstance(config, RelevancyConfig) else RelevancyConfig.from_dict(config)
    paths = sorted(corpus.units)
    bugs = [b for b in bugs if b.fixed_files & corpus.units.keys()]
    if not bugs:
        raise NoPositivePairs("no bug has a fixed file inside the corpus")

    bug_tokens = {b.id: b.tokens() for b in bugs}
    code_tokens = {p: characteristics_tokens(corpus.units[p]) for p in paths}
    vocab = build_vocabulary(list(bug_tokens.values()) + list(code_tokens.values()))

    textual_scores = dict(textual_scores or {})
    if any((b.id, p) not in textual_scores for b in bugs for p in paths):
        from .features import CorpusIndex  # local: features is the heavier module
        index = index or CorpusIndex(corpus)
        for b in bugs:
            for p, s in zip(index.paths, index.textual_all(b)):
                textual_scores.setdefault((b.id, p), float(s))

    raw = [(b.id, p, int(p in b.fixed_files)) for b in bugs for p in paths]
    kept = balance_pairs(raw, textual_scores)

    bug_vec = {bid: tfidf(t, vocab).to_dense() for bid, t in bug_tokens.items()}
    used_files = sorted({p for _, p, _ in kept})
    code_vec = {p: tfidf(code_tokens[p], vocab).to_dense() for p in used_files}

    V = len(vocab)
    E = encoding_width(V)
    seed = config.seed
    ae = FeedForwardNet.init([V, E, V], [Activation.SIGMOID, Activation.SIGMOID], seed=seed)
    population = np.array([bug_vec[b.id] for b in bugs] + [code_vec[p] for p in used_files])
    ae, ae_trace = net_train(ae, population, population, Loss.MSE, config.ae_epochs,
                             config.ae_batch_size, config.ae_learning_rate, seed)

    partial = RelevancyModel(vocab, ae, None, config)
    enc_bug = dict(zip(bug_vec, partial.encode(np.array(list(bug_vec.values())))))
    enc_code = dict(zip(used_files, partial.encode(np.array([code_vec[p] for p in used_files]))))
    x = np.array([np.concatenate([enc_bug[b], enc_code[p]]) for b, p, _ in kept])
    y = np.array([lab for _, _, lab in kept], dtype=float)

    # sigmoid encodings cluster near 0.5; train on standardized inputs, then fold
    # the affine map into the first layer so the stored net reads raw encodings
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale = np.where(scale > 1e-12, scale, 1.0)
    hidden = Activation.parse(config.activation)
    net = FeedForwardNet.init([2 * E, config.hidden, 1], [hidden, Activation.SIGMOID], seed=seed + 1)
    net, trace = net_train(net, (x - mean) / scale, y, Loss.BCE, config.epochs, config.batch_size,
                           config.learning_rate, seed + 1)
    fold_input_affine(net, mean, scale)
    return RelevancyModel(vocab, ae, net, config, ae_trace, trace)


def fold_input_affine(net, mean, scale):
    """Rewrite layer 0 in place so ``net(x) == old_net((x - mean) / scale)``."""
    w = net.weights[0]
    net.biases[0] = net.biases[0] - w @ (mean / scale)
    net.weights[0] = w / scale[None, :]
