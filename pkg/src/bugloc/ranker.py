"""Final rankers over the six pair features, and per-bug ranked lists."""

import enum
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import AllRowsRemoved, CorruptModel, NoPositivePairs, TooFewMinority
from .features import feature_matrix
from .mlcore import (Activation, FeedForwardNet, Loss, TreeEnsemble, fit_forest, fit_gboost,
                     net_train)
from .sampling import Sampling, apply_sampling


class RankerKind(str, enum.Enum):
    RANDOM_FOREST = "RandomForest"
    GRADIENT_BOOST = "GradientBoost"
    DNN = "DNN"
    COMBINED_RF = "CombinedRF"

    @classmethod
    def parse(cls, value):
        if isinstance(value, RankerKind):
            return value
        aliases = {"rf": cls.RANDOM_FOREST, "gboost": cls.GRADIENT_BOOST, "dnn": cls.DNN,
                   "combined": cls.COMBINED_RF}
        key = str(value).strip()
        if key.lower() in aliases:
            return aliases[key.lower()]
        return cls(key)


@dataclass
class RankerConfig:
    n_trees: int = 100
    max_features: int = 2
    min_leaf: int = 1
    boost_trees: int = 100
    boost_depth: int = 3
    boost_learning_rate: float = 0.1
    hidden: int = 700
    activation: str = "ReLU"
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 0.01
    standardize: bool = True
    smote_k: int = 5
    classifier_threshold: float = 0.5
    positives_only: bool = False

    @classmethod
    def from_dict(cls, data):
        return cls(**{k: v for k, v in (data or {}).items() if k in cls.__dataclass_fields__})

    def to_dict(self):
        return asdict(self)


@dataclass
class Ranker:
    """A fitted scoring model plus everything needed to reapply it.

    ``info`` records training diagnostics: loss traces for the network, and
    for the combined kind the indices of the training rows that survived
    the classifier filter.
    """

    kind: RankerKind
    model: object
    config: RankerConfig
    seed: int = 0
    sampling: Sampling = Sampling.NONE
    scaler: tuple = None
    info: dict = field(default_factory=dict)

    def score_matrix(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if self.kind is RankerKind.DNN:
            mean, scale = self.scaler
            return self.model.forward((X - mean) / scale)[:, 0]
        return self.model.predict(X)

    def score(self, rows):
        if not rows:
            return np.zeros(0)
        return self.score_matrix(feature_matrix(rows))

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "model": self.model.to_dict(),
            "config": self.config.to_dict(),
            "seed": self.seed,
            "sampling": self.sampling.value,
            "scaler": None if self.scaler is None else [np.asarray(s).tolist() for s in self.scaler],
            "info": self.info,
        }

    @classmethod
    def from_dict(cls, data):
        try:
            kind = RankerKind(data["kind"])
            if kind is RankerKind.DNN:
                model = FeedForwardNet.from_dict(data["model"])
            else:
                model = TreeEnsemble.from_dict(data["model"])
            scaler = data.get("scaler")
            if scaler is not None:
                scaler = (np.asarray(scaler[0], dtype=float), np.asarray(scaler[1], dtype=float))
            return cls(kind, model, RankerConfig.from_dict(data.get("config")), data.get("seed", 0),
                       Sampling(data.get("sampling", "none")), scaler, dict(data.get("info") or {}))
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptModel(f"bad ranker payload: {exc}") from exc


def _training_arrays(rows):
    rows = list(rows.rows if hasattr(rows, "rows") else rows)
    y = np.array([r.label for r in rows], dtype=np.int64)
    if not y.any():
        raise NoPositivePairs("training slice has no positive pairs")
    return feature_matrix(rows), y


def _fit(kind, X, y, config, seed):
    if kind is RankerKind.GRADIENT_BOOST:
        return fit_gboost(X, y, n_trees=config.boost_trees, depth=config.boost_depth,
                          learning_rate=config.boost_learning_rate, seed=seed,
                          min_leaf=config.min_leaf), None, {}
    if kind is RankerKind.DNN:
        mean = X.mean(axis=0) if config.standardize else np.zeros(X.shape[1])
        scale = X.std(axis=0) if config.standardize else np.ones(X.shape[1])
        scale = np.where(scale > 0, scale, 1.0)
        net = FeedForwardNet.init([X.shape[1], config.hidden, 1],
                                  [Activation.parse(config.activation), Activation.SIGMOID], seed=seed)
        net, trace = net_train(net, (X - mean) / scale, y, Loss.BCE, config.epochs,
                               config.batch_size, config.learning_rate, seed)
        return net, (mean, scale), {"loss_trace": trace}
    return fit_forest(X, y, n_trees=config.n_trees, max_features=config.max_features,
                      min_leaf=config.min_leaf, seed=seed), None, {}


def train_ranker(train_rows, kind=RankerKind.RANDOM_FOREST, sampling=Sampling.NONE, config=None,
                 seed=0):
    """Resample the training rows, then fit ``kind`` with the label as regression target."""
    kind = RankerKind.parse(kind)
    config = config if isinstance(config, RankerConfig) else RankerConfig.from_dict(config)
    if kind is RankerKind.COMBINED_RF:
        return train_combined(train_rows, config, seed)
    sampling = Sampling.parse(sampling)
    X, y = _training_arrays(train_rows)
    X, y = apply_sampling(X, y, sampling, seed=seed, k=config.smote_k)
    model, scaler, info = _fit(kind, X, y, config, seed)
    info["training_rows"] = int(y.size)
    return Ranker(kind, model, config, seed, sampling, scaler, info)


def train_combined(train_rows, config=None, seed=0):
    """Classifier-filtered SMOTE random forest.

    A forest classifier (mean leaf label >= threshold means positive) is fit
    on every row; misclassified rows are dropped, the rest are SMOTE-balanced
    and fed to a regression forest.  With ``positives_only`` only
    misclassified positives are dropped.
    """
    config = config if isinstance(config, RankerConfig) else RankerConfig.from_dict(config)
    X, y = _training_arrays(train_rows)
    classifier = fit_forest(X, y, n_trees=config.n_trees, max_features=config.max_features,
                            min_leaf=config.min_leaf, seed=seed)
    predicted = (classifier.predict(X) >= config.classifier_threshold).astype(np.int64)
    wrong = predicted != y
    if config.positives_only:
        wrong &= y == 1
    keep = np.flatnonzero(~wrong)
    if keep.size == 0:
        raise AllRowsRemoved(f"the classifier misclassified all {y.size} training rows")
    if not y[keep].any():
        raise AllRowsRemoved("the classifier filter removed every positive row")
    Xs, ys = apply_sampling(X[keep], y[keep], Sampling.SMOTE, seed=seed, k=config.smote_k)
    model, _, _ = _fit(RankerKind.RANDOM_FOREST, Xs, ys, config, seed)
    info = {"kept_rows": keep.tolist(), "removed_rows": np.flatnonzero(wrong).tolist(),
            "training_rows": int(ys.size)}
    return Ranker(RankerKind.COMBINED_RF, model, config, seed, Sampling.SMOTE, None, info)


@dataclass
class RankedList:
    bug_id: str
    ranking: list
    relevant: frozenset

    def files(self):
        return [f for f, _ in self.ranking]

    def to_dict(self, top=None):
        entries = self.ranking if top is None else self.ranking[:top]
        return {
            "bug_id": self.bug_id,
            "ranking": [{"file": f, "score": s} for f, s in entries],
            "relevant": sorted(self.relevant),
        }


def order_scores(files, scores):
    """Descending score, ascending path among equal scores."""
    return sorted(zip(files, (float(s) for s in scores)), key=lambda fs: (-fs[1], fs[0]))


def rank_files(ranker, bug, rows, relevant=None):
    """Rank one bug's candidate rows.

    ``bug`` is a bug report or a bare id.  Ground truth defaults to the
    report's fixed files, or to the positive rows when only an id is given.
    """
    rows = list(rows)
    bug_id = getattr(bug, "id", bug)
    if relevant is None:
        fixed = getattr(bug, "fixed_files", None)
        relevant = fixed if fixed is not None else {r.file for r in rows if r.label}
    ranking = order_scores([r.file for r in rows], ranker.score(rows))
    return RankedList(bug_id, ranking, frozenset(relevant))


@dataclass
class FoldRanker:
    train_fold: int
    test_fold: int
    ranker: Ranker = None
    skipped: str = None

    def to_dict(self):
        return {"train_fold": self.train_fold, "test_fold": self.test_fold,
                "ranker": None if self.ranker is None else self.ranker.to_dict(),
                "skipped": self.skipped}

    @classmethod
    def from_dict(cls, data):
        ranker = data.get("ranker")
        return cls(data["train_fold"], data["test_fold"],
                   None if ranker is None else Ranker.from_dict(ranker), data.get("skipped"))


def train_fold_rankers(pairs, plan, kind=RankerKind.RANDOM_FOREST, sampling=Sampling.NONE,
                       config=None, seed=0, trainer=train_ranker):
    """One ranker per (fold i -> fold i+1) transition, trained on fold i's rows only.

    ``trainer`` receives exactly the training fold's rows.  A transition whose
    training fold cannot be fit (no positives, too few for SMOTE) is kept
    with a ``skipped`` reason.
    """
    out = []
    for i, j in plan.transitions():
        train = pairs.subset(plan.folds[i]).rows
        try:
            ranker = trainer(train, kind, sampling, config, seed)
        except (NoPositivePairs, AllRowsRemoved, TooFewMinority) as exc:
            out.append(FoldRanker(i, j, None, f"{type(exc).__name__}: {exc}"))
            continue
        out.append(FoldRanker(i, j, ranker))
    return out
