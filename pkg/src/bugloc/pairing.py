"""Labeled (bug, file) rows and their chronological fold split."""

import enum
import json
from dataclasses import dataclass, field
from datetime import datetime

from .dnnrel import RelevancyConfig, RelevancyModel, train_relevancy_model
from .errors import EmptyCorpus, IoFailure, UnknownFixedFile
from .features import CorpusIndex, FeatureExtractor, FixHistory, as_utc, chronological

DEFAULT_THRESHOLD = 0.1
DEFAULT_BUGS_PER_FOLD = 100


class RelevancyScope(str, enum.Enum):
    """How the f6 relevancy model is trained.

    ``per_fold``: fold 1 rows use a model fit on fold 1, fold ``i > 1`` rows a
    model fit on fold ``i - 1``.  ``global``: one model over every bug.
    ``off``: f6 is left at 0.
    """

    PER_FOLD = "per_fold"
    GLOBAL = "global"
    OFF = "off"


@dataclass
class PairSet:
    rows: list
    bug_times: dict = field(default_factory=dict)
    problems: list = field(default_factory=list)
    relevancy: RelevancyModel = None

    def __len__(self):
        return len(self.rows)

    def bug_ids(self):
        """Distinct bug ids in row order (which is chronological)."""
        seen = {}
        for r in self.rows:
            seen.setdefault(r.bug_id, None)
        return list(seen)

    def subset(self, bug_ids):
        wanted = set(bug_ids)
        return PairSet([r for r in self.rows if r.bug_id in wanted],
                       {b: t for b, t in self.bug_times.items() if b in wanted})

    def positives(self):
        return sum(r.label for r in self.rows)


@dataclass
class FoldPlan:
    folds: list
    bugs_per_fold: int = DEFAULT_BUGS_PER_FOLD

    def __len__(self):
        return len(self.folds)

    def transitions(self):
        """(train fold index, test fold index) pairs."""
        return [(i, i + 1) for i in range(len(self.folds) - 1)]

    def to_dict(self):
        return {"bugs_per_fold": self.bugs_per_fold, "folds": [list(f) for f in self.folds]}

    @classmethod
    def from_dict(cls, data):
        return cls([list(f) for f in data["folds"]], int(data["bugs_per_fold"]))


def order_bugs(bug_ids, bug_times):
    return sorted(bug_ids, key=lambda b: (bug_times[b], b))


def chunk(seq, size):
    return [seq[i:i + size] for i in range(0, len(seq), size)]


def split_folds(pairs, bugs_per_fold=DEFAULT_BUGS_PER_FOLD):
    if bugs_per_fold < 1:
        raise ValueError("bugs_per_fold must be at least 1")
    ids = pairs.bug_ids()
    if not ids:
        raise EmptyCorpus("cannot split an empty pair set into folds")
    if pairs.bug_times:
        ids = order_bugs(ids, pairs.bug_times)
    return FoldPlan(chunk(ids, bugs_per_fold), bugs_per_fold)


def retained_bugs(bugs, corpus):
    """Chronological trainable bugs with a fixed file in the corpus, plus problems.

    A fixed file missing from the corpus is reported; the bug is dropped only
    when none of its fixed files are present.
    """
    kept, problems = [], []
    for bug in chronological(b for b in bugs if b.trainable):
        missing = sorted(bug.fixed_files - corpus.units.keys())
        if missing:
            dropped = len(missing) == len(bug.fixed_files)
            problems.append({
                "bug_id": bug.id,
                "error": UnknownFixedFile.__name__,
                "message": f"fixed files not in corpus: {', '.join(missing)}",
                "skipped": dropped,
            })
            if dropped:
                continue
        kept.append(bug)
    return kept, problems


def build_pairs(bugs, corpus, threshold=DEFAULT_THRESHOLD, relevancy=RelevancyScope.PER_FOLD,
                bugs_per_fold=DEFAULT_BUGS_PER_FOLD, relevancy_config=None, index=None):
    """All six features for every retained pair, sorted by bug timestamp then id.

    Negatives are kept only when ``f1 > threshold``; positives always.  The
    returned set carries the skipped-bug problems and the relevancy model
    meant for scoring bugs that come after all of ``bugs``.
    """
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    relevancy = RelevancyScope(relevancy)
    index = index or CorpusIndex(corpus)
    kept, problems = retained_bugs(bugs, corpus)
    extractor = FeatureExtractor(index, FixHistory(bugs))

    rows_by_bug, scores = {}, {}
    for bug in kept:
        f1_all = index.textual_all(bug)
        f3_all = index.characteristics_all(bug)
        rows = []
        for path, f1, f3 in zip(index.paths, f1_all, f3_all):
            scores[(bug.id, path)] = float(f1)
            positive = path in bug.fixed_files
            if not positive and not f1 > threshold:
                continue
            rows.append(extractor.row(bug, path, textual=float(f1), characteristics=float(f3)))
        rows_by_bug[bug.id] = rows

    final_model = None
    if relevancy is not RelevancyScope.OFF and kept:
        config = relevancy_config or RelevancyConfig()
        if relevancy is RelevancyScope.GLOBAL:
            final_model = train_relevancy_model(kept, corpus, config, scores, index)
            assignment = [(final_model, kept)]
        else:
            folds = chunk(kept, bugs_per_fold)
            models = [train_relevancy_model(f, corpus, config, scores, index) for f in folds]
            assignment = [(models[max(0, i - 1)], f) for i, f in enumerate(folds)]
            final_model = models[-1]
        for model, fold in assignment:
            for bug in fold:
                rows = rows_by_bug[bug.id]
                units = [corpus.units[r.file] for r in rows]
                for r, s in zip(rows, model.score_units(bug, units)):
                    r.f6 = float(s)

    rows = [r for bug in kept for r in rows_by_bug[bug.id]]
    times = {b.id: b.reported_at for b in kept if rows_by_bug[b.id]}
    return PairSet(rows, times, problems, final_model)


def manifest_path(csv_path):
    csv_path = str(csv_path)
    stem = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
    return stem + ".folds.json"


def write_manifest(path, pairs, plan, extra=None):
    doc = {
        "bug_times": {b: t.isoformat() for b, t in pairs.bug_times.items()},
        "plan": plan.to_dict(),
        "problems": pairs.problems,
    }
    doc.update(extra or {})
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
    except OSError as exc:
        raise IoFailure(f"cannot write fold manifest {path}: {exc}") from exc


def read_manifest(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read fold manifest {path}: {exc}") from exc
    doc["bug_times"] = {b: as_utc(datetime.fromisoformat(t)) for b, t in doc["bug_times"].items()}
    doc["plan"] = FoldPlan.from_dict(doc["plan"])
    return doc


def candidate_rows(bug, corpus, history_bugs=(), relevancy=None, index=None):
    """Unthresholded rows for every corpus file, as used at query time."""
    index = index or CorpusIndex(corpus)
    extractor = FeatureExtractor(index, FixHistory(history_bugs))
    f1_all = index.textual_all(bug)
    f3_all = index.characteristics_all(bug)
    rows = [extractor.row(bug, p, textual=float(a), characteristics=float(b))
            for p, a, b in zip(index.paths, f1_all, f3_all)]
    if relevancy is not None:
        scores = relevancy.score_units(bug, [corpus.units[p] for p in index.paths])
        for r, s in zip(rows, scores):
            r.f6 = float(s)
    return rows
