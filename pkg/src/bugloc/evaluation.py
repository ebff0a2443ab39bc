"""Ranking metrics and fold-transition evaluation reports."""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyResults, IoFailure, NoRelevant
from .ranker import rank_files

MAX_K = 15


def _hit_ranks(result):
    """1-based ranks of relevant files present in the ranking."""
    return [i for i, f in enumerate(result.files(), start=1) if f in result.relevant]


def _require(results):
    results = list(results)
    if not results:
        raise EmptyResults("no ranked lists to evaluate")
    for r in results:
        if not r.relevant:
            raise NoRelevant(f"bug {r.bug_id} has no relevant files")
    return results


def accuracy_at_k(results, k):
    if not 1 <= k <= MAX_K:
        raise ValueError(f"k must lie in 1..{MAX_K}")
    results = _require(results)
    hits = sum(1 for r in results if any(f in r.relevant for f in r.files()[:k]))
    return hits / len(results)


def average_precision(result):
    """Mean of precision@rank over relevant files; unretrieved ones add a zero term."""
    if not result.relevant:
        raise NoRelevant(f"bug {result.bug_id} has no relevant files")
    ranks = _hit_ranks(result)
    total = sum(found / rank for found, rank in enumerate(ranks, start=1))
    return total / len(result.relevant)


def mean_average_precision(results):
    results = _require(results)
    return sum(average_precision(r) for r in results) / len(results)


def mean_reciprocal_rank(results):
    results = _require(results)
    total = 0.0
    for r in results:
        ranks = _hit_ranks(r)
        if ranks:
            total += 1.0 / ranks[0]
    return total / len(results)


def metrics(results):
    results = _require(results)
    return {
        "bugs": len(results),
        "accuracy": {k: accuracy_at_k(results, k) for k in range(1, MAX_K + 1)},
        "map": mean_average_precision(results),
        "mrr": mean_reciprocal_rank(results),
    }


@dataclass
class EvalReport:
    transitions: list
    skipped: list = field(default_factory=list)
    pooled: dict = None
    config: dict = field(default_factory=dict)

    def _aggregate(self, fn):
        if not self.transitions:
            return None
        acc = {k: fn([t["accuracy"][k] for t in self.transitions]) for k in range(1, MAX_K + 1)}
        return {
            "accuracy": acc,
            "map": fn([t["map"] for t in self.transitions]),
            "mrr": fn([t["mrr"] for t in self.transitions]),
        }

    @property
    def mean(self):
        return self._aggregate(lambda v: float(np.mean(v)))

    @property
    def max(self):
        return self._aggregate(lambda v: float(np.max(v)))

    def to_dict(self):
        def jsonable(m):
            if m is None:
                return None
            out = dict(m)
            out["accuracy"] = {str(k): v for k, v in m["accuracy"].items()}
            return out

        return {
            "transitions": [jsonable(t) for t in self.transitions],
            "skipped": self.skipped,
            "mean": jsonable(self.mean),
            "max": jsonable(self.max),
            "pooled": jsonable(self.pooled),
            "config": self.config,
        }

    def table(self):
        """Plain-text table: one line per transition plus mean and max."""
        head = f"{'split':<10}{'bugs':>6}{'acc@1':>9}{'acc@5':>9}{'acc@10':>9}{'MAP':>9}{'MRR':>9}"
        lines = [head, "-" * len(head)]

        def line(label, m, bugs=""):
            a = m["accuracy"]
            return (f"{label:<10}{bugs!s:>6}{a[1]:>9.4f}{a[5]:>9.4f}{a[10]:>9.4f}"
                    f"{m['map']:>9.4f}{m['mrr']:>9.4f}")

        for t in self.transitions:
            lines.append(line(f"{t['train_fold'] + 1}->{t['test_fold'] + 1}", t, t["bugs"]))
        if self.transitions:
            lines.append(line("mean", self.mean))
            lines.append(line("max", self.max))
        if self.pooled:
            lines.append(line("pooled", self.pooled, self.pooled["bugs"]))
        return "\n".join(lines)

    def write(self, path):
        try:
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
        except OSError as exc:
            raise IoFailure(f"cannot write report {path}: {exc}") from exc


def rows_by_bug(rows):
    grouped = {}
    for r in rows:
        grouped.setdefault(r.bug_id, []).append(r)
    return grouped


def evaluate_folds(pairs, plan, fold_rankers, config=None):
    """Score each transition's test fold with the ranker trained on its train fold."""
    transitions, skipped, pooled = [], [], []
    for fr in fold_rankers:
        if fr.ranker is None:
            skipped.append({"train_fold": fr.train_fold, "test_fold": fr.test_fold,
                            "reason": fr.skipped})
            continue
        test = rows_by_bug(pairs.subset(plan.folds[fr.test_fold]).rows)
        results = [rank_files(fr.ranker, bug_id, rows) for bug_id, rows in test.items()
                   if any(r.label for r in rows)]
        if not results:
            skipped.append({"train_fold": fr.train_fold, "test_fold": fr.test_fold,
                            "reason": "test fold has no bug with a relevant file"})
            continue
        m = metrics(results)
        m.update(train_fold=fr.train_fold, test_fold=fr.test_fold)
        transitions.append(m)
        pooled.extend(results)
    return EvalReport(transitions, skipped, metrics(pooled) if pooled else None, dict(config or {}))
