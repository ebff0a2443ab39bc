from datetime import timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bugloc.dnnrel import RelevancyConfig, train_relevancy_model
from bugloc.errors import EmptyCorpus
from bugloc.features import CorpusIndex, FeatureExtractor, FixHistory
from bugloc.pairing import (FoldPlan, PairSet, build_pairs, candidate_rows, manifest_path,
                            read_manifest, split_folds, write_manifest)

from conftest import EPOCH, make_bug, make_corpus, make_unit

WORDS = ["alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel"]
TINY = RelevancyConfig(hidden=6, epochs=3, ae_epochs=3, batch_size=8, ae_batch_size=8)


def word_corpus(n=8):
    units = [make_unit(f"f{i}.c", [[WORDS[i], WORDS[(i + 1) % n], "common"]],
                       names=[f"{WORDS[i]}_run"]) for i in range(n)]
    return make_corpus(units)


def word_bugs(n_bugs, n_files=8, rng=None):
    rng = rng or np.random.default_rng(0)
    bugs = []
    for j in range(n_bugs):
        t = int(rng.integers(n_files))
        bugs.append(make_bug(j, f"{WORDS[t]} common failure", [f"f{t}.c"],
                             days=int(rng.integers(0, 400))))
    return bugs


def fake_pairs(n_bugs, rng=None):
    """PairSet with one row per bug and random timestamps."""
    from bugloc.features import FeatureRow

    rng = rng or np.random.default_rng(1)
    times = {f"B{j:04d}": EPOCH + timedelta(hours=int(rng.integers(0, 10_000)))
             for j in range(n_bugs)}
    order = sorted(times, key=lambda b: (times[b], b))
    rows = [FeatureRow(b, "f.c", 0.5, 0, 0, 0, 0, label=1) for b in order]
    return PairSet(rows, times)


class TestThreshold:
    def test_negatives_below_threshold_dropped(self, monkeypatch):
        corpus = make_corpus([make_unit(p, [["x"]]) for p in ("a.c", "b.c", "c.c")])
        index = CorpusIndex(corpus)
        monkeypatch.setattr(index, "textual_all", lambda bug: np.array([0.0, 0.05, 0.3]))
        bug = make_bug(0, "x", ["a.c"])
        pairs = build_pairs([bug], corpus, 0.1, "off", index=index)
        assert [(r.file, r.label) for r in pairs.rows] == [("a.c", 1), ("c.c", 0)]

    def test_positive_kept_at_zero_similarity(self):
        corpus = word_corpus()
        bug = make_bug(0, "zzzunrelated", ["f3.c"])
        pairs = build_pairs([bug], corpus, 0.1, "off")
        assert [r.file for r in pairs.rows if r.label] == ["f3.c"]
        assert pairs.rows[0].f1 == 0.0

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0, 1), st.floats(0, 1))
    def test_monotone_in_threshold(self, a, b):
        lo, hi = sorted((a, b))
        corpus = word_corpus()
        bugs = word_bugs(6)
        index = CorpusIndex(corpus)
        neg = lambda t: sum(1 - r.label for r in build_pairs(bugs, corpus, t, "off", index=index).rows)
        assert neg(hi) <= neg(lo)

    def test_every_negative_above_threshold(self):
        pairs = build_pairs(word_bugs(10), word_corpus(), 0.2, "off")
        assert all(r.f1 > 0.2 for r in pairs.rows if not r.label)


class TestRetention:
    def test_missing_fixed_file_skips_bug(self):
        corpus = word_corpus()
        good = make_bug(0, "alpha", ["f0.c"])
        lost = make_bug(1, "bravo", ["gone.c"])
        pairs = build_pairs([good, lost], corpus, 0.0, "off")
        assert pairs.bug_ids() == ["B0000"]
        [problem] = pairs.problems
        assert problem["bug_id"] == "B0001" and problem["error"] == "UnknownFixedFile"
        assert problem["skipped"] is True

    def test_partially_missing_bug_is_kept_with_warning(self):
        pairs = build_pairs([make_bug(0, "alpha", ["f0.c", "gone.c"])], word_corpus(), 0.0, "off")
        assert pairs.positives() == 1
        assert pairs.problems[0]["skipped"] is False

    def test_positive_recount(self):
        rng = np.random.default_rng(5)
        corpus = word_corpus()
        pool = [f"f{i}.c" for i in range(8)] + ["x.c", "y.c"]
        bugs = [make_bug(j, f"{WORDS[j % 8]} common",
                         rng.choice(pool, size=int(rng.integers(1, 4)), replace=False))
                for j in range(10)]
        pairs = build_pairs(bugs, corpus, 0.1, "off")
        retained = set(pairs.bug_ids())
        expected = sum(len(b.fixed_files & corpus.units.keys()) for b in bugs if b.id in retained)
        assert pairs.positives() == expected
        assert retained == {b.id for b in bugs if b.fixed_files & corpus.units.keys()}

    def test_rows_are_chronological(self):
        pairs = build_pairs(word_bugs(15), word_corpus(), 0.0, "off")
        keys = [(pairs.bug_times[r.bug_id], r.bug_id) for r in pairs.rows]
        assert keys == sorted(keys)


class TestFolds:
    def test_250_bugs(self):
        plan = split_folds(fake_pairs(250), 100)
        assert [len(f) for f in plan.folds] == [100, 100, 50]
        assert plan.transitions() == [(0, 1), (1, 2)]

    def test_single_bug(self):
        assert len(split_folds(fake_pairs(1), 100)) == 1

    def test_empty(self):
        with pytest.raises(EmptyCorpus):
            split_folds(PairSet([]))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 120), st.integers(1, 40), st.integers(0, 2**31))
    def test_chronological_partition(self, n, per_fold, seed):
        pairs = fake_pairs(n, np.random.default_rng(seed))
        plan = split_folds(pairs, per_fold)
        flat = [b for f in plan.folds for b in f]
        assert sorted(flat) == sorted(pairs.bug_ids())
        assert len(plan) == -(-n // per_fold)
        for a, b in zip(plan.folds, plan.folds[1:]):
            assert max(pairs.bug_times[x] for x in a) <= min(pairs.bug_times[x] for x in b)

    def test_manifest_round_trip(self, tmp_path):
        pairs = fake_pairs(30)
        plan = split_folds(pairs, 7)
        path = manifest_path(tmp_path / "pairs.csv")
        assert path.endswith("pairs.folds.json")
        write_manifest(path, pairs, plan, {"config": {"seed": 3}})
        doc = read_manifest(path)
        assert doc["plan"] == plan and doc["bug_times"] == pairs.bug_times
        assert doc["config"] == {"seed": 3}
        assert FoldPlan.from_dict(plan.to_dict()) == plan


class TestNoLeakage:
    def test_history_features_use_only_earlier_bugs(self):
        bugs = word_bugs(24, rng=np.random.default_rng(9))
        corpus = word_corpus()
        index = CorpusIndex(corpus)
        pairs = build_pairs(bugs, corpus, 0.0, "off", index=index)
        by_id = {b.id: b for b in bugs}
        for r in pairs.rows:
            bug = by_id[r.bug_id]
            earlier = [b for b in bugs if b.reported_at < bug.reported_at]
            ref = FeatureExtractor(index, FixHistory(earlier)).row(bug, r.file)
            assert (r.f2, r.f4, r.f5) == (ref.f2, ref.f4, ref.f5)

    def test_per_fold_relevancy_uses_previous_fold(self):
        bugs = word_bugs(12, rng=np.random.default_rng(2))
        corpus = word_corpus()
        pairs = build_pairs(bugs, corpus, 0.0, "per_fold", bugs_per_fold=4, relevancy_config=TINY)
        plan = split_folds(pairs, 4)
        ordered = {b.id: b for b in bugs}
        folds = [[ordered[i] for i in f] for f in plan.folds]
        models = [train_relevancy_model(f, corpus, TINY) for f in folds]
        for i, fold in enumerate(folds):
            model = models[max(0, i - 1)]
            for bug in fold:
                rows = [r for r in pairs.rows if r.bug_id == bug.id]
                expected = model.score_units(bug, [corpus.units[r.file] for r in rows])
                assert [r.f6 for r in rows] == [float(s) for s in expected]
        assert pairs.relevancy.to_dict() == models[-1].to_dict()


def test_candidate_rows_cover_corpus_without_threshold():
    corpus = word_corpus()
    bug = make_bug(0, "alpha", ["f0.c"])
    rows = candidate_rows(bug, corpus)
    assert [r.file for r in rows] == sorted(corpus.units)
    assert min(r.f1 for r in rows) == 0.0
