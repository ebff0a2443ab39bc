"""Command-line driver: ingest, features, train, rank, evaluate, synth."""

import argparse
import json
import os
import sys

from . import __version__
from .bugc import bugset_from_document, load_bugc
from .config import load_config
from .corpus import Corpus, ingest_tree
from .dnnrel import RelevancyConfig, RelevancyModel
from .errors import BuglocError, IoFailure, UnknownBug
from .evaluation import evaluate_folds
from .features import CorpusIndex, read_rows_csv, write_rows_csv
from .pairing import (FoldPlan, PairSet, build_pairs, candidate_rows, manifest_path, read_manifest,
                      split_folds, write_manifest)
from .persistence import ModelBundle, load_model, save_model
from .ranker import RankerConfig, rank_files, train_fold_rankers, train_ranker
from .textpipe import use_stopwords


def _relevancy_path(csv_path):
    stem = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
    return stem + ".relevancy.json"


def _write_json(path, doc):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


def cmd_ingest(args, config):
    corpus = ingest_tree(args.src, config.language, config.mode)
    corpus.save(args.out, config.to_dict())
    for p in corpus.problems:
        print(json.dumps({"warning": p}), file=sys.stderr)
    print(json.dumps({"units": len(corpus), "problems": len(corpus.problems), "out": args.out}))


def cmd_features(args, config):
    corpus = Corpus.load(args.corpus)
    bugs = load_bugc(args.bugs)
    rel_config = RelevancyConfig.from_dict({**config.relevancy, "seed": config.seed})
    pairs = build_pairs(bugs.bugs, corpus, config.threshold, config.relevancy_scope,
                        config.bugs_per_fold, rel_config)
    for p in pairs.problems:
        print(json.dumps({"warning": p}), file=sys.stderr)
    write_rows_csv(args.out, pairs.rows)
    inputs = {"corpus": os.path.abspath(args.corpus), "bugs": os.path.abspath(args.bugs)}
    rel_file = None
    if pairs.relevancy is not None:
        rel_file = _relevancy_path(args.out)
        _write_json(rel_file, {"config": config.to_dict(), "model": pairs.relevancy.to_dict()})
    plan = split_folds(pairs, config.bugs_per_fold) if pairs.rows else None
    write_manifest(manifest_path(args.out), pairs,
                   plan or FoldPlan([], config.bugs_per_fold),
                   {"config": config.to_dict(), "inputs": inputs,
                    "relevancy_model": rel_file and os.path.abspath(rel_file)})
    print(json.dumps({"rows": len(pairs), "positives": pairs.positives(),
                      "folds": len(plan) if plan else 0, "out": args.out}))


def _load_pairs(csv_path):
    manifest = read_manifest(manifest_path(csv_path))
    rows = read_rows_csv(csv_path)
    return PairSet(rows, manifest["bug_times"], manifest.get("problems", [])), manifest


def cmd_train(args, config):
    pairs, manifest = _load_pairs(args.pairs)
    plan = manifest["plan"]
    if args.bugs_per_fold is not None and pairs.rows:
        plan = split_folds(pairs, config.bugs_per_fold)
    ranker_config = RankerConfig.from_dict(config.ranker_params)
    fold_rankers = train_fold_rankers(pairs, plan, config.ranker, config.sampling, ranker_config,
                                      config.seed)
    final = train_ranker(pairs.rows, config.ranker, config.sampling, ranker_config, config.seed)
    relevancy = None
    if manifest.get("relevancy_model"):
        relevancy = RelevancyModel.from_dict(_read_json(manifest["relevancy_model"])["model"])
    inputs = dict(manifest.get("inputs") or {})
    inputs.update(pairs=os.path.abspath(args.pairs), threshold=manifest["config"]["threshold"])
    bundle = ModelBundle(final, relevancy, fold_rankers, config.to_dict(), inputs)
    save_model(args.out, bundle)
    print(json.dumps({
        "out": args.out,
        "kind": final.kind.value,
        "transitions": len(fold_rankers),
        "skipped": [f.skipped for f in fold_rankers if f.ranker is None],
        "loss_trace": final.info.get("loss_trace"),
    }))


def _query_bugs(args):
    if args.bug_file:
        doc = _read_json(args.bug_file)
        if isinstance(doc, dict) and "bugs" not in doc:
            doc = [doc]
        return bugset_from_document(doc, args.bug_file).bugs
    return None


def cmd_rank(args, config):
    bundle = load_model(args.model)
    if not config.stopwords and bundle.config.get("stopwords"):
        use_stopwords(bundle.config["stopwords"])
    corpus_path = args.corpus or bundle.inputs.get("corpus")
    bugs_path = args.bugs or bundle.inputs.get("bugs")
    if not corpus_path:
        raise IoFailure("model records no corpus path; pass --corpus")
    corpus = Corpus.load(corpus_path)
    history = load_bugc(bugs_path).bugs if bugs_path else []
    queries = _query_bugs(args)
    if queries is None:
        by_id = {b.id: b for b in history}
        if args.bug_id not in by_id:
            raise UnknownBug(f"bug {args.bug_id!r} is not in {bugs_path}")
        queries = [by_id[args.bug_id]]
    index = CorpusIndex(corpus)
    for bug in queries:
        rows = candidate_rows(bug, corpus, history, bundle.relevancy, index)
        ranked = rank_files(bundle.ranker, bug, rows)
        print(json.dumps(ranked.to_dict(top=args.top)))


def cmd_evaluate(args, config):
    bundle = load_model(args.model)
    pairs, manifest = _load_pairs(args.pairs)
    report = evaluate_folds(pairs, manifest["plan"], bundle.fold_rankers,
                            {"run": config.to_dict(), "model": bundle.config})
    report.write(args.out)
    print(report.table())


def cmd_synth(args, config):
    from .synthetic import generate_project

    bugs = generate_project(args.out, args.files, args.bugs, config.seed)
    print(json.dumps({"out": args.out, "files": args.files, "bugs": len(bugs)}))


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (default: $BUGLOC_CONFIG)")
    common.add_argument("--seed", type=int)
    common.add_argument("--stopwords", help="one-word-per-line stop list replacing the bundled one")

    parser = argparse.ArgumentParser(prog="bugloc", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="parse a source tree into corpus JSON")
    p.add_argument("--src", required=True)
    p.add_argument("--lang", choices=["c", "java"])
    p.add_argument("--mode", choices=["srcml", "plain"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("features", parents=[common], help="build labeled pairs and folds")
    p.add_argument("--corpus", required=True)
    p.add_argument("--bugs", required=True)
    p.add_argument("--threshold", type=float)
    p.add_argument("--bugs-per-fold", type=int)
    p.add_argument("--relevancy", choices=["per_fold", "global", "off"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", parents=[common], help="train fold-wise and final rankers")
    p.add_argument("--pairs", required=True)
    p.add_argument("--ranker", choices=["rf", "gboost", "dnn", "combined"])
    p.add_argument("--sampling", choices=["none", "smote", "over", "under", "tomek"])
    p.add_argument("--bugs-per-fold", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("rank", parents=[common], help="rank corpus files for a bug")
    p.add_argument("--model", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--bug-id")
    group.add_argument("--bug-file")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--corpus", help="override the corpus recorded in the model")
    p.add_argument("--bugs", help="override the bug history recorded in the model")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("evaluate", parents=[common], help="fold-transition evaluation report")
    p.add_argument("--model", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic C project")
    p.add_argument("--out", required=True)
    p.add_argument("--files", type=int, default=30)
    p.add_argument("--bugs", type=int, default=40)
    p.set_defaults(func=cmd_synth)
    return parser


_OVERRIDES = {"lang": "language", "mode": "mode", "threshold": "threshold",
              "bugs_per_fold": "bugs_per_fold", "relevancy": "relevancy_scope",
              "ranker": "ranker", "sampling": "sampling", "seed": "seed",
              "stopwords": "stopwords"}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        values = {dest: getattr(args, flag, None) for flag, dest in _OVERRIDES.items()}
        config = config.override(**values)
        if config.stopwords:
            use_stopwords(config.stopwords)
        args.func(args, config)
    except BuglocError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return exc.exit_status
    return 0


if __name__ == "__main__":
    sys.exit(main())
