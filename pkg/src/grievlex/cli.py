"""Command-line interface: ``grievlex <command> ...``.

Every written file starts with ``#`` lines recording the tool version
and the resolved run configuration; the CSV/TSV readers in this package
skip them (``pandas.read_csv(..., comment="#")`` does too).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __version__
from .builder import build_lexicon, build_report, load_embeddings, load_ratings, load_seeds, load_synonyms
from .classifier import (
    FeatureTable, bootstrap_classify, cross_sample_classify, dumps_importance, dumps_metrics,
    holdout_classify, join_tables, roc_importance,
)
from .inferstats import DEFAULT_BF_SCALE, bootstrap_compare, dumps_comparison, paired_compare
from .lexicon import Lexicon, dumps_lexicon, filter_by_threshold, load_lexicon
from .psychometrics import alpha_suite, cross_correlate, dumps_alpha_reports, dumps_correlations
from .scorer import dumps_score_table, read_score_table, score_corpus
from .textprep import chunk_corpus, load_corpus, write_corpus_jsonl

LEXICON_ENV = "GRIEVLEX_LEXICON"


@dataclass(frozen=True)
class RunConfig:
    seed: int = 42
    iterations: int = 100
    chunk_size: int = 100
    threshold: float = 7.0
    bf_scale: float = DEFAULT_BF_SCALE
    output_dir: str = "."
    workers: int = 1

    def header(self, command: str) -> str:
        # workers is excluded: outputs must not depend on it
        cfg = {k: v for k, v in asdict(self).items() if k != "workers"}
        return f"grievlex {__version__} {command}\nconfig {json.dumps(cfg, sort_keys=True)}"


class UsageError(Exception):
    pass


def _write(cfg: RunConfig, name: str, text: str) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    print(path)
    return path


def _lexicon(args) -> Lexicon:
    path = args.lexicon or os.environ.get(LEXICON_ENV)
    if not path:
        raise UsageError(f"no lexicon given (use --lexicon or set {LEXICON_ENV})")
    lex = load_lexicon(path)
    if getattr(args, "filter", False):
        lex = filter_by_threshold(lex, args.threshold)
    return lex


def cmd_score(args, cfg: RunConfig) -> None:
    lex = _lexicon(args)
    if args.mode == "weighted" and lex.threshold is not None:
        print(f"warning: weighted scoring with a lexicon thresholded at {lex.threshold:g}; "
              "weights below the threshold are absent", file=sys.stderr)
    corpus = load_corpus(args.corpus, args.format)
    table = score_corpus(corpus, lex, args.mode, workers=cfg.workers)
    name = args.name or corpus.name
    head = cfg.header("score")
    _write(cfg, f"{name}_scores.csv", dumps_score_table(table, comment=head))
    _write(cfg, f"{name}_scores_counts.csv", dumps_score_table(table, counts=True, comment=head))


def cmd_alpha(args, cfg: RunConfig) -> None:
    if not args.corpora:
        raise UsageError("alpha needs at least one corpus")
    lex = _lexicon(args)
    corpora = [load_corpus(p, args.format) for p in args.corpora]
    reports = alpha_suite(corpora, lex)
    _write(cfg, "alpha.csv", dumps_alpha_reports(reports, [c.name for c in corpora], cfg.header("alpha")))


def cmd_correlate(args, cfg: RunConfig) -> None:
    report = cross_correlate(read_score_table(args.scores_a), read_score_table(args.scores_b))
    _write(cfg, "correlations.csv", dumps_correlations(report, cfg.header("correlate")))


def cmd_compare(args, cfg: RunConfig) -> None:
    target, control = read_score_table(args.target), read_score_table(args.control)
    if args.paired:
        reports = paired_compare(target, control, cfg.bf_scale, seed=cfg.seed)
    else:
        reports = bootstrap_compare(target, control, cfg.iterations, cfg.seed, cfg.bf_scale, workers=cfg.workers)
    _write(cfg, f"{args.name}.csv", dumps_comparison(reports, cfg.header("compare")))


def _features(kind: str, grievance, external):
    if kind == "grievance":
        return grievance
    if external is None:
        raise UsageError(f"--features {kind} needs the external score tables")
    if kind == "external":
        return external.align(grievance.doc_ids)
    return join_tables(grievance, external)


def cmd_classify(args, cfg: RunConfig) -> None:
    def load_pair(target, control, ext_target, ext_control):
        g_t, g_c = read_score_table(target), read_score_table(control)
        e_t = read_score_table(ext_target) if ext_target else None
        e_c = read_score_table(ext_control) if ext_control else None
        if (e_t is None) != (e_c is None):
            raise UsageError("give external tables for both target and control")
        return _features(args.features, g_t, e_t), _features(args.features, g_c, e_c)

    t, c = load_pair(args.target, args.control, args.external_target, args.external_control)
    if t.columns != c.columns:
        raise ValueError("target and control tables have different columns")
    train = FeatureTable.from_tables(t, c)
    if args.cross_test:
        tt, tc = load_pair(args.cross_test[0], args.cross_test[1],
                           args.external_test_target, args.external_test_control)
        if tt.columns != train.features or tc.columns != train.features:
            raise ValueError("cross-test tables must have exactly the training feature columns, in order")
        metrics = cross_sample_classify(train, FeatureTable.from_tables(tt, tc))
        row = (args.task, args.features, metrics, 1, None)
    elif args.holdout:
        metrics = holdout_classify(train, cfg.seed, args.split)
        row = (args.task, args.features, metrics, 1, cfg.seed)
    else:
        metrics = bootstrap_classify(_side(t, 1), _side(c, 0), cfg.iterations, cfg.seed, args.split,
                                     workers=cfg.workers)
        row = (args.task, args.features, metrics, cfg.iterations, cfg.seed)
    head = cfg.header("classify")
    _write(cfg, f"{args.task}_{args.features}_metrics.csv", dumps_metrics([row], head))
    _write(cfg, f"{args.task}_{args.features}_importance.csv", dumps_importance(roc_importance(train), head))


def _side(table, label: int) -> FeatureTable:
    return FeatureTable(list(table.doc_ids), list(table.columns), table.values, [label] * len(table))


def cmd_build(args, cfg: RunConfig) -> None:
    seeds = load_seeds(args.seeds)
    synonyms = load_synonyms(args.synonyms) if args.synonyms else None
    embeddings = load_embeddings(args.embeddings) if args.embeddings else None
    records = load_ratings(args.ratings)
    thresholds = sorted({cfg.threshold, 5.0}, reverse=True)
    result = build_lexicon(seeds, records, synonyms, embeddings, args.k, thresholds)
    head = cfg.header("build")
    _write(cfg, "lexicon_weighted.tsv", dumps_lexicon(result.weighted, head))
    for theta, lex in result.versions.items():
        _write(cfg, f"lexicon_threshold_{theta:g}.tsv", dumps_lexicon(lex, head))
    config = {k: v for k, v in asdict(cfg).items() if k != "workers"}
    report = build_report(result, {"version": __version__, "k": args.k, **config})
    _write(cfg, "build_report.json", json.dumps(report, indent=2, sort_keys=True) + "\n")


def cmd_chunk(args, cfg: RunConfig) -> None:
    corpus = load_corpus(args.corpus, args.format)
    chunks = chunk_corpus(corpus, cfg.chunk_size)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{args.name or corpus.name}_chunks.jsonl"
    write_corpus_jsonl(chunks, path)
    print(path)


def cmd_info(args, cfg: RunConfig) -> None:
    print(f"grievlex {__version__}")
    print("config " + json.dumps(asdict(cfg), sort_keys=True))
    path = args.lexicon or os.environ.get(LEXICON_ENV)
    if path:
        lex = load_lexicon(path)
        thr = "none" if lex.threshold is None else f"{lex.threshold:g}"
        print(f"lexicon {path}: {len(lex)} entries, {lex.n_stems()} distinct keys, "
              f"{len(lex.categories)} categories, version {lex.version_tag or '-'}, threshold {thr}")
        for cat, n in lex.counts().items():
            print(f"  {cat}\t{n}")


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {s}")
    return v


def _threshold(s: str) -> float:
    v = float(s)
    if not 0 <= v <= 10:
        raise argparse.ArgumentTypeError(f"threshold must lie in [0, 10], got {s}")
    return v


def _global_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    c = RunConfig()
    g = parser.add_argument_group("run configuration")
    g.add_argument("--seed", type=int, default=d(c.seed), help="random seed (default 42)")
    g.add_argument("--iterations", type=_positive_int, default=d(c.iterations), help="bootstrap iterations (default 100)")
    g.add_argument("--threshold", type=_threshold, default=d(c.threshold), help="rating threshold (default 7)")
    g.add_argument("--chunk-size", type=_positive_int, default=d(c.chunk_size), help="tokens per chunk (default 100)")
    g.add_argument("--bf-scale", type=float, default=d(c.bf_scale), help="Cauchy prior scale (default sqrt(2)/2)")
    g.add_argument("--out", default=d(c.output_dir), help="output directory (default .)")
    g.add_argument("--workers", type=_positive_int, default=d(c.workers), help="parallel workers (default 1)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="grievlex", description="Score texts against a threat-language lexicon and analyse the scores.")
    p.add_argument("--version", action="version", version=f"grievlex {__version__}")
    _global_options(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        sp = sub.add_parser(name, help=help)
        _global_options(sp, suppress=True)
        sp.set_defaults(func=func)
        return sp

    def lexicon_opts(sp):
        sp.add_argument("--lexicon", help=f"lexicon TSV (default ${LEXICON_ENV})")
        sp.add_argument("--filter", action="store_true", help="drop entries rated below --threshold first")

    sp = add("score", cmd_score, "score a corpus against a lexicon")
    sp.add_argument("corpus")
    sp.add_argument("--format", choices=("jsonl", "txt-dir"))
    sp.add_argument("--mode", choices=("proportional", "weighted"), default="proportional")
    sp.add_argument("--name", help="output file stem (default: corpus name)")
    lexicon_opts(sp)

    sp = add("alpha", cmd_alpha, "Cronbach's alpha per category across corpora")
    sp.add_argument("corpora", nargs="*")
    sp.add_argument("--format", choices=("jsonl", "txt-dir"))
    lexicon_opts(sp)

    sp = add("correlate", cmd_correlate, "correlate two score tables over shared documents")
    sp.add_argument("scores_a")
    sp.add_argument("scores_b")

    sp = add("compare", cmd_compare, "effect sizes and Bayes factors between two score tables")
    sp.add_argument("target")
    sp.add_argument("control")
    sp.add_argument("--paired", action="store_true", help="dependent samples, paired by doc_id")
    sp.add_argument("--name", default="comparison", help="output file stem (default: comparison)")

    sp = add("classify", cmd_classify, "Naive Bayes classification and ROC feature importance")
    sp.add_argument("target")
    sp.add_argument("control")
    sp.add_argument("--features", choices=("grievance", "external", "both"), default="grievance")
    sp.add_argument("--external-target")
    sp.add_argument("--external-control")
    sp.add_argument("--cross-test", nargs=2, metavar=("TEST_TARGET", "TEST_CONTROL"))
    sp.add_argument("--external-test-target")
    sp.add_argument("--external-test-control")
    sp.add_argument("--holdout", action="store_true", help="single stratified split, no down-sampling")
    sp.add_argument("--split", type=float, default=0.8, help="training share (default 0.8)")
    sp.add_argument("--task", default="task", help="task label for the output")

    sp = add("build", cmd_build, "rebuild lexicon versions from seeds, expansions and ratings")
    sp.add_argument("--seeds", required=True)
    sp.add_argument("--ratings", required=True)
    sp.add_argument("--synonyms")
    sp.add_argument("--embeddings")
    sp.add_argument("-k", type=_positive_int, default=10, help="embedding neighbours per seed (default 10)")

    sp = add("chunk", cmd_chunk, "cut documents into fixed-length excerpts")
    sp.add_argument("corpus")
    sp.add_argument("--format", choices=("jsonl", "txt-dir"))
    sp.add_argument("--name", help="output file stem (default: corpus name)")

    sp = add("info", cmd_info, "version, configuration and lexicon summary")
    sp.add_argument("--lexicon")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not (args.bf_scale > 0 and math.isfinite(args.bf_scale)):
        parser.error("--bf-scale must be a positive number")
    cfg = RunConfig(args.seed, args.iterations, args.chunk_size, args.threshold, args.bf_scale, args.out,
                    args.workers)
    try:
        args.func(args, cfg)
    except UsageError as exc:
        parser.error(str(exc))
    except (ValueError, OSError, KeyError, ArithmeticError) as exc:
        print(f"grievlex {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
