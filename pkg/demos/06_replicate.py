"""Recipe: run the whole analysis on your own corpora.

Produces the same-shaped tables as a full study: alpha per category and
corpus, target-vs-control comparisons, and classification metrics with
feature importance. Corpora are JSONL files (one {"id", "text"} object
per line) or directories of .txt files.

    python3 demos/06_replicate.py --lexicon lexicon_threshold_7.tsv \\
        --pair extremist extremist.jsonl neutral.jsonl \\
        --pair threats threats.jsonl harmless.jsonl --out results/

Without arguments it runs on small synthetic corpora so the shapes can
be inspected.
"""

import argparse
import random
from pathlib import Path

from grievlex.classifier import FeatureTable, bootstrap_classify, dumps_importance, dumps_metrics, roc_importance
from grievlex.inferstats import bootstrap_compare, dumps_comparison
from grievlex.lexicon import Lexicon, LexiconEntry, dumps_lexicon, load_lexicon
from grievlex.psychometrics import alpha_suite, dumps_alpha_reports
from grievlex.scorer import score_corpus
from grievlex.textprep import Corpus, Document, chunk_corpus, load_corpus, stem_phrase, write_corpus_jsonl


def synthetic(workdir: Path):
    """A toy lexicon and two target/control pairs written to ``workdir``."""
    words = {"weaponry": ["gun", "knife", "rifle"], "murder": ["kill", "slaughter"], "hate": ["hate", "despise"]}
    lex = Lexicon.from_entries([LexiconEntry(c, stem_phrase(w), 8.0, 5) for c, ws in words.items() for w in ws])
    (workdir / "lexicon.tsv").write_text(dumps_lexicon(lex))
    vocab = [w for ws in words.values() for w in ws]
    filler = "the a and it we they day home work went said over".split()
    rng = random.Random(0)

    def corpus(name, n, rate):
        docs = []
        for i in range(n):
            r = rng.uniform(0, 2 * rate)  # documents differ in how charged they are
            toks = [rng.choice(vocab) if rng.random() < r else rng.choice(filler) for _ in range(rng.randint(150, 400))]
            docs.append(Document.from_tokens(f"{name}{i}", toks))
        path = workdir / f"{name}.jsonl"
        write_corpus_jsonl(docs, path)
        return str(path)

    pairs = [("violent", corpus("violent", 40, 0.04), corpus("neutral", 120, 0.01)),
             ("subtle", corpus("subtle", 40, 0.012), corpus("baseline", 120, 0.01))]
    return str(workdir / "lexicon.tsv"), pairs


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lexicon")
    ap.add_argument("--pair", nargs=3, action="append", metavar=("NAME", "TARGET", "CONTROL"))
    ap.add_argument("--chunk-size", type=int, default=100)
    ap.add_argument("--iterations", type=int, default=100)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--out", default="replicate_out")
    args = ap.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if not args.pair:
        inputs = out / "synthetic_inputs"
        inputs.mkdir(exist_ok=True)
        args.lexicon, args.pair = synthetic(inputs)
        print(f"no corpora given; using synthetic data in {inputs}")
    lex = load_lexicon(args.lexicon)

    # documents are cut into fixed-length windows so long and short texts weigh the same
    chunked: dict[str, Corpus] = {}
    for _, *paths in args.pair:
        for p in paths:
            if p not in chunked:
                c = load_corpus(p)
                chunked[p] = chunk_corpus(c, args.chunk_size)
    scores = {p: score_corpus(c, lex) for p, c in chunked.items()}

    corpora = list(chunked.values())
    (out / "alpha.csv").write_text(dumps_alpha_reports(alpha_suite(corpora, lex), [c.name for c in corpora]))

    comparisons, metrics = [], []
    for name, t, c in args.pair:
        reports = bootstrap_compare(scores[t], scores[c], args.iterations, args.seed)
        for r in reports:
            r.category = f"{name}:{r.category}"
        comparisons += reports
        side = lambda table, y: FeatureTable(list(table.doc_ids), list(table.columns), table.values, [y] * len(table))
        m = bootstrap_classify(side(scores[t], 1), side(scores[c], 0), args.iterations, args.seed)
        metrics.append((name, "grievance", m, m.iterations, m.seed))
        pooled = FeatureTable.from_tables(scores[t], scores[c])
        (out / f"{name}_importance.csv").write_text(dumps_importance(roc_importance(pooled)))
    (out / "comparison.csv").write_text(dumps_comparison(comparisons))
    (out / "classification.csv").write_text(dumps_metrics(metrics))

    for f in sorted(out.glob("*.csv")):
        print(f"== {f}")
        print(f.read_text())


if __name__ == "__main__":
    main()
