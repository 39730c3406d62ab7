import csv
import json
import shutil

import numpy as np
import pytest

from grievlex.cli import main
from grievlex.scorer import ScoreTable, write_score_table


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


def run(capsys, *argv):
    rc = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return rc, out, err


def write_table(path, n, cols, shift, seed):
    rng = np.random.default_rng(seed)
    ids = [f"{path.stem}{i}" for i in range(n)]
    write_score_table(ScoreTable(ids, list(cols), rng.normal(shift, 1.0, size=(n, len(cols)))), path)
    return path


@pytest.fixture
def lexicon(data_dir):
    return data_dir / "mini_lexicon.tsv"


def test_score_writes_one_row_per_doc(capsys, tmp_path, data_dir, lexicon):
    rc, out, _ = run(capsys, "score", data_dir / "mini_corpus.jsonl", "--lexicon", lexicon, "--out", tmp_path)
    assert rc == 0
    scores = rows(tmp_path / "mini_corpus_scores.csv")
    assert [r["doc_id"] for r in scores] == ["d1", "d2", "d3", "d4"]
    assert list(scores[0]) == ["doc_id", "token_count", "weaponry", "murder", "loneliness"]
    assert float(scores[0]["weaponry"]) == pytest.approx(0.4)
    assert float(scores[1]["murder"]) == pytest.approx(3 / 8, abs=1e-6)
    counts = rows(tmp_path / "mini_corpus_scores_counts.csv")
    assert counts[0]["weaponry"] == "2"
    head = (tmp_path / "mini_corpus_scores.csv").read_text().splitlines()[:2]
    assert head[0] == "# grievlex 0.1.0 score" and head[1].startswith("# config {")
    assert "workers" not in head[1]


def test_score_lexicon_from_environment(capsys, tmp_path, data_dir, lexicon, monkeypatch):
    monkeypatch.setenv("GRIEVLEX_LEXICON", str(lexicon))
    rc, _, _ = run(capsys, "score", data_dir / "mini_corpus.jsonl", "--out", tmp_path, "--name", "env")
    assert rc == 0 and (tmp_path / "env_scores.csv").exists()


def test_missing_lexicon_fails(capsys, tmp_path, data_dir, monkeypatch):
    monkeypatch.delenv("GRIEVLEX_LEXICON", raising=False)
    with pytest.raises(SystemExit) as exc:
        main(["score", str(data_dir / "mini_corpus.jsonl"), "--out", str(tmp_path)])
    assert exc.value.code == 2
    rc, _, err = run(capsys, "score", data_dir / "mini_corpus.jsonl", "--lexicon", tmp_path / "nope.tsv",
                     "--out", tmp_path)
    assert rc == 1 and "error" in err


def test_weighted_with_thresholded_lexicon_warns(capsys, tmp_path, data_dir, lexicon):
    rc, _, err = run(capsys, "score", data_dir / "mini_corpus.jsonl", "--lexicon", lexicon, "--filter",
                     "--mode", "weighted", "--out", tmp_path)
    assert rc == 0 and "warning" in err
    scores = rows(tmp_path / "mini_corpus_scores.csv")
    # resort (6.0) is filtered out at 7; d2 keeps last resort 8.5 and kill 7
    assert float(scores[1]["murder"]) == pytest.approx((8.5 + 7.0) / 2, abs=1e-6)


def test_alpha_needs_a_corpus(capsys, tmp_path, lexicon, data_dir):
    with pytest.raises(SystemExit) as exc:
        main(["alpha", "--lexicon", str(lexicon), "--out", str(tmp_path)])
    assert exc.value.code == 2
    rc, _, _ = run(capsys, "alpha", data_dir / "mini_corpus.jsonl", "--lexicon", lexicon, "--out", tmp_path)
    assert rc == 0
    assert [r["category"] for r in rows(tmp_path / "alpha.csv")] == ["weaponry", "murder", "loneliness"]


def test_correlate(capsys, tmp_path):
    a = write_table(tmp_path / "a.csv", 30, ["x", "y"], 0, 1)
    b = tmp_path / "b.csv"
    shutil.copy(a, b)
    rc, _, _ = run(capsys, "correlate", a, b, "--out", tmp_path)
    assert rc == 0
    res = {(r["cat_a"], r["cat_b"]): r for r in rows(tmp_path / "correlations.csv")}
    assert float(res[("x", "x")]["r"]) == pytest.approx(1.0)


def test_compare_and_determinism(capsys, tmp_path):
    t = write_table(tmp_path / "t.csv", 60, ["a", "b"], 0.5, 1)
    c = write_table(tmp_path / "c.csv", 80, ["a", "b"], 0.0, 2)
    out = tmp_path / "out"
    assert run(capsys, "compare", t, c, "--out", out, "--iterations", 20)[0] == 0
    first = (out / "comparison.csv").read_bytes()
    shutil.move(out / "comparison.csv", tmp_path / "first.csv")
    assert run(capsys, "compare", t, c, "--out", out, "--iterations", 20, "--workers", 2)[0] == 0
    assert (out / "comparison.csv").read_bytes() == first
    res = rows(out / "comparison.csv")
    assert [r["category"] for r in res] == ["a", "b"]
    assert run(capsys, "compare", t, c, "--out", out, "--iterations", 20, "--seed", 7)[0] == 0
    assert (out / "comparison.csv").read_bytes() != first


def test_paired_compare_needs_matching_ids(capsys, tmp_path):
    t = write_table(tmp_path / "t.csv", 20, ["a"], 0.5, 1)
    c = write_table(tmp_path / "c.csv", 20, ["a"], 0.0, 2)
    rc, _, err = run(capsys, "compare", t, c, "--paired", "--out", tmp_path)
    assert rc == 1 and "error" in err
    rng = np.random.default_rng(3)
    same = tmp_path / "t2.csv"
    write_score_table(ScoreTable([f"t{i}" for i in range(20)], ["a"], rng.normal(size=(20, 1))), same)
    rc, _, _ = run(capsys, "compare", t, same, "--paired", "--out", tmp_path, "--name", "paired")
    assert rc == 0 and len(rows(tmp_path / "paired.csv")) == 1


def test_classify_separable(capsys, tmp_path):
    cols = ["f1", "f2", "f3"]
    t = write_table(tmp_path / "t.csv", 100, cols, 4.0, 1)
    c = write_table(tmp_path / "c.csv", 100, cols, 0.0, 2)
    rc, _, _ = run(capsys, "classify", t, c, "--iterations", 10, "--task", "sep", "--out", tmp_path)
    assert rc == 0
    [m] = rows(tmp_path / "sep_grievance_metrics.csv")
    assert float(m["accuracy"]) >= 0.95 and m["iterations"] == "10"
    imp = rows(tmp_path / "sep_grievance_importance.csv")
    assert sorted(r["feature"] for r in imp) == cols
    rc, _, _ = run(capsys, "classify", t, c, "--holdout", "--task", "h", "--out", tmp_path)
    assert rc == 0 and float(rows(tmp_path / "h_grievance_metrics.csv")[0]["accuracy"]) >= 0.95
    rc, _, _ = run(capsys, "classify", t, c, "--cross-test", t, c, "--task", "x", "--out", tmp_path)
    assert rc == 0 and rows(tmp_path / "x_grievance_metrics.csv")[0]["seed"] == ""


def test_classify_cross_test_column_mismatch(capsys, tmp_path):
    t = write_table(tmp_path / "t.csv", 30, ["f1", "f2"], 4.0, 1)
    c = write_table(tmp_path / "c.csv", 30, ["f1", "f2"], 0.0, 2)
    tt = write_table(tmp_path / "tt.csv", 30, ["f2", "f1"], 4.0, 3)
    tc = write_table(tmp_path / "tc.csv", 30, ["f2", "f1"], 0.0, 4)
    rc, _, err = run(capsys, "classify", t, c, "--cross-test", tt, tc, "--out", tmp_path)
    assert rc == 1 and "columns" in err


def test_classify_external_needs_tables(capsys, tmp_path):
    t = write_table(tmp_path / "t.csv", 30, ["f1"], 4.0, 1)
    c = write_table(tmp_path / "c.csv", 30, ["f1"], 0.0, 2)
    with pytest.raises(SystemExit) as exc:
        main(["classify", str(t), str(c), "--features", "both", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_build(capsys, tmp_path, data_dir):
    d = data_dir / "build"
    rc, _, _ = run(capsys, "build", "--seeds", d / "seeds.tsv", "--ratings", d / "ratings.csv",
                   "--synonyms", d / "synonyms.tsv", "--embeddings", d / "embeddings.txt", "-k", 2,
                   "--out", tmp_path)
    assert rc == 0
    for name in ("lexicon_weighted.tsv", "lexicon_threshold_7.tsv", "lexicon_threshold_5.tsv"):
        assert (tmp_path / name).exists()
    report = json.loads((tmp_path / "build_report.json").read_text())
    assert report["stages"]["final_entries"] == 8 and report["stages"]["entries_threshold_7"] == 5
    assert report["config"]["k"] == 2 and "workers" not in report["config"]
    with pytest.raises(SystemExit) as exc:
        main(["build", "--seeds", str(d / "seeds.tsv"), "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_chunk(capsys, tmp_path):
    src = tmp_path / "long.jsonl"
    src.write_text(json.dumps({"id": "doc", "text": " ".join(f"w{i}" for i in range(437))}) + "\n")
    rc, _, _ = run(capsys, "chunk", src, "--out", tmp_path)
    assert rc == 0
    lines = [json.loads(x) for x in (tmp_path / "long_chunks.jsonl").read_text().splitlines()]
    assert [x["id"] for x in lines] == ["doc#0", "doc#1", "doc#2", "doc#3"]
    with pytest.raises(SystemExit) as exc:
        main(["chunk", str(src), "--chunk-size", "0"])
    assert exc.value.code == 2


def test_info(capsys, lexicon):
    rc, out, _ = run(capsys, "info", "--lexicon", lexicon)
    assert rc == 0
    assert out.startswith("grievlex 0.1.0") and "6 entries" in out and "weaponry\t2" in out
