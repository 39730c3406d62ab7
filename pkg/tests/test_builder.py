import json
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grievlex.builder import (
    BuildError, EmbeddingTable, RatingRecord, SeedList, build_lexicon, build_report, expand_embeddings,
    expand_synonyms, ingest_ratings, load_embeddings, load_ratings, load_seeds, load_synonyms, merge_candidates,
    write_build_report,
)
from grievlex.lexicon import filter_by_threshold
from oracles import cosine_neighbours

# Hand tallies for tests/data/build (k = 2 neighbours):
#   weaponry seeds knife, gun -> synonyms add dagger, machete, shiv, rifle (6 words)
#            neighbours knife: blade, dagger; gun: rifle, kill (4 more, 10 in all)
#            distinct: knife gun dagger machete shiv rifle blade kill (8)
#   murder   seeds knife, slaughter -> synonyms add dagger, machete, shiv (5 words);
#            slaughter has no synonyms (1 missing) and no vector (1 OOV)
#            neighbours knife: blade, dagger (2 more, 7 in all); distinct 6
#   ratings  p4 fails a check: their 3 records go (knife, machete, dagger)
#            machete 2/3 unknown, shiv 1/2, blade 2/2 -> dropped as unknown
#            dagger has nothing left -> dropped, no ratings
#            weaponry: knife 9 (3), gun 8 (2), rifl 5.5 (2), kill 3 (3)
#            murder: knife 6.5 (2), slaughter 25/3 (3), kill 7 (kills 8,6 + killing 7), last resort 8.5 (2)
TOY_STAGES = {
    "seeds": 4, "post_synonym": 11, "post_embedding": 17, "post_dedup": 14,
    "synonym_seeds_missing": 1, "embedding_seeds_oov": 1,
    "participants": 4, "participants_dropped": 1, "ratings_dropped_attention": 3,
    "words_rated": 13, "words_dropped_unknown": 3, "words_dropped_no_ratings": 1,
    "final_entries": 8, "final_stems": 6, "entries_threshold_7": 5, "entries_threshold_5": 7,
}


@pytest.fixture
def toy(data_dir):
    d = data_dir / "build"
    return (load_seeds(d / "seeds.tsv"), load_synonyms(d / "synonyms.tsv"),
            load_embeddings(d / "embeddings.txt"), load_ratings(d / "ratings.csv"))


def test_toy_build_matches_hand_tally(toy):
    seeds, syn, emb, ratings = toy
    res = build_lexicon(seeds, ratings, syn, emb, k=2)
    assert res.stages == TOY_STAGES
    assert res.per_category["weaponry"] == {"seeds": 2, "post_synonym": 6, "post_embedding": 10,
                                            "post_dedup": 8, "final_entries": 4}
    assert res.per_category["murder"] == {"seeds": 2, "post_synonym": 5, "post_embedding": 7,
                                          "post_dedup": 6, "final_entries": 4}
    lex = res.weighted
    got = {(e.category, e.key): (e.mean_rating, e.n_ratings) for e in lex}
    assert got == {
        ("weaponry", "knife"): (9.0, 3), ("weaponry", "gun"): (8.0, 2), ("weaponry", "rifl"): (5.5, 2),
        ("weaponry", "kill"): (3.0, 3), ("murder", "knife"): (6.5, 2),
        ("murder", "slaughter"): (8.333333, 3), ("murder", "kill"): (7.0, 3), ("murder", "last resort"): (8.5, 2),
    }
    assert lex.categories == ("weaponry", "murder")
    assert res.versions[7.0] == filter_by_threshold(lex, 7.0)
    assert res.candidates["weaponry"] == ["knife", "gun", "dagger", "machete", "shiv", "rifle", "blade", "kill"]


def test_empty_expansions_keep_seed_count(toy):
    seeds, _, _, ratings = toy
    res = build_lexicon(seeds, ratings)
    assert res.stages["post_synonym"] == res.stages["post_embedding"] == res.stages["seeds"] == 4


def test_build_report_file(toy, tmp_path):
    seeds, syn, emb, ratings = toy
    rep = build_report(build_lexicon(seeds, ratings, syn, emb, k=2), {"k": 2})
    write_build_report(rep, tmp_path / "r.json")
    back = json.loads((tmp_path / "r.json").read_text())
    assert back["stages"] == TOY_STAGES and back["config"] == {"k": 2}
    assert back["dropped_unknown"] == [["blade", "murder"], ["machete", "weaponry"], ["shiv", "weaponry"]]


def test_expand_synonyms():
    out = expand_synonyms(SeedList("weaponry", ("knife",)), {"knife": ["dagger", "machete", "shiv"]})
    assert out.words == ["knife", "dagger", "machete", "shiv"] and out.skipped == 0
    assert expand_synonyms(["Knife", "gun"], {}).words == ["knife", "gun"]
    shared = expand_synonyms(["a", "b"], {"a": ["x", "y"], "b": ["y", "Z"]})
    assert shared.words == ["a", "b", "x", "y", "z"]
    assert expand_synonyms(["a", "q"], {"a": ["x"]}).skipped == 1


def test_merge_candidates():
    merged = merge_candidates({"weaponry": [["knife", "gun"], ["knife"]], "murder": [["knife"]]})
    assert merged == {"weaponry": ["knife", "gun"], "murder": ["knife"]}
    assert sum(len(v) for v in merged.values()) == 3


def test_seed_list_validation():
    assert SeedList("a", (" Knife ", "")).words == ("knife",)
    with pytest.raises(ValueError):
        SeedList("a", ("", " "))


TOY_VECTORS = {"knife": [1, 0], "dagger": [0.9, 0.1], "gun": [0, 1], "rifle": [0.1, 0.9], "blade": [0.95, 0.05],
               "kill": [0.7, 0.7]}


def test_embedding_top1_brute_force():
    table = EmbeddingTable(list(TOY_VECTORS), np.array(list(TOY_VECTORS.values()), dtype=float))
    for w in TOY_VECTORS:
        assert [n for n, _ in table.neighbours(w, 1)] == cosine_neighbours(TOY_VECTORS, w, 1)
    assert [n for n, _ in table.neighbours("knife", 2)] == ["blade", "dagger"]
    res = expand_embeddings(["knife", "nope"], table, k=1)
    assert res.words == ["blade"] and res.skipped == 1


def test_embedding_ties_lexicographic():
    vocab = {"q": [1, 0], "b": [0, 1], "a": [0, 2], "c": [0, 3]}
    table = EmbeddingTable(list(vocab), np.array(list(vocab.values()), dtype=float))
    assert [n for n, _ in table.neighbours("q", 3)] == ["a", "b", "c"]
    assert [n for n, _ in table.neighbours("b", 2)] == ["a", "c"]


def test_embedding_validation(tmp_path):
    with pytest.raises(ValueError):
        EmbeddingTable(["a", "b"], np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        expand_embeddings(["a"], EmbeddingTable(["a"], np.array([[1.0]])), k=0)
    p = tmp_path / "e.txt"
    p.write_text("a 1 0\nb 1\n")
    with pytest.raises(ValueError, match=":2"):
        load_embeddings(p)
    p.write_text("a 1 x\n")
    with pytest.raises(ValueError, match=":1"):
        load_embeddings(p)


def test_default_k():
    from grievlex.builder import DEFAULT_NEIGHBOURS
    assert DEFAULT_NEIGHBOURS == 10


def rec(pid, word, cat, rating, ok=True):
    return RatingRecord(pid, word, cat, rating, ok)


def test_attention_failure_drops_all_records():
    recs = [rec("p1", "gun", "w", 8), rec("p2", "gun", "w", 2, ok=False), rec("p2", "knife", "w", 1)]
    ing = ingest_ratings(recs)
    assert ing.participants_dropped == 1 and ing.records_dropped_attention == 2
    assert ing.lexicon.get("gun", "w").mean_rating == 8.0
    assert ing.words_dropped_empty == [("knife", "w")]


def test_unknown_boundary_is_inclusive():
    recs = [rec(f"p{i}", "shiv", "w", None) for i in range(4)] + [rec(f"q{i}", "shiv", "w", 7) for i in range(4)]
    recs.append(rec("z", "gun", "w", 5))
    ing = ingest_ratings(recs)
    assert ing.words_dropped_unknown == [("shiv", "w")]
    recs.append(rec("p9", "shiv", "w", 7))  # 4 of 9 unknown: kept
    assert ingest_ratings(recs).lexicon.get("shiv", "w").n_ratings == 5


def test_stem_pooling_flat_mean():
    recs = [rec("a", "kills", "murder", 8), rec("b", "kills", "murder", 6), rec("c", "killing", "murder", 7)]
    e = ingest_ratings(recs).lexicon.get("kill", "murder")
    assert (e.mean_rating, e.n_ratings) == (7.0, 3)


def test_ingest_errors():
    with pytest.raises(BuildError):
        ingest_ratings([rec("a", "x", "w", None)])
    with pytest.raises(ValueError):
        RatingRecord("a", "x", "w", 11)
    with pytest.raises(BuildError):
        ingest_ratings([rec("a", "x", "w", 5)], candidates={"w": ["y"]})


def test_load_ratings_errors(tmp_path):
    head = "participant_id,word,category,rating,unknown,attention_pass\n"
    p = tmp_path / "r.csv"
    for body, line in [("p,w,c,5,true,true\n", 2), ("p,w,c,,false,true\n", 2), ("p,w,c,5,false,maybe\n", 2),
                       ("p,w,c,5,false,true\np,w,c,12,false,true\n", 3)]:
        p.write_text(head + body)
        with pytest.raises(ValueError, match=f":{line}:"):
            load_ratings(p)
    p.write_text("a,b\n")
    with pytest.raises(ValueError, match="header"):
        load_ratings(p)


# property tests

@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6))
def test_neighbours_equal_full_scan(seed, k):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 200))
    distinct = rng.normal(size=(n, 5))
    vecs = distinct.copy()
    dup = rng.integers(0, n, size=n // 10)
    vecs[dup] = vecs[0]  # exact ties
    words = [f"w{i:03d}" for i in range(n)]
    table = EmbeddingTable(words, vecs)
    vocab = dict(zip(words, vecs.tolist()))
    for w in words[:5]:
        assert [x for x, _ in table.neighbours(w, k)] == cosine_neighbours(vocab, w, k)
    # rescaling rows perturbs exact ties in the last bit, so check on distinct vectors
    table = EmbeddingTable(words, distinct)
    scaled = EmbeddingTable(words, distinct * rng.uniform(0.1, 10, size=(n, 1)))
    for w in words[:5]:
        assert [x for x, _ in scaled.neighbours(w, k)] == [x for x, _ in table.neighbours(w, k)]


def test_neighbours_full_scan_1000_words():
    rng = np.random.default_rng(11)
    vecs = rng.normal(size=(1000, 8))
    words = [f"v{i}" for i in range(1000)]
    table = EmbeddingTable(words, vecs)
    vocab = dict(zip(words, vecs.tolist()))
    for w in words[::97]:
        assert [x for x, _ in table.neighbours(w, 10)] == cosine_neighbours(vocab, w, 10)


WORDS = ["kills", "killing", "kill", "gun", "guns", "knife", "last resort"]
records = st.lists(st.builds(RatingRecord, st.sampled_from(["p1", "p2", "p3", "p4"]), st.sampled_from(WORDS),
                             st.sampled_from(["a", "b"]), st.one_of(st.none(), st.integers(0, 10)),
                             st.booleans()), min_size=1, max_size=40)


@given(records, st.randoms())
def test_ingest_permutation_invariant_and_counts(recs, rnd):
    try:
        base = ingest_ratings(recs)
    except BuildError:
        return
    shuffled = list(recs)
    rnd.shuffle(shuffled)
    assert ingest_ratings(shuffled).lexicon == base.lexicon
    failed = {r.participant_id for r in recs if not r.attention_pass}
    kept = [r for r in recs if r.participant_id not in failed]
    dropped = set(base.words_dropped_unknown)
    from grievlex.textprep import stem_phrase
    for e in base.lexicon:
        survivors = [r for r in kept if r.category == e.category and stem_phrase(r.word) == e.key
                     and (r.word, r.category) not in dropped and r.rating is not None]
        assert e.n_ratings == len(survivors)
        assert e.mean_rating == round(sum(r.rating for r in survivors) / len(survivors), 6)
