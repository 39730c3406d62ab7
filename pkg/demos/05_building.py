# %% [markdown]
# # Building a lexicon from seeds and ratings
#
# Seed words per category are widened in two steps: synonyms from a
# mapping file, then the k nearest neighbours of each seed in a word
# embedding (cosine similarity, ties broken alphabetically). Candidate
# words go out for rating. Ingestion then:
#
# 1. drops every rating from participants who failed an attention check,
# 2. drops words that half or more of the remaining raters did not know,
# 3. stems words and pools ratings that share a stem within a category,
# 4. keeps the mean rating and the number of ratings per stem.
#
# This walk-through uses the toy inputs shipped with the tests.

# %%
import json
from pathlib import Path

from grievlex.builder import (
    build_lexicon, build_report, expand_embeddings, expand_synonyms, load_embeddings, load_ratings, load_seeds,
    load_synonyms,
)
from grievlex.lexicon import dumps_lexicon

toy = Path(__file__).resolve().parent.parent / "tests" / "data" / "build"
seeds = load_seeds(toy / "seeds.tsv")
synonyms = load_synonyms(toy / "synonyms.tsv")
embeddings = load_embeddings(toy / "embeddings.txt")
ratings = load_ratings(toy / "ratings.csv")
for s in seeds:
    print(s.category, s.words)

# %%
print(expand_synonyms(seeds[0], synonyms))
print(embeddings.neighbours("knife", 3))
print(expand_embeddings(seeds[0].words, embeddings, k=2))

# %%
result = build_lexicon(seeds, ratings, synonyms, embeddings, k=2, thresholds=(7.0, 5.0))
print(dumps_lexicon(result.weighted))
for theta, lex in result.versions.items():
    print(f"threshold {theta:g}: {len(lex)} entries")

# %% [markdown]
# The report records how many words survive each stage, overall and per
# category, and which words were dropped as unknown.

# %%
print(json.dumps(build_report(result, {"k": 2}), indent=2))
