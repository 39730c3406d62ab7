# %% [markdown]
# # Scoring documents with a lexicon
#
# A lexicon maps stemmed words and phrases to categories, each with the
# mean crowd rating (0-10) of how well the word fits. Scoring a document
# counts category matches. Proportional scores divide by the token count;
# weighted scores average the ratings of whatever matched.

# %%
from grievlex.lexicon import Lexicon, LexiconEntry, dumps_lexicon, filter_by_threshold
from grievlex.scorer import match, score_corpus, word_occurrence_matrix
from grievlex.textprep import Corpus, Document, stem_phrase

rows = [
    ("weaponry", "knife", 9.0), ("weaponry", "gun", 8.0), ("weaponry", "rifle", 5.5),
    ("murder", "kill", 7.0), ("murder", "last resort", 8.5), ("murder", "resort", 6.0),
    ("loneliness", "alone", 7.5),
]
lex = Lexicon.from_entries([LexiconEntry(c, stem_phrase(w), r, 3) for c, w, r in rows])
print(dumps_lexicon(lex))

# %% [markdown]
# Keys are stored as stems, so "killing" and "kills" both hit `kill`.
# Phrases win over the words inside them: in "as a last resort" the
# phrase claims `resort` and the unigram `resort` does not fire again.

# %%
doc = Document("d1", "As a last resort, I will kill. Killing is all I have left, alone.")
print(doc.tokens)
for cat, key, n in match(doc, lex):
    print(f"{cat:<11} {key:<12} x{n}")

# %%
corpus = Corpus((
    doc,
    Document("d2", "The gun and the knife were on the table."),
    Document("d3", "Nothing to see here at all."),
), "demo")
prop = score_corpus(corpus, lex)
weighted = score_corpus(corpus, lex, "weighted")
for i, doc_id in enumerate(prop.doc_ids):
    print(doc_id, dict(zip(prop.columns, prop.values[i].round(4))), dict(zip(weighted.columns, weighted.values[i])))

# %% [markdown]
# The per-word occurrence matrix splits a category score into its words;
# each row sums back to the proportional score.

# %%
wom = word_occurrence_matrix(corpus, lex, "murder")
print(wom.keys)
print(wom.values.round(4))
print(wom.values.sum(axis=1), prop.values[:, prop.columns.index("murder")])

# %% [markdown]
# Thresholded versions keep only entries rated at or above a cut-off.

# %%
strict = filter_by_threshold(lex, 7)
print(len(lex), "->", len(strict), [e.key for e in strict])
