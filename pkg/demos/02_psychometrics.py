# %% [markdown]
# # Internal consistency and cross-lexicon correlation
#
# Cronbach's alpha treats each word of a category as an item and each
# document as a respondent, using the per-word proportional occurrence.
# Words that never vary in a corpus carry no information and are dropped.

# %%
import random

import numpy as np

from grievlex.lexicon import Lexicon, LexiconEntry
from grievlex.psychometrics import alpha_suite, cronbach_alpha, cross_correlate, dumps_alpha_reports
from grievlex.scorer import score_corpus
from grievlex.textprep import Corpus, Document

m = np.array([[1, 2, 3], [2, 2, 4], [3, 5, 4], [4, 4, 6]], dtype=float)
print("alpha of a 4x3 matrix:", cronbach_alpha(m))

# %% [markdown]
# Two synthetic corpora in which threat vocabulary rises and falls
# together within a document, so alpha should come out positive.

# %%
words = {"weaponry": ["gun", "knife", "rifl", "bomb"], "murder": ["kill", "slaughter", "murder"]}
lex = Lexicon.from_entries([LexiconEntry(c, w, 8.0, 1) for c, ws in words.items() for w in ws])
filler = ["the", "a", "and", "day", "went", "home", "we", "it"]


def corpus(name, seed, n=150):
    rng = random.Random(seed)
    docs = []
    for i in range(n):
        heat = rng.random()  # one latent level per document
        toks = [rng.choice(words["weaponry"] + words["murder"]) if rng.random() < heat * 0.3 else rng.choice(filler)
                for _ in range(80)]
        docs.append(Document.from_tokens(f"{name}{i}", toks))
    return Corpus(tuple(docs), name)


corpora = [corpus("forum", 1), corpus("news", 2)]
reports = alpha_suite(corpora, lex)
print(dumps_alpha_reports(reports, [c.name for c in corpora]))

# %% [markdown]
# Correlating two lexicons' scores on the same documents. With many
# category pairs a Bonferroni threshold of 0.05 / (number of categories in
# the first table) marks the significant ones.

# %%
a = score_corpus(corpora[0], lex)
other = Lexicon.from_entries([LexiconEntry("threat", w, 8.0, 1) for w in ["gun", "kill", "bomb"]]
                             + [LexiconEntry("calm", w, 8.0, 1) for w in ["home", "day"]])
b = score_corpus(corpora[0], other)
rep = cross_correlate(a, b)
print("threshold", rep.bonferroni_threshold)
for p in rep.pairs:
    print(f"{p.category_a:<9} {p.category_b:<6} r={p.r:+.3f} [{p.ci_low:+.3f}, {p.ci_high:+.3f}] "
          f"p={p.p:.2g} {'*' if rep.significant(p) else ''}")
