# %% [markdown]
# # Comparing a target corpus with a control corpus
#
# The control group is usually much larger. Each bootstrap iteration
# draws, without replacement, as many control documents as there are
# target documents, then computes Welch's t, Cohen's d and a default
# (JZS) Bayes factor per category. The report averages over iterations
# and gives a 2.5/97.5 percentile interval for d.

# %%
import math

import numpy as np

from grievlex.inferstats import (
    SampleStats, bootstrap_compare, cohen_d, dumps_comparison, format_bf, jzs_bayes_factor, paired_compare,
    welch_t,
)
from grievlex.scorer import ScoreTable

a, b = SampleStats(10, 1.5, 1.0), SampleStats(10, 1.0, 1.0)
print(welch_t(a, b), cohen_d(a, b))

# %% [markdown]
# The Bayes factor integrates over the Cauchy prior on effect size; it
# stays finite in log space even when BF10 overflows a float.

# %%
for t in (0.0, 1.0, 2.0, 3.0, 5.0):
    bf = jzs_bayes_factor(t, 50, 50)
    print(f"t={t:<4} BF10={format_bf(bf.bf10):>8}  log BF10={bf.log_bf10:8.3f}")
print(jzs_bayes_factor(80, 400, 400).log_bf10, "(log scale only)")

# %%
rng = np.random.default_rng(3)
cats = ["weaponry", "murder", "loneliness"]
shift = np.array([0.004, 0.0, 0.0])  # only weaponry differs
target = ScoreTable([f"t{i}" for i in range(120)], cats, np.abs(rng.normal(0.01 + shift, 0.006, (120, 3))))
control = ScoreTable([f"c{i}" for i in range(900)], cats, np.abs(rng.normal(0.01, 0.006, (900, 3))))
reports = bootstrap_compare(target, control, iterations=100, seed=42)
print(dumps_comparison(reports))

# %% [markdown]
# Dependent samples (the same authors before and after an event, say)
# are paired by document id and tested on the differences.

# %%
before = ScoreTable([f"u{i}" for i in range(40)], cats, rng.gamma(2, 0.005, (40, 3)))
after = ScoreTable(before.doc_ids, cats, before.values + rng.normal([0.003, 0, 0], 0.004, (40, 3)))
for r in paired_compare(after, before):
    print(f"{r.category:<11} d={r.d_mean:+.3f}  t={r.t_mean:+.2f}  BF10={format_bf(r.bf_mean)}")
