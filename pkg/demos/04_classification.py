# %% [markdown]
# # Telling target documents from control documents
#
# A Gaussian naive Bayes model is fitted on category scores. In the
# bootstrap protocol every iteration down-samples the control group to
# the target size, makes a stratified 80/20 split, fits, and evaluates.
# Features are then ranked by how well each one alone separates the
# classes: max(AUC, 1 - AUC).

# %%
import numpy as np

from grievlex.classifier import (
    FeatureTable, Metrics, bootstrap_classify, cross_sample_classify, dumps_importance, dumps_metrics,
    roc_importance,
)

features = ["weaponry", "murder", "hate", "loneliness"]
rng = np.random.default_rng(0)


def side(n, means, label, prefix):
    X = rng.normal(means, 1.0, size=(n, len(features)))
    return FeatureTable([f"{prefix}{i}" for i in range(n)], features, X, [label] * n)


target = side(200, [1.5, 1.0, 0.2, 0.0], 1, "t")
control = side(1000, [0.0, 0.0, 0.0, 0.0], 0, "c")
result = bootstrap_classify(target, control, iterations=100, seed=42)
print(dumps_metrics([("task1", "grievance", result, result.iterations, result.seed)]))

# %% [markdown]
# Undefined rates (a zero denominator, such as precision when nothing is
# predicted positive) are skipped in the mean and counted separately.

# %%
print(Metrics(tp=9, fp=1, tn=8, fn=2).as_dict())
print(result.undefined)

# %%
pooled = FeatureTable(target.row_ids + control.row_ids, features,
                      np.vstack([target.X, control.X]), np.r_[target.y, control.y])
print(dumps_importance(roc_importance(pooled)))

# %% [markdown]
# Cross-sample testing trains on one pair of corpora and tests on another
# with the same feature columns. Here the second sample has a weaker
# signal, so accuracy drops.

# %%
t2, c2 = side(150, [0.5, 0.3, 0.0, 0.0], 1, "u"), side(150, [0.0] * 4, 0, "v")
test = FeatureTable(t2.row_ids + c2.row_ids, features, np.vstack([t2.X, c2.X]), np.r_[t2.y, c2.y])
print(cross_sample_classify(pooled, test).as_dict())
