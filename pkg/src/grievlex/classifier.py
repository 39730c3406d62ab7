"""Gaussian Naive Bayes over category scores, evaluation and ROC feature importance.

Class 1 is the positive (target) class, e.g. manifesto excerpts or
abusive texts; class 0 is the control class.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .scorer import ScoreTable

DEFAULT_SPLIT = 0.8
VAR_SMOOTHING = 1e-9
METRIC_NAMES = ("accuracy", "specificity", "precision", "recall")


@dataclass
class FeatureTable:
    row_ids: list[str]
    features: list[str]
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=float).reshape(len(self.row_ids), len(self.features))
        self.y = np.asarray(self.y, dtype=int).reshape(len(self.row_ids))
        if np.isnan(self.X).any():
            raise ValueError("feature table has missing cells")
        if not np.isin(self.y, (0, 1)).all():
            raise ValueError("labels must be 0 (control) or 1 (target)")

    def __len__(self) -> int:
        return len(self.row_ids)

    def take(self, rows) -> "FeatureTable":
        rows = np.asarray(rows, dtype=int)
        return FeatureTable([self.row_ids[i] for i in rows], list(self.features), self.X[rows], self.y[rows])

    @classmethod
    def from_tables(cls, target: ScoreTable, control: ScoreTable, features: Sequence[str] | None = None) -> "FeatureTable":
        """Stack a target table (label 1) over a control table (label 0)."""
        features = list(target.columns if features is None else features)
        t, c = target.select(features), control.select(features)
        return cls(t.doc_ids + c.doc_ids, features, np.vstack([t.values, c.values]),
                   np.r_[np.ones(len(t), dtype=int), np.zeros(len(c), dtype=int)])


def join_tables(a: ScoreTable, b: ScoreTable) -> ScoreTable:
    """Column union of two score tables over the same documents (rows follow ``a``)."""
    clash = set(a.columns) & set(b.columns)
    if clash:
        raise ValueError(f"feature names occur in both tables: {sorted(clash)}")
    b = b.align(a.doc_ids)
    return ScoreTable(list(a.doc_ids), a.columns + b.columns, np.hstack([a.values, b.values]), a.token_counts,
                      None, a.mode)


@dataclass
class GnbModel:
    features: list[str]
    classes: tuple[int, ...]
    priors: np.ndarray       # (n_classes,)
    means: np.ndarray        # (n_classes, n_features)
    variances: np.ndarray    # (n_classes, n_features)
    variance_floor: float


def gnb_fit(table: FeatureTable) -> GnbModel:
    """Per-class sample means and variances plus a shared variance floor.

    The floor is 1e-9 times the largest per-feature variance over the
    whole table and is added to every class variance.
    """
    classes = (0, 1)
    for c in classes:
        if (table.y == c).sum() < 2:
            raise ValueError(f"class {c} needs at least 2 training rows, has {(table.y == c).sum()}")
    X = table.X
    floor = VAR_SMOOTHING * float(X.var(axis=0, ddof=1).max()) if X.shape[1] else 0.0
    if floor <= 0:
        floor = VAR_SMOOTHING
    means = np.array([X[table.y == c].mean(axis=0) for c in classes])
    variances = np.array([X[table.y == c].var(axis=0, ddof=1) for c in classes]) + floor
    priors = np.array([(table.y == c).mean() for c in classes])
    return GnbModel(list(table.features), classes, priors, means, variances, floor)


def _log_joint(model: GnbModel, X: np.ndarray) -> np.ndarray:
    # (n_rows, n_classes): log prior + sum of log Gaussian densities
    X = np.atleast_2d(X)
    out = np.empty((X.shape[0], len(model.classes)))
    for k in range(len(model.classes)):
        var = model.variances[k]
        ll = -0.5 * (np.log(2 * np.pi * var) + (X - model.means[k]) ** 2 / var)
        out[:, k] = math.log(model.priors[k]) + ll.sum(axis=1)
    return out


def _decide(log_joint: np.ndarray) -> np.ndarray:
    # ties go to the positive class
    return (log_joint[:, 1] >= log_joint[:, 0]).astype(int)


def gnb_predict(model: GnbModel, row: Mapping[str, float] | Sequence[float]) -> tuple[int, dict[int, float]]:
    """Predicted class and the per-class log joint density (log prior + log likelihood)."""
    if isinstance(row, Mapping):
        missing = [f for f in model.features if f not in row]
        if missing:
            raise ValueError(f"row lacks features {missing}")
        x = np.array([row[f] for f in model.features], dtype=float)
    else:
        x = np.asarray(row, dtype=float)
        if x.shape != (len(model.features),):
            raise ValueError(f"row has {x.size} values, model expects {len(model.features)}")
    lj = _log_joint(model, x)
    return int(_decide(lj)[0]), {c: float(lj[0, k]) for k, c in enumerate(model.classes)}


def gnb_predict_table(model: GnbModel, table: FeatureTable) -> np.ndarray:
    if table.features != model.features:
        raise ValueError("feature columns differ from the model's")
    return _decide(_log_joint(model, table.X))


@dataclass(frozen=True)
class Metrics:
    """Confusion counts and derived rates; ``None`` marks a zero denominator."""

    tp: int
    fp: int
    tn: int
    fn: int

    @staticmethod
    def _ratio(num: int, den: int) -> float | None:
        return num / den if den else None

    @property
    def accuracy(self) -> float | None:
        return self._ratio(self.tp + self.tn, self.tp + self.fp + self.tn + self.fn)

    @property
    def specificity(self) -> float | None:
        return self._ratio(self.tn, self.tn + self.fp)

    @property
    def precision(self) -> float | None:
        return self._ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float | None:
        return self._ratio(self.tp, self.tp + self.fn)

    def as_dict(self) -> dict[str, float | None]:
        return {m: getattr(self, m) for m in METRIC_NAMES}

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "Metrics":
        y_true = np.asarray(y_true, dtype=int)
        y_pred = np.asarray(y_pred, dtype=int)
        return cls(int(((y_pred == 1) & (y_true == 1)).sum()), int(((y_pred == 1) & (y_true == 0)).sum()),
                   int(((y_pred == 0) & (y_true == 0)).sum()), int(((y_pred == 0) & (y_true == 1)).sum()))


def evaluate(model: GnbModel, test: FeatureTable) -> Metrics:
    if len(test) == 0:
        raise ValueError("empty test table")
    return Metrics.from_predictions(test.y, gnb_predict_table(model, test))


@dataclass
class MeanMetrics:
    """Metrics averaged over bootstrap iterations, skipping undefined values."""

    accuracy: float | None
    specificity: float | None
    precision: float | None
    recall: float | None
    iterations: int
    seed: int | None
    undefined: dict[str, int] = field(default_factory=dict)
    per_iteration: list[Metrics] = field(default_factory=list, repr=False)

    def as_dict(self) -> dict[str, float | None]:
        return {m: getattr(self, m) for m in METRIC_NAMES}

    @classmethod
    def of(cls, runs: Sequence[Metrics], seed: int | None) -> "MeanMetrics":
        means, undefined = {}, {}
        for name in METRIC_NAMES:
            vals = [getattr(m, name) for m in runs]
            ok = [v for v in vals if v is not None]
            undefined[name] = len(vals) - len(ok)
            means[name] = float(np.mean(ok)) if ok else None
        return cls(**means, iterations=len(runs), seed=seed, undefined=undefined, per_iteration=list(runs))


def stratified_split(y: np.ndarray, split: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Shuffle each class separately and put ``split`` of it in the training part."""
    train, test = [], []
    for c in (0, 1):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(len(idx))]
        n_train = int(round(split * len(idx)))
        if n_train < 2 or n_train >= len(idx):
            raise ValueError(f"class {c} with {len(idx)} rows cannot be split {split:g}/{1 - split:g} "
                             "with >= 2 training rows and >= 1 test row")
        train.append(idx[:n_train])
        test.append(idx[n_train:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def _classify_iteration(target: FeatureTable, control: FeatureTable, seed: int, it: int, split: float) -> Metrics:
    rng = np.random.default_rng([seed, it])
    rows = np.sort(rng.choice(len(control), size=len(target), replace=False))
    sub = control.take(rows)
    both = FeatureTable(target.row_ids + sub.row_ids, target.features, np.vstack([target.X, sub.X]),
                        np.r_[np.ones(len(target), dtype=int), np.zeros(len(sub), dtype=int)])
    train, test = stratified_split(both.y, split, rng)
    model = gnb_fit(both.take(train))
    return evaluate(model, both.take(test))


def bootstrap_classify(target: FeatureTable, control: FeatureTable, iterations: int = 100, seed: int = 42,
                       split: float = DEFAULT_SPLIT, workers: int = 1) -> MeanMetrics:
    """Down-sample the control rows to the target size, split, fit and evaluate; repeat.

    Each iteration uses its own generator seeded with ``(seed, iteration)``
    for both the down-sampling and the stratified split. Labels in the
    input tables are ignored: every target row is positive and every
    control row negative.
    """
    if target.features != control.features:
        raise ValueError("target and control feature columns differ")
    if len(control) < len(target):
        raise ValueError(f"control ({len(control)} rows) is smaller than target ({len(target)} rows)")
    if not 0 < split < 1:
        raise ValueError("split must lie strictly between 0 and 1")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    run = lambda it: _classify_iteration(target, control, seed, it, split)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(run, range(iterations)))
    else:
        runs = [run(it) for it in range(iterations)]
    return MeanMetrics.of(runs, seed)


def holdout_classify(table: FeatureTable, seed: int = 42, split: float = DEFAULT_SPLIT) -> Metrics:
    """One stratified train/test split, for balanced tasks that skip down-sampling."""
    train, test = stratified_split(table.y, split, np.random.default_rng([seed, 0]))
    return evaluate(gnb_fit(table.take(train)), table.take(test))


def cross_sample_classify(train: FeatureTable, test: FeatureTable) -> Metrics:
    """Fit on all of ``train`` and evaluate on all of ``test``."""
    if train.features != test.features:
        raise ValueError(f"feature columns differ: {train.features} vs {test.features}")
    return evaluate(gnb_fit(train), test)


@dataclass(frozen=True)
class FeatureImportance:
    feature: str
    auc: float
    importance: float
    rank: int


def _mann_whitney(values, labels) -> tuple[float, int]:
    """U statistic of the positive class (midranks for ties) and the pair count."""
    values = np.asarray(values, dtype=float)
    labels = np.asarray(labels, dtype=int)
    pos = labels == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("both classes must be present")
    ranks = rankdata(values, method="average")
    # half-integer sums below 2**52 are exact in floating point
    return float(ranks[pos].sum() - n_pos * (n_pos + 1) / 2), n_pos * n_neg


def auc_score(values: np.ndarray, labels: np.ndarray) -> float:
    """Area under the ROC curve via the Mann-Whitney statistic with midranks."""
    u, pairs = _mann_whitney(values, labels)
    return u / pairs


def roc_importance(table: FeatureTable) -> list[FeatureImportance]:
    """Rank features by max(AUC, 1 - AUC), descending; ties broken by name."""
    if len(set(table.y.tolist())) < 2:
        raise ValueError("roc_importance needs both classes")
    scored = []
    for j, name in enumerate(table.features):
        u, pairs = _mann_whitney(table.X[:, j], table.y)
        # 1 - AUC from the complementary count, so it is rounded once like AUC
        auc, flipped = u / pairs, (pairs - u) / pairs
        scored.append((name, auc, max(auc, flipped)))
    scored.sort(key=lambda s: (-s[2], s[0]))
    return [FeatureImportance(name, auc, imp, i + 1) for i, (name, auc, imp) in enumerate(scored)]


def _f(x: float | None) -> str:
    return "NA" if x is None else f"{x:.6f}"


def dumps_metrics(rows: Sequence[tuple[str, str, Metrics | MeanMetrics, int, int | None]],
                  comment: str | None = None) -> str:
    """Rows of ``(task, feature_set, metrics, iterations, seed)``."""
    buf = io.StringIO()
    if comment:
        for line in comment.splitlines():
            buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["task", "feature_set", *METRIC_NAMES, "iterations", "seed"])
    for task, fset, m, iters, seed in rows:
        d = m.as_dict()
        w.writerow([task, fset, *(_f(d[k]) for k in METRIC_NAMES), iters, "" if seed is None else seed])
    return buf.getvalue()


def dumps_importance(ranking: Sequence[FeatureImportance], comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        for line in comment.splitlines():
            buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["feature", "auc", "importance", "rank"])
    for fi in ranking:
        w.writerow([fi.feature, f"{fi.auc:.6f}", f"{fi.importance:.6f}", fi.rank])
    return buf.getvalue()
