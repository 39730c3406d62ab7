"""Internal consistency of categories and correlations between score tables."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .lexicon import Lexicon
from .scorer import ScoreTable, WordOccurrenceMatrix, word_occurrence_matrix
from .textprep import Corpus

Z_975 = float(stats.norm.ppf(0.975))


class AlphaUndefinedError(ValueError):
    pass


@dataclass(frozen=True)
class AlphaResult:
    alpha: float
    items_used: int
    items_dropped: int


def alpha_detail(matrix: WordOccurrenceMatrix | np.ndarray) -> AlphaResult:
    """Raw Cronbach's alpha after removing zero-variance items.

    Rows are observations (documents), columns are items (words).
    """
    x = np.asarray(matrix.values if isinstance(matrix, WordOccurrenceMatrix) else matrix, dtype=float)
    if x.ndim != 2:
        raise ValueError("expected a 2-D documents x items matrix")
    n = x.shape[0]
    if n < 2:
        raise AlphaUndefinedError(f"need at least 2 observations, got {n}")
    item_var = x.var(axis=0, ddof=1)
    # constant columns are tested exactly; their computed variance can be a rounding speck
    keep = np.ptp(x, axis=0) > 0
    k = int(keep.sum())
    dropped = x.shape[1] - k
    if k < 2:
        raise AlphaUndefinedError(f"need at least 2 items with non-zero variance, got {k}")
    total_var = x[:, keep].sum(axis=1).var(ddof=1)
    if total_var <= 0:
        raise AlphaUndefinedError("variance of item totals is zero")
    alpha = k / (k - 1) * (1.0 - item_var[keep].sum() / total_var)
    return AlphaResult(float(alpha), k, dropped)


def cronbach_alpha(matrix: WordOccurrenceMatrix | np.ndarray) -> float:
    """alpha = k/(k-1) * (1 - sum of item variances / variance of row totals).

    Sample variances (N-1). Items that never vary are excluded first;
    :func:`alpha_detail` reports how many.
    """
    return alpha_detail(matrix).alpha


@dataclass
class AlphaReport:
    category: str
    per_corpus_alpha: dict[str, float]
    mean_alpha: float
    items_used: dict[str, int]
    items_dropped: dict[str, int]
    undefined: dict[str, str] = field(default_factory=dict)


def alpha_suite(corpora: Sequence[Corpus], lex: Lexicon, categories: Sequence[str] | None = None) -> list[AlphaReport]:
    """Alpha for each category in each corpus, then the unweighted mean over corpora.

    A corpus where alpha is undefined for a category is left out of that
    category's mean and recorded in ``undefined``.
    """
    if not corpora:
        raise ValueError("alpha_suite needs at least one corpus")
    names = [c.name for c in corpora]
    if len(set(names)) != len(names):
        raise ValueError(f"corpus names must be unique: {names}")
    categories = list(lex.categories if categories is None else categories)
    reports = []
    for cat in categories:
        per, used, dropped, bad = {}, {}, {}, {}
        for corpus in corpora:
            wom = word_occurrence_matrix(corpus, lex, cat)
            try:
                res = alpha_detail(wom)
            except AlphaUndefinedError as exc:
                bad[corpus.name] = str(exc)
                dropped[corpus.name] = int((np.ptp(wom.values, axis=0) == 0).sum()) if len(wom.doc_ids) > 1 else len(wom.keys)
                used[corpus.name] = len(wom.keys) - dropped[corpus.name]
                continue
            per[corpus.name] = res.alpha
            used[corpus.name] = res.items_used
            dropped[corpus.name] = res.items_dropped
        mean = float(np.mean(list(per.values()))) if per else math.nan
        reports.append(AlphaReport(cat, per, mean, used, dropped, bad))
    return reports


def dumps_alpha_reports(reports: Sequence[AlphaReport], corpus_names: Sequence[str], comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        for line in comment.splitlines():
            buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["category", *corpus_names, "mean_alpha", "items_dropped_total"])
    for r in reports:
        cells = [_fmt(r.per_corpus_alpha.get(n, math.nan)) for n in corpus_names]
        w.writerow([r.category, *cells, _fmt(r.mean_alpha), sum(r.items_dropped.values())])
    return buf.getvalue()


def _fmt(x: float) -> str:
    return "NA" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.6f}"


@dataclass(frozen=True)
class CorrelationPair:
    category_a: str
    category_b: str
    r: float
    ci_low: float
    ci_high: float
    p: float
    n: int

    @property
    def defined(self) -> bool:
        return not math.isnan(self.r)


@dataclass
class CorrelationReport:
    pairs: list[CorrelationPair]
    bonferroni_threshold: float

    def significant(self, pair: CorrelationPair) -> bool:
        return pair.defined and pair.p < self.bonferroni_threshold

    def strongest(self, category_a: str, top: int = 3) -> list[CorrelationPair]:
        cands = [p for p in self.pairs if p.category_a == category_a and p.defined]
        return sorted(cands, key=lambda p: (-abs(p.r), p.category_b))[:top]


def pearson(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    """Pearson r with a Fisher-z 95% interval and two-sided p.

    Returns NaNs when either variable is constant.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        return math.nan, math.nan, math.nan, math.nan
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = min(1.0, max(-1.0, r))
    if abs(r) == 1.0:
        return r, r, r, 0.0
    z = math.atanh(r)
    half = Z_975 / math.sqrt(n - 3)
    lo, hi = math.tanh(z - half), math.tanh(z + half)
    t = r * math.sqrt((n - 2) / (1 - r * r))
    p = float(2 * stats.t.sf(abs(t), n - 2))
    return r, min(lo, r), max(hi, r), p


def cross_correlate(scores_a: ScoreTable, scores_b: ScoreTable, alpha: float = 0.05) -> CorrelationReport:
    """Correlate every column of ``scores_a`` with every column of ``scores_b``.

    Rows are paired by document id. The significance threshold is
    ``alpha`` divided by the number of ``scores_a`` columns.
    """
    if set(scores_a.doc_ids) != set(scores_b.doc_ids):
        raise ValueError("score tables must cover the same document ids")
    b = scores_b.align(scores_a.doc_ids)
    n = len(scores_a)
    if n < 4:
        raise ValueError(f"need at least 4 shared documents, got {n}")
    pairs = []
    for i, ca in enumerate(scores_a.columns):
        for j, cb in enumerate(b.columns):
            r, lo, hi, p = pearson(scores_a.values[:, i], b.values[:, j])
            pairs.append(CorrelationPair(ca, cb, r, lo, hi, p, n))
    return CorrelationReport(pairs, alpha / len(scores_a.columns))


def dumps_correlations(report: CorrelationReport, comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        for line in comment.splitlines():
            buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cat_a", "cat_b", "r", "ci_low", "ci_high", "p", "significant"])
    for p in report.pairs:
        sig = "NA" if not p.defined else str(report.significant(p)).lower()
        w.writerow([p.category_a, p.category_b, _fmt(p.r), _fmt(p.ci_low), _fmt(p.ci_high),
                    "NA" if math.isnan(p.p) else f"{p.p:.6g}", sig])
    return buf.getvalue()
