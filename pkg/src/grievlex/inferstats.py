"""Group comparisons of score tables: t statistics, Cohen's d and JZS Bayes factors.

The independent-samples comparison down-samples the larger control table
to the size of the target table many times (without replacement) and
averages the statistics across iterations. The dependent-samples
comparison pairs documents by id and runs once.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate, optimize, stats

from .scorer import ScoreTable

DEFAULT_BF_SCALE = math.sqrt(2) / 2
DEFAULT_ITERATIONS = 100
Z_975 = float(stats.norm.ppf(0.975))


class DegenerateError(ValueError):
    pass


class NumericalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SampleStats:
    n: int
    mean: float
    sd: float

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"need n >= 2, got {self.n}")
        if not self.sd >= 0:
            raise ValueError(f"sd must be non-negative, got {self.sd}")

    @classmethod
    def of(cls, x) -> "SampleStats":
        x = np.asarray(x, dtype=float)
        return cls(len(x), float(x.mean()), float(x.std(ddof=1)))


class TTest(NamedTuple):
    t: float
    df: float
    p: float


def welch_t(a: SampleStats, b: SampleStats) -> TTest:
    """Welch's unequal-variance t test, two-sided."""
    va, vb = a.sd ** 2 / a.n, b.sd ** 2 / b.n
    se2 = va + vb
    if se2 == 0:
        if a.mean == b.mean:
            return TTest(0.0, float(a.n + b.n - 2), 1.0)
        raise DegenerateError("both samples have zero variance but different means")
    t = (a.mean - b.mean) / math.sqrt(se2)
    df = se2 ** 2 / (va ** 2 / (a.n - 1) + vb ** 2 / (b.n - 1)) if va or vb else float(a.n + b.n - 2)
    p = float(2 * stats.t.sf(abs(t), df))
    return TTest(t, df, p)


def _pooled_sd(a: SampleStats, b: SampleStats) -> float:
    return math.sqrt(((a.n - 1) * a.sd ** 2 + (b.n - 1) * b.sd ** 2) / (a.n + b.n - 2))


def student_t(a: SampleStats, b: SampleStats) -> TTest:
    """Pooled-variance two-sample t; the statistic the two-sample JZS Bayes factor assumes."""
    sp = _pooled_sd(a, b)
    df = a.n + b.n - 2
    if sp == 0:
        if a.mean == b.mean:
            return TTest(0.0, float(df), 1.0)
        raise DegenerateError("both samples have zero variance but different means")
    t = (a.mean - b.mean) / (sp * math.sqrt(1 / a.n + 1 / b.n))
    return TTest(t, float(df), float(2 * stats.t.sf(abs(t), df)))


class EffectSize(NamedTuple):
    d: float
    ci: tuple[float, float]


def cohen_d(a: SampleStats, b: SampleStats) -> EffectSize:
    """Standardized mean difference with pooled SD and a normal-approximation 95% CI."""
    sp = _pooled_sd(a, b)
    if sp == 0:
        raise DegenerateError("pooled standard deviation is zero")
    d = (a.mean - b.mean) / sp
    n = a.n + b.n
    se = math.sqrt(n / (a.n * b.n) + d * d / (2 * n))
    return EffectSize(d, (d - Z_975 * se, d + Z_975 * se))


class BayesFactor(NamedTuple):
    bf10: float
    log_bf10: float


def _log_integrand(u: np.ndarray | float, t: float, n_eff: float, df: float, r: float):
    # Cauchy(0, r) on effect size written as a normal mixture over g ~ InvGamma(1/2, 1/2),
    # integrated on u = log g.
    g = np.exp(u)
    a = 1.0 + n_eff * g * r * r
    return (-0.5 * np.log(a)
            - (df + 1) / 2 * np.log1p(t * t / (a * df))
            - 0.5 * math.log(2 * math.pi) - 0.5 * u - 1.0 / (2 * g))


def jzs_bayes_factor(t: float, n_a: int, n_b: int | None = None, r: float = DEFAULT_BF_SCALE,
                     rtol: float = 1e-6) -> BayesFactor:
    """Default (JZS) Bayes factor BF10 for a t statistic.

    Two-sample design when ``n_b`` is given, otherwise one-sample/paired
    with ``n_a`` observations. ``r`` is the scale of the Cauchy prior on
    the standardized effect size. The log Bayes factor is exact even when
    BF10 itself overflows.
    """
    if not math.isfinite(t):
        raise ValueError(f"t must be finite, got {t}")
    if n_b is None:
        if n_a < 2:
            raise ValueError("need at least 2 observations")
        n_eff, df = float(n_a), float(n_a - 1)
    else:
        if n_a < 2 or n_b < 2:
            raise ValueError("need at least 2 observations per group")
        n_eff, df = n_a * n_b / (n_a + n_b), float(n_a + n_b - 2)
    if r <= 0:
        raise ValueError("prior scale must be positive")

    h = lambda u: float(_log_integrand(u, t, n_eff, df, r))
    grid = np.arange(-30.0, 60.0, 0.5)
    vals = _log_integrand(grid, t, n_eff, df, r)
    i = int(np.argmax(vals))
    res = optimize.minimize_scalar(lambda u: -h(u), bounds=(grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]),
                                   method="bounded", options={"xatol": 1e-10})
    u_star = float(res.x)
    h_star = h(u_star)

    def edge(step: float) -> float:
        u = u_star
        while h(u) - h_star > -60.0:
            u += step
        return u

    lo, hi = edge(-1.0), edge(1.0)
    f = lambda u: math.exp(h(u) - h_star)
    total, err = 0.0, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        for a, b in ((lo, u_star), (u_star, hi)):
            try:
                val, e = integrate.quad(f, a, b, epsabs=0.0, epsrel=rtol * 1e-3, limit=200)
            except integrate.IntegrationWarning as exc:
                raise NumericalError(f"quadrature did not converge (t={t}, n_eff={n_eff}, df={df}): {exc}") from None
            total += val
            err += e
    if not total > 0 or err > rtol * total:
        raise NumericalError(f"quadrature error {err:.3g} exceeds tolerance for integral {total:.3g} (t={t})")
    log_bf = h_star + math.log(total) + (df + 1) / 2 * math.log1p(t * t / df)
    bf = math.exp(log_bf) if log_bf < 709.0 else math.inf
    return BayesFactor(bf, log_bf)


def format_bf(bf: float, cap: float = 1e3) -> str:
    """Display form used in result tables: values above ``cap`` print as ``>10^3``."""
    if bf > cap:
        return f">10^{int(round(math.log10(cap)))}"
    return f"{bf:.2f}"


@dataclass
class ComparisonReport:
    category: str
    d_mean: float
    d_interval: tuple[float, float]
    t_mean: float
    bf_mean: float
    bf_log_mean: float
    design: str
    iterations: int
    seed: int | None
    degenerate: bool = False


def _iteration_rng(seed: int, iteration: int) -> np.random.Generator:
    return np.random.default_rng([seed, iteration])


def _one_iteration(target: np.ndarray, control: np.ndarray, seed: int, it: int, bf_scale: float):
    rng = _iteration_rng(seed, it)
    rows = rng.choice(control.shape[0], size=target.shape[0], replace=False)
    sub = control[rows]
    out = []
    for j in range(target.shape[1]):
        a = SampleStats.of(target[:, j])
        b = SampleStats.of(sub[:, j])
        try:
            t = welch_t(a, b).t
            d = cohen_d(a, b).d
            bf = jzs_bayes_factor(student_t(a, b).t, a.n, b.n, bf_scale)
        except DegenerateError:
            out.append(None)
            continue
        out.append((d, t, bf.bf10, bf.log_bf10))
    return out


def bootstrap_compare(target: ScoreTable, control: ScoreTable, iterations: int = DEFAULT_ITERATIONS,
                      seed: int = 42, bf_scale: float = DEFAULT_BF_SCALE, workers: int = 1) -> list[ComparisonReport]:
    """Independent-samples comparison with the control down-sampled to the target size.

    Iteration ``i`` draws its subsample from a generator seeded with
    ``(seed, i)``, so the report does not depend on ``workers``. The
    interval is the 2.5/97.5 percentile range of d across iterations.
    """
    if target.columns != control.columns:
        raise ValueError("target and control tables must have the same columns in the same order")
    if len(control) < len(target):
        raise ValueError(f"control ({len(control)} rows) is smaller than target ({len(target)} rows)")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if len(target) < 2:
        raise ValueError("need at least 2 target rows")
    tv, cv = target.values, control.values
    run = lambda it: _one_iteration(tv, cv, seed, it, bf_scale)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(iterations)))
    else:
        results = [run(it) for it in range(iterations)]

    reports = []
    for j, cat in enumerate(target.columns):
        cells = [res[j] for res in results]
        ok = np.array([c for c in cells if c is not None], dtype=float).reshape(-1, 4)
        degenerate = len(ok) < len(cells)
        if len(ok):
            d = ok[:, 0]
            lo, hi = np.percentile(d, [2.5, 97.5])
            rep = ComparisonReport(cat, float(d.mean()), (float(lo), float(hi)), float(ok[:, 1].mean()),
                                   float(ok[:, 2].mean()), float(ok[:, 3].mean()),
                                   "independent-bootstrap", iterations, seed, degenerate)
        else:
            nan = math.nan
            rep = ComparisonReport(cat, nan, (nan, nan), nan, nan, nan, "independent-bootstrap",
                                   iterations, seed, True)
        reports.append(rep)
    return reports


def paired_compare(a: ScoreTable, b: ScoreTable, bf_scale: float = DEFAULT_BF_SCALE,
                   seed: int | None = None) -> list[ComparisonReport]:
    """Dependent-samples comparison of two tables paired by document id.

    d is the mean difference over the SD of the differences, and the
    Bayes factor is the one-sample JZS test on the differences.
    """
    if a.columns != b.columns:
        raise ValueError("paired tables must have the same columns in the same order")
    if set(a.doc_ids) != set(b.doc_ids):
        raise ValueError("paired tables must contain the same document ids")
    b = b.align(a.doc_ids)
    n = len(a)
    if n < 2:
        raise ValueError("need at least 2 pairs")
    diff = a.values - b.values
    reports = []
    for j, cat in enumerate(a.columns):
        x = diff[:, j]
        m, sd = float(x.mean()), float(x.std(ddof=1))
        if sd == 0:
            if m == 0:
                rep = ComparisonReport(cat, 0.0, (0.0, 0.0), 0.0, math.nan, math.nan, "paired", 1, seed, True)
            else:
                nan = math.nan
                rep = ComparisonReport(cat, nan, (nan, nan), nan, nan, nan, "paired", 1, seed, True)
            reports.append(rep)
            continue
        t = m / (sd / math.sqrt(n))
        d = m / sd
        se = math.sqrt(1 / n + d * d / (2 * n))
        bf = jzs_bayes_factor(t, n, r=bf_scale)
        reports.append(ComparisonReport(cat, d, (d - Z_975 * se, d + Z_975 * se), t, bf.bf10, bf.log_bf10,
                                        "paired", 1, seed))
    return reports


def dumps_comparison(reports: Sequence[ComparisonReport], comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        for line in comment.splitlines():
            buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["category", "d_mean", "d_lo", "d_hi", "t_mean", "bf10_mean", "ln_bf10_mean", "iterations", "seed"])
    f6 = lambda x: "NA" if math.isnan(x) else f"{x:.6f}"
    g = lambda x: "NA" if math.isnan(x) else ("inf" if math.isinf(x) else f"{x:.6g}")
    for r in reports:
        w.writerow([r.category, f6(r.d_mean), f6(r.d_interval[0]), f6(r.d_interval[1]), f6(r.t_mean),
                    g(r.bf_mean), f6(r.bf_log_mean), r.iterations, "" if r.seed is None else r.seed])
    return buf.getvalue()
