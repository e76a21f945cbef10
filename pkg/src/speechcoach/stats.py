"""Small-sample statistics used by the study analysis.

Student-t and normal tail probabilities come from ``scipy.special``
(regularized incomplete beta / error function); everything else is direct
formula evaluation so each result can be traced by hand.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np
from scipy import special

from .errors import DegenerateMarginals, DegenerateX, LengthMismatch, ZeroVariance

CONFIDENCE = 0.95
EXACT_MAX_N = 8


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    n_points: int


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    p: float
    mean: float
    ci95_lo: float
    ci95_hi: float


@dataclass(frozen=True)
class UTestResult:
    U: float
    p: float


@dataclass(frozen=True)
class KappaResult:
    kappa: float
    observed_agreement: float
    expected_agreement: float


@dataclass(frozen=True)
class Description:
    mean: float
    ci95_lo: float
    ci95_hi: float
    n: int


def t_critical(df: int, confidence: float = CONFIDENCE) -> float:
    """Two-sided Student critical value, e.g. 12.7062 for df=1."""
    return float(special.stdtrit(df, 0.5 + confidence / 2))


def t_two_sided_p(t: float, df: int) -> float:
    return float(min(1.0, 2.0 * special.stdtr(df, -abs(t))))


def _as_array(values) -> np.ndarray:
    return np.asarray(values, dtype=np.float64)


def ols_slope(y: Sequence[float], x: Sequence[float] | None = None) -> RegressionResult:
    """Least-squares line through (x, y); ``x`` defaults to 1, 2, ..., len(y)."""
    y = _as_array(y)
    x = np.arange(1, y.size + 1, dtype=np.float64) if x is None else _as_array(x)
    if x.size != y.size:
        raise LengthMismatch("x and y differ in length")
    if x.size < 2:
        raise DegenerateX("need at least two points")
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    if sxx == 0:
        raise DegenerateX("all x values are equal")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    return RegressionResult(slope, float(ym - slope * xm), int(x.size))


def one_sample_t(values: Sequence[float], mu0: float = 0.0) -> TTestResult:
    x = _as_array(values)
    n = x.size
    if n < 2:
        raise ValueError("one-sample t needs n >= 2")
    mean = float(x.mean())
    sd = float(x.std(ddof=1))
    if sd == 0.0:
        raise ZeroVariance("sample variance is zero")
    se = sd / math.sqrt(n)
    df = n - 1
    t = (mean - mu0) / se
    half = t_critical(df) * se
    return TTestResult(t, df, t_two_sided_p(t, df), mean, mean - half, mean + half)


def two_sample_t(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Pooled-variance Student t on mean(a) - mean(b)."""
    a, b = _as_array(a), _as_array(b)
    na, nb = a.size, b.size
    if na < 2 or nb < 2:
        raise ValueError("two-sample t needs at least two values per group")
    df = na + nb - 2
    pooled = ((na - 1) * a.var(ddof=1) + (nb - 1) * b.var(ddof=1)) / df
    if pooled == 0.0:
        raise ZeroVariance("pooled variance is zero")
    diff = float(a.mean() - b.mean())
    se = math.sqrt(pooled * (1.0 / na + 1.0 / nb))
    t = diff / se
    half = t_critical(df) * se
    return TTestResult(t, df, t_two_sided_p(t, df), diff, diff - half, diff + half)


def midranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties sharing the average of their positions."""
    x = _as_array(values)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(x.size)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> UTestResult:
    """U for ``a`` with a two-sided, tie- and continuity-corrected normal p."""
    a, b = _as_array(a), _as_array(b)
    na, nb = a.size, b.size
    if na < 1 or nb < 1:
        raise ValueError("each group needs at least one value")
    pooled = np.concatenate([a, b])
    ranks = midranks(pooled)
    u = float(ranks[:na].sum() - na * (na + 1) / 2.0)
    n = na + nb
    ties = np.unique(pooled, return_counts=True)[1]
    tie_term = float(np.sum(ties**3 - ties))
    var = na * nb / 12.0 * ((n + 1) - (tie_term / (n * (n - 1)) if n > 1 else 0.0))
    if var <= 0:
        return UTestResult(u, 1.0)
    z = max(0.0, abs(u - na * nb / 2.0) - 0.5) / math.sqrt(var)
    return UTestResult(u, float(min(1.0, 2.0 * special.ndtr(-z))))


def mann_whitney_exact_p(a: Sequence[float], b: Sequence[float]) -> UTestResult:
    """Exact permutation p for U by enumerating every split of the pooled ranks.

    Limited to groups of at most eight values each.
    """
    a, b = _as_array(a), _as_array(b)
    na, nb = a.size, b.size
    if na < 1 or nb < 1:
        raise ValueError("each group needs at least one value")
    if max(na, nb) > EXACT_MAX_N:
        raise ValueError(f"exact enumeration limited to groups of <= {EXACT_MAX_N}")
    ranks = midranks(np.concatenate([a, b]))
    offset = na * (na + 1) / 2.0
    center = na * nb / 2.0
    u_obs = float(ranks[:na].sum() - offset)
    dev = abs(u_obs - center) - 1e-9
    hits = total = 0
    for idx in itertools.combinations(range(na + nb), na):
        total += 1
        if abs(ranks[list(idx)].sum() - offset - center) >= dev:
            hits += 1
    return UTestResult(u_obs, hits / total)


def cohens_kappa(labels_a: Sequence[Hashable], labels_b: Sequence[Hashable]) -> KappaResult:
    labels_a, labels_b = list(labels_a), list(labels_b)
    if len(labels_a) != len(labels_b):
        raise LengthMismatch(f"{len(labels_a)} vs {len(labels_b)} labels")
    n = len(labels_a)
    if n < 1:
        raise LengthMismatch("need at least one labelled item")
    p_o = sum(x == y for x, y in zip(labels_a, labels_b)) / n
    ca, cb = Counter(labels_a), Counter(labels_b)
    p_e = sum(ca[k] * cb[k] for k in ca) / (n * n)
    if p_e >= 1.0:
        if p_o == 1.0:
            return KappaResult(1.0, p_o, p_e)
        raise DegenerateMarginals("expected agreement is 1 but observed agreement is not")
    return KappaResult((p_o - p_e) / (1.0 - p_e), p_o, p_e)


def describe(values: Sequence[float]) -> Description:
    """Mean with a t-based 95% CI; a constant sample gets a zero-width CI."""
    x = _as_array(values)
    n = x.size
    if n < 2:
        raise ValueError("describe needs n >= 2")
    mean = float(x.mean())
    sd = float(x.std(ddof=1))
    half = t_critical(n - 1) * sd / math.sqrt(n)
    return Description(mean, mean - half, mean + half, n)
