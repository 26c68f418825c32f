"""
Descriptive statistics and the comparison tests applied to per-string
metric vectors: two-sample Kolmogorov-Smirnov, Shapiro-Wilk and Welch's t.
"""
from __future__ import annotations

from fractions import Fraction
from math import comb, sqrt
from typing import Sequence

import numpy as np
from scipy import special
from scipy.stats import norm

from aitrand.core.exceptions import DegenerateSampleError, ParameterError
from aitrand.models.responses import SIGNIFICANCE, FiveNumberSummary, StatTestResult

KS_EXACT_MAX_PRODUCT = 10**4
SW_MIN_N = 3
SW_MAX_N = 5000
QUARTILE_CONVENTION = "linear interpolation at (n-1)q on sorted data"

# AS R94 polynomial coefficients, highest power first (np.polyval order)
_SW_C1 = [-2.706056, 4.434685, -2.071190, -0.147981, 0.221157, 0.0]
_SW_C2 = [-3.582633, 5.682633, -1.752461, -0.293762, 0.042981, 0.0]
_SW_C3 = [-0.0006714, 0.025054, -0.39978, 0.5440]
_SW_C4 = [-0.0020322, 0.062767, -0.77857, 1.3822]
_SW_C5 = [0.0038915, -0.083751, -0.31082, -1.5861]
_SW_C6 = [0.0030302, -0.082676, -0.4803]
_SW_G = [0.459, -2.273]
_SW_SMALL = 1e-19


def _as_finite_array(data: Sequence[float], name: str = "sample") -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 1:
        raise ParameterError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite values")
    return arr


def five_number_summary(data: Sequence[float]) -> FiveNumberSummary:
    arr = _as_finite_array(data)
    if arr.size < 2:
        raise ParameterError(f"five-number summary needs at least 2 values, got {arr.size}")
    q1, median, q3 = np.quantile(arr, [0.25, 0.5, 0.75], method="linear")
    return FiveNumberSummary(
        n=int(arr.size),
        min=float(arr.min()),
        q1=float(q1),
        median=float(median),
        q3=float(q3),
        max=float(arr.max()),
        mean=float(arr.mean()),
        sd=float(arr.std(ddof=1)),
    )


def _ks_scaled_statistic(a: np.ndarray, b: np.ndarray) -> int:
    """sup |F_a - F_b| scaled by n*m, as an exact integer."""
    n, m = a.size, b.size
    a = np.sort(a)
    b = np.sort(b)
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right").astype(np.int64)
    fb = np.searchsorted(b, pooled, side="right").astype(np.int64)
    return int(np.max(np.abs(fa * m - fb * n)))


def ks_exact_pvalue(n: int, m: int, d_scaled: int) -> Fraction:
    """
    P(D >= d) under the null for tie-free samples of sizes n and m, where
    d_scaled = D * n * m.

    Counts the lattice paths from (0, 0) to (n, m) whose every point keeps
    |i*m - j*n| < d_scaled; the p-value is the complement of that fraction.
    """
    inside = [0] * (m + 1)
    for i in range(n + 1):
        for j in range(m + 1):
            if abs(i * m - j * n) >= d_scaled:
                inside[j] = 0
            elif i == 0 and j == 0:
                inside[j] = 1
            else:
                inside[j] = (inside[j] if i > 0 else 0) + (inside[j - 1] if j > 0 else 0)
    total = comb(n + m, n)
    return 1 - Fraction(inside[m], total)


def ks_two_sample(
    a: Sequence[float], b: Sequence[float], threshold: float = SIGNIFICANCE
) -> StatTestResult:
    """
    Two-sided two-sample Kolmogorov-Smirnov test.

    Exact when the pooled sample has no ties and n*m <= 10^4; otherwise the
    asymptotic Kolmogorov distribution of D*sqrt(nm/(n+m)) is used and ties,
    if any, are flagged.
    """
    a = _as_finite_array(a, "first sample")
    b = _as_finite_array(b, "second sample")
    if a.size < 1 or b.size < 1:
        raise ParameterError("both samples must be non-empty")
    n, m = a.size, b.size
    d_scaled = _ks_scaled_statistic(a, b)
    d = d_scaled / (n * m)
    ties = np.unique(np.concatenate([a, b])).size < n + m
    if not ties and n * m <= KS_EXACT_MAX_PRODUCT:
        p = float(ks_exact_pvalue(n, m, d_scaled))
        method = "ks_exact"
    else:
        p = float(special.kolmogorov(d * sqrt(n * m / (n + m))))
        method = "ks_asymptotic"
    return StatTestResult(
        method=method,
        statistic=d,
        p_value=min(1.0, max(0.0, p)),
        threshold=threshold,
        ties=bool(ties),
    )


def _sw_coefficients(n: int) -> np.ndarray:
    """Normalized AS R94 weights a_1..a_{n//2} (positive, largest first)."""
    half = n // 2
    if n == 3:
        return np.array([sqrt(0.5)])
    m = norm.ppf((np.arange(1, half + 1) - 0.375) / (n + 0.25))
    summ2 = 2.0 * float(np.sum(m**2))
    ssumm2 = sqrt(summ2)
    rsn = 1.0 / sqrt(n)
    a = np.empty(half)
    a1 = np.polyval(_SW_C1, rsn) - m[0] / ssumm2
    if n > 5:
        a2 = -m[1] / ssumm2 + np.polyval(_SW_C2, rsn)
        fac = sqrt((summ2 - 2.0 * m[0] ** 2 - 2.0 * m[1] ** 2) / (1.0 - 2.0 * a1**2 - 2.0 * a2**2))
        a[1] = a2
        a[2:] = -m[2:] / fac
    else:
        fac = sqrt((summ2 - 2.0 * m[0] ** 2) / (1.0 - 2.0 * a1**2))
        a[1:] = -m[1:] / fac
    a[0] = a1
    return a


def shapiro_wilk(data: Sequence[float], threshold: float = SIGNIFICANCE) -> StatTestResult:
    """Shapiro-Wilk W and its p-value by the AS R94 approximation."""
    x = np.sort(_as_finite_array(data))
    n = x.size
    if not SW_MIN_N <= n <= SW_MAX_N:
        raise ParameterError(f"Shapiro-Wilk needs {SW_MIN_N}..{SW_MAX_N} values, got {n}")
    if x[-1] - x[0] < _SW_SMALL * max(1.0, abs(x[0])):
        raise DegenerateSampleError("Shapiro-Wilk is undefined for a zero-variance sample")

    a = _sw_coefficients(n)
    half = n // 2
    centered = x - x.mean()
    numerator = float(np.dot(a, x[::-1][:half] - x[:half])) ** 2
    w = min(1.0, numerator / float(np.dot(centered, centered)))

    if n == 3:
        pw = 6.0 / np.pi * (np.arcsin(sqrt(w)) - np.arcsin(sqrt(0.75)))
        return StatTestResult(
            method="shapiro_wilk", statistic=w, p_value=float(min(1.0, max(0.0, pw))), threshold=threshold
        )

    w1 = 1.0 - w
    if w1 <= 0.0:
        return StatTestResult(method="shapiro_wilk", statistic=w, p_value=1.0, threshold=threshold)
    y = np.log(w1)
    if n <= 11:
        gamma = np.polyval(_SW_G, n)
        if y >= gamma:
            return StatTestResult(method="shapiro_wilk", statistic=w, p_value=_SW_SMALL, threshold=threshold)
        y = -np.log(gamma - y)
        mean = np.polyval(_SW_C3, n)
        sd = np.exp(np.polyval(_SW_C4, n))
    else:
        ln_n = np.log(n)
        mean = np.polyval(_SW_C5, ln_n)
        sd = np.exp(np.polyval(_SW_C6, ln_n))
    pw = float(norm.sf((y - mean) / sd))
    return StatTestResult(method="shapiro_wilk", statistic=w, p_value=min(1.0, max(0.0, pw)), threshold=threshold)


def student_t_cdf(t: float, df: float) -> float:
    """Student-t CDF through the regularized incomplete beta function."""
    if df <= 0:
        raise ParameterError(f"degrees of freedom must be positive, got {df}")
    tail = 0.5 * float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))
    return tail if t < 0 else 1.0 - tail


def welch_t(a: Sequence[float], b: Sequence[float], threshold: float = SIGNIFICANCE) -> StatTestResult:
    """Two-sided Welch t-test with Welch-Satterthwaite degrees of freedom."""
    a = _as_finite_array(a, "first sample")
    b = _as_finite_array(b, "second sample")
    if a.size < 2 or b.size < 2:
        raise ParameterError("Welch's t-test needs at least 2 values per sample")
    va = a.var(ddof=1) / a.size
    vb = b.var(ddof=1) / b.size
    if va == 0.0 and vb == 0.0:
        raise DegenerateSampleError("Welch's t-test is undefined when both samples have zero variance")
    se2 = va + vb
    t = float((a.mean() - b.mean()) / sqrt(se2))
    df = float(se2**2 / (va**2 / (a.size - 1) + vb**2 / (b.size - 1)))
    p = float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))
    return StatTestResult(
        method="welch_t", statistic=t, p_value=min(1.0, max(0.0, p)), df=df, threshold=threshold
    )
