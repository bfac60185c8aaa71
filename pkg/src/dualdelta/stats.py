"""Descriptive statistics and hypothesis tests over paired error samples.

Every test returns a :class:`TestResult`.  The distribution machinery
(normal, Student-t, F and Kolmogorov tails, normal quantiles) is implemented
here directly on top of ``math.erfc``/``math.lgamma`` so p-values are
reproducible bit-for-bit and carry no external dependency.

Conventions shared by the paired tests: pairing is by sample index, the
tested differences are ``d1[i] - d2[i]``, and ``alternative="greater"``
means the first sample's errors tend to be larger.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "DeltaDistribution",
    "DescriptiveSummary",
    "TestResult",
    "describe",
    "ks_two_sample",
    "wilcoxon_signed_rank",
    "sign_test",
    "paired_t_test",
    "shapiro_wilk",
    "variance_test",
]

_SQRT2 = math.sqrt(2.0)

ALTERNATIVES = ("two_sided", "greater", "less")

# Exact signed-rank enumeration is feasible well past this point via the
# rank-sum table, but 25 keeps parity with the conventional switchover to
# the normal approximation.
WILCOXON_EXACT_LIMIT = 25


@dataclass(frozen=True)
class DeltaDistribution:
    """Ordered per-trial error sample for one implementation.

    Index position is the trial index; two distributions from the same run
    are paired positionally.  Values must be finite and nonnegative.
    """

    values: tuple[float, ...]
    label: str = ""
    metric: str = "max_hybrid"

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        if len(vals) < 1:
            raise ValueError("a delta distribution needs at least one value")
        for i, v in enumerate(vals):
            if not math.isfinite(v) or v < 0.0:
                raise ValueError(f"delta values must be finite and >= 0; index {i} is {v!r}")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return len(self.values)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class DescriptiveSummary:
    n: int
    mean: float
    median: float
    std: float
    std_defined: bool
    minimum: float
    maximum: float
    p50: float
    p90: float
    p95: float
    p99: float

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "median": self.median,
            "std": self.std,
            "std_defined": self.std_defined,
            "min": self.minimum,
            "max": self.maximum,
            "p50": self.p50,
            "p90": self.p90,
            "p95": self.p95,
            "p99": self.p99,
        }


@dataclass(frozen=True)
class TestResult:
    method: str
    statistic: float
    p_value: float
    n_effective: int
    mode: str  # "exact" | "asymptotic"
    alternative: str  # "two_sided" | "greater" | "less"

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value out of range: {self.p_value}")
        if self.mode not in ("exact", "asymptotic"):
            raise ValueError(f"bad mode {self.mode!r}")
        if self.alternative not in ALTERNATIVES:
            raise ValueError(f"bad alternative {self.alternative!r}")

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "n_effective": self.n_effective,
            "mode": self.mode,
            "alternative": self.alternative,
        }


def _values(sample) -> np.ndarray:
    """Accept a DeltaDistribution or any 1-D sequence of floats."""
    vals = getattr(sample, "values", sample)
    arr = np.asarray(vals, dtype=np.float64).ravel()
    return arr


def _check_alternative(alternative: str) -> None:
    if alternative not in ALTERNATIVES:
        raise ValueError(f"alternative must be one of {ALTERNATIVES}, got {alternative!r}")


# ---------------------------------------------------------------------------
# distribution tails and quantiles

def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / _SQRT2)


def _norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / _SQRT2)


# Acklam's rational approximation of the standard normal quantile, followed
# by one Halley refinement with erfc; absolute error is at the few-ulp level.
_PPF_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
          1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_PPF_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
          6.680131188771972e01, -1.328068155288572e01)
_PPF_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
          -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_PPF_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
          3.754408661907416e00)


def _norm_ppf(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        if p == 0.0:
            return -math.inf
        if p == 1.0:
            return math.inf
        raise ValueError(f"quantile argument must be in [0, 1], got {p}")
    a, b, c, d = _PPF_A, _PPF_B, _PPF_C, _PPF_D
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    elif p <= 1.0 - p_low:
        q = p - 0.5
        r = q * q
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / \
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log1p(-p))
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    # one Halley step against the exact CDF
    err = _norm_cdf(x) - p
    u = err * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def _betacf(a: float, b: float, x: float) -> float:
    # Lentz continued fraction for the incomplete beta function
    max_iter, eps, fpmin = 300, 3e-16, 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    return h


def _betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_bt = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
             + a * math.log(x) + b * math.log1p(-x))
    bt = math.exp(ln_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


def _t_sf(t: float, df: float) -> float:
    """P(T >= t) for Student-t with df degrees of freedom."""
    if math.isnan(t):
        raise ValueError("t statistic is NaN")
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    x = df / (df + t * t)
    p = 0.5 * _betainc_reg(0.5 * df, 0.5, x)
    return p if t >= 0 else 1.0 - p


def _f_sf(f: float, d1: float, d2: float) -> float:
    """P(F >= f) for the F distribution with (d1, d2) degrees of freedom."""
    if f <= 0.0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return _betainc_reg(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f))


def _kolmogorov_sf(lam: float) -> float:
    """Upper tail of the asymptotic Kolmogorov distribution."""
    if lam <= 0.0:
        return 1.0
    if lam < 1.18:
        # theta-function form; three terms are ample at these arguments
        v = math.pi * math.pi / (8.0 * lam * lam)
        cdf = math.sqrt(2.0 * math.pi) / lam * (
            math.exp(-v) + math.exp(-9.0 * v) + math.exp(-25.0 * v))
        return min(1.0, max(0.0, 1.0 - cdf))
    s = 0.0
    sign = 1.0
    for j in range(1, 200):
        term = math.exp(-2.0 * j * j * lam * lam)
        s += sign * term
        sign = -sign
        if term <= 1e-300 or term < 1e-17 * abs(s):
            break
    return min(1.0, max(0.0, 2.0 * s))


def _fsum(values) -> float:
    return math.fsum(float(v) for v in values)


def _fsum_dot(a: np.ndarray, b: np.ndarray) -> float:
    return math.fsum(float(x) * float(y) for x, y in zip(a, b))


def _midranks(a: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties sharing their average rank."""
    order = np.argsort(a, kind="stable")
    ranks = np.empty(len(a), dtype=np.float64)
    sa = a[order]
    i = 0
    while i < len(sa):
        j = i
        while j + 1 < len(sa) and sa[j + 1] == sa[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _quantile_sorted(s: np.ndarray, q: float) -> float:
    """Linear interpolation between order statistics at position (n-1)*q."""
    n = len(s)
    if n == 1:
        return float(s[0])
    pos = (n - 1) * q
    lo = int(math.floor(pos))
    hi = min(lo + 1, n - 1)
    frac = pos - lo
    return float(s[lo] + frac * (s[hi] - s[lo]))


# ---------------------------------------------------------------------------
# descriptive statistics

def describe(d) -> DescriptiveSummary:
    """Central tendency, spread and tail percentiles of one error sample."""
    v = _values(d)
    if v.size == 0:
        raise ValueError("empty distribution")
    s = np.sort(v)
    n = int(v.size)
    mean = _fsum(v) / n
    if n >= 2:
        std = math.sqrt(_fsum((x - mean) ** 2 for x in v) / (n - 1))
        std_defined = True
    else:
        std = 0.0
        std_defined = False
    p50 = _quantile_sorted(s, 0.50)
    return DescriptiveSummary(
        n=n,
        mean=mean,
        median=p50,
        std=std,
        std_defined=std_defined,
        minimum=float(s[0]),
        maximum=float(s[-1]),
        p50=p50,
        p90=_quantile_sorted(s, 0.90),
        p95=_quantile_sorted(s, 0.95),
        p99=_quantile_sorted(s, 0.99),
    )


# ---------------------------------------------------------------------------
# hypothesis tests

def ks_two_sample(d1, d2) -> TestResult:
    """Two-sample Kolmogorov-Smirnov test (two-sided).

    The statistic is the exact ECDF sup-distance from the sorted samples;
    the p-value uses the asymptotic Kolmogorov distribution at effective
    size n1*n2/(n1+n2).
    """
    a = np.sort(_values(d1))
    b = np.sort(_values(d2))
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise ValueError("empty input")
    both = np.concatenate([a, b])
    cdf1 = np.searchsorted(a, both, side="right") / n1
    cdf2 = np.searchsorted(b, both, side="right") / n2
    d = float(np.max(np.abs(cdf1 - cdf2)))
    ne = n1 * n2 / (n1 + n2)
    p = _kolmogorov_sf(math.sqrt(ne) * d)
    return TestResult("ks_two_sample", d, p, int(round(ne)), "asymptotic", "two_sided")


@lru_cache(maxsize=128)
def _signed_rank_counts(n: int) -> tuple[int, ...]:
    """counts[w] = number of subsets of {1..n} whose rank sum equals w."""
    total = n * (n + 1) // 2
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in range(1, n + 1):
        for w in range(total, r - 1, -1):
            counts[w] += counts[w - r]
    return tuple(counts)


def _paired_differences(d1, d2) -> np.ndarray:
    a, b = _values(d1), _values(d2)
    if len(a) != len(b):
        raise ValueError(f"paired tests need equal lengths, got {len(a)} and {len(b)}")
    return a - b


def wilcoxon_signed_rank(d1, d2, alternative: str = "greater") -> TestResult:
    """One- or two-sided Wilcoxon signed-rank test on paired differences.

    Zero differences are dropped (Wilcoxon's original zero rule) and tied
    magnitudes receive mid-ranks.  The statistic is W+, the rank sum of the
    positive differences.  The p-value is exact (full null distribution of
    W+) when the effective sample is at most ``WILCOXON_EXACT_LIMIT`` and
    tie-free, otherwise a tie-corrected normal approximation with
    continuity correction.
    """
    _check_alternative(alternative)
    d = _paired_differences(d1, d2)
    d = d[d != 0.0]
    n = len(d)
    if n == 0:
        raise ValueError("distributions identical under pairing (all differences zero)")
    absd = np.abs(d)
    ranks = _midranks(absd)
    w_pos = float(np.sum(ranks[d > 0.0]))
    has_ties = len(np.unique(absd)) < n

    if n <= WILCOXON_EXACT_LIMIT and not has_ties:
        counts = _signed_rank_counts(n)
        total = 2 ** n
        w = int(round(w_pos))
        upper = sum(counts[w:])
        lower = sum(counts[:w + 1])
        if alternative == "greater":
            p = upper / total
        elif alternative == "less":
            p = lower / total
        else:
            p = min(1.0, 2.0 * min(upper, lower) / total)
        return TestResult("wilcoxon_signed_rank", w_pos, p, n, "exact", alternative)

    mu = n * (n + 1) / 4.0
    _, tie_sizes = np.unique(absd, return_counts=True)
    tie_term = float(np.sum(tie_sizes.astype(np.float64) ** 3 - tie_sizes))
    var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0
    sigma = math.sqrt(var)
    if alternative == "greater":
        p = _norm_sf((w_pos - mu - 0.5) / sigma)
    elif alternative == "less":
        p = _norm_cdf((w_pos - mu + 0.5) / sigma)
    else:
        z = (abs(w_pos - mu) - 0.5) / sigma
        p = min(1.0, 2.0 * _norm_sf(max(z, 0.0)))
    return TestResult("wilcoxon_signed_rank", w_pos, p, n, "asymptotic", alternative)


def sign_test(d1, d2, alternative: str = "greater") -> TestResult:
    """Sign test on paired differences with an exact binomial(n, 1/2) tail."""
    _check_alternative(alternative)
    d = _paired_differences(d1, d2)
    d = d[d != 0.0]
    n = len(d)
    if n == 0:
        raise ValueError("distributions identical under pairing (all differences zero)")
    k = int(np.sum(d > 0.0))
    total = 2 ** n
    upper = sum(math.comb(n, i) for i in range(k, n + 1))
    lower = sum(math.comb(n, i) for i in range(0, k + 1))
    if alternative == "greater":
        p = upper / total
    elif alternative == "less":
        p = lower / total
    else:
        p = min(1.0, 2.0 * min(upper, lower) / total)
    return TestResult("sign_test", float(k), p, n, "exact", alternative)


def paired_t_test(d1, d2, alternative: str = "greater") -> TestResult:
    """Paired t-test; requires nonzero variance of the differences."""
    _check_alternative(alternative)
    d = _paired_differences(d1, d2)
    n = len(d)
    if n < 2:
        raise ValueError("paired t-test needs at least 2 pairs")
    mean = _fsum(d) / n
    ss = _fsum((x - mean) ** 2 for x in d)
    if ss == 0.0:
        raise ValueError("zero-variance differences")
    sd = math.sqrt(ss / (n - 1))
    t = mean / (sd / math.sqrt(n))
    df = n - 1
    if alternative == "greater":
        p = _t_sf(t, df)
    elif alternative == "less":
        p = _t_sf(-t, df)
    else:
        p = min(1.0, 2.0 * _t_sf(abs(t), df))
    return TestResult("paired_t", t, p, n, "exact", alternative)


@lru_cache(maxsize=64)
def _blom_scores(n: int) -> tuple[float, ...]:
    return tuple(_norm_ppf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1))


def shapiro_wilk(sample) -> TestResult:
    """Shapiro-Wilk normality test, Royston's 1995 approximation.

    Valid for 3 <= n <= 5000.  Used as the gate that decides whether the
    paired t-test may corroborate the nonparametric comparison.
    """
    x = np.sort(_values(sample))
    n = len(x)
    if n < 3 or n > 5000:
        raise ValueError(f"shapiro_wilk requires 3 <= n <= 5000, got {n}")
    if x[-1] - x[0] == 0.0:
        raise ValueError("zero-variance sample")

    m = np.asarray(_blom_scores(n))
    ssq_m = _fsum_dot(m, m)
    u = 1.0 / math.sqrt(n)
    a = np.empty(n, dtype=np.float64)
    if n == 3:
        a[:] = (-math.sqrt(0.5), 0.0, math.sqrt(0.5))
    else:
        c_n = m[-1] / math.sqrt(ssq_m)
        a_n = ((((-2.706056 * u + 4.434685) * u - 2.071190) * u - 0.147981) * u
               + 0.221157) * u + c_n
        if n > 5:
            c_n1 = m[-2] / math.sqrt(ssq_m)
            a_n1 = ((((-3.582633 * u + 5.682633) * u - 1.752461) * u - 0.293762) * u
                    + 0.042981) * u + c_n1
            phi = (ssq_m - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2) / \
                  (1.0 - 2.0 * a_n ** 2 - 2.0 * a_n1 ** 2)
            a[2:n - 2] = m[2:n - 2] / math.sqrt(phi)
            a[-2], a[1] = a_n1, -a_n1
        else:
            phi = (ssq_m - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * a_n ** 2)
            a[1:n - 1] = m[1:n - 1] / math.sqrt(phi)
        a[-1], a[0] = a_n, -a_n

    mean = _fsum(x) / n
    ss = _fsum((v - mean) ** 2 for v in x)
    w = _fsum_dot(a, x) ** 2 / ss
    w = min(w, 1.0)

    if n == 3:
        # exact small-sample tail
        p = 1.909859317102744 * (math.asin(math.sqrt(w)) - 1.047197551196598)
        p = min(1.0, max(0.0, p))
    elif w >= 1.0:
        p = 1.0
    elif n <= 11:
        gamma = 0.459 * n - 2.273
        arg = gamma - math.log(1.0 - w)
        if arg <= 0.0:
            p = 0.0
        else:
            g = -math.log(arg)
            mu = 0.5440 - 0.39978 * n + 0.025054 * n * n - 0.0006714 * n ** 3
            sigma = math.exp(1.3822 - 0.77857 * n + 0.062767 * n * n - 0.0020322 * n ** 3)
            p = _norm_sf((g - mu) / sigma)
    else:
        g = math.log(1.0 - w)
        ln_n = math.log(n)
        mu = -1.5861 - 0.31082 * ln_n - 0.083751 * ln_n ** 2 + 0.0038915 * ln_n ** 3
        sigma = math.exp(-0.4803 - 0.082676 * ln_n + 0.0030302 * ln_n ** 2)
        p = _norm_sf((g - mu) / sigma)
    return TestResult("shapiro_wilk", float(w), p, n, "asymptotic", "two_sided")


def variance_test(d1, d2) -> TestResult:
    """Brown-Forsythe spread comparison (median-centered Levene).

    Chosen over the plain F-ratio because error distributions are usually
    far from normal.  The F statistic is reported; direction (which sample
    spreads wider) is read off the group deviations by the caller.
    """
    a, b = _values(d1), _values(d2)
    n1, n2 = len(a), len(b)
    if n1 < 2 or n2 < 2:
        raise ValueError("variance test needs at least 2 values per sample")
    za = np.abs(a - np.median(a))
    zb = np.abs(b - np.median(b))
    if float(za.max()) == 0.0 and float(zb.max()) == 0.0:
        raise ValueError("degenerate samples: no spread in either group")
    ntot = n1 + n2
    mean_a = _fsum(za) / n1
    mean_b = _fsum(zb) / n2
    grand = (_fsum(za) + _fsum(zb)) / ntot
    ss_between = n1 * (mean_a - grand) ** 2 + n2 * (mean_b - grand) ** 2
    ss_within = _fsum((z - mean_a) ** 2 for z in za) + _fsum((z - mean_b) ** 2 for z in zb)
    if ss_within == 0.0:
        if ss_between == 0.0:
            stat, p = 0.0, 1.0
        else:
            # per-group deviations are constants (e.g. two-point samples):
            # any between-group difference is infinitely significant
            stat, p = math.inf, 0.0
    else:
        stat = (ntot - 2) * ss_between / ss_within
        p = _f_sf(stat, 1, ntot - 2)
    return TestResult("brown_forsythe", stat, p, ntot, "asymptotic", "two_sided")


def mean_abs_deviation_from_median(sample) -> float:
    """Spread measure matching the Brown-Forsythe centering; used for direction."""
    v = _values(sample)
    return _fsum(np.abs(v - np.median(v))) / len(v)
