"""Independent oracles the test suite checks the implementation against.

Each oracle deliberately takes a different route than the code under test:
bit-level decoding instead of scaled rounding, exhaustive enumeration
instead of closed forms, O(n^2) counting instead of sorted merges.
"""
from __future__ import annotations

import math
import struct

import numpy as np


def decode_binary16(pattern: int) -> float:
    """Bit-level binary16 decoder (sign/exponent/fraction fields by hand)."""
    assert 0 <= pattern <= 0xFFFF
    sign = -1.0 if pattern & 0x8000 else 1.0
    exp = (pattern >> 10) & 0x1F
    frac = pattern & 0x3FF
    if exp == 0x1F:
        if frac:
            return math.nan
        return sign * math.inf
    if exp == 0:
        return sign * frac * 2.0 ** -24
    return sign * (1.0 + frac * 2.0 ** -10) * 2.0 ** (exp - 15)


def quantize_binary16_via_numpy(x: float) -> float:
    """Alternative binary16 rounding route through numpy's float16 cast."""
    with np.errstate(over="ignore"):
        return float(np.float64(np.float16(np.float64(x))))


def step_accumulate(values, quantize_scalar) -> float:
    """Sequential quantized accumulation, one scalar step at a time."""
    acc = 0.0
    for v in values:
        acc = quantize_scalar(acc + v)
    return acc


def ecdf_sup_bruteforce(a, b) -> float:
    """sup_x |ECDF_a(x) - ECDF_b(x)| by direct counting at every sample point."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    best = 0.0
    for x in np.concatenate([a, b]):
        fa = np.count_nonzero(a <= x) / len(a)
        fb = np.count_nonzero(b <= x) / len(b)
        best = max(best, abs(fa - fb))
    return best


def _ranks_no_ties(absd: np.ndarray) -> np.ndarray:
    assert len(np.unique(absd)) == len(absd), "oracle requires tie-free magnitudes"
    return np.argsort(np.argsort(absd)) + 1


def wilcoxon_enumeration(diffs, alternative: str) -> float:
    """Exact signed-rank p-value by enumerating all 2^n sign assignments."""
    d = np.asarray(diffs, dtype=np.float64)
    d = d[d != 0.0]
    n = len(d)
    assert 1 <= n <= 20, "enumeration oracle is for small n"
    ranks = _ranks_no_ties(np.abs(d))
    w_obs = int(ranks[d > 0].sum())
    ge = le = 0
    for mask in range(2 ** n):
        w = 0
        for i in range(n):
            if (mask >> i) & 1:
                w += int(ranks[i])
        if w >= w_obs:
            ge += 1
        if w <= w_obs:
            le += 1
    total = 2 ** n
    if alternative == "greater":
        return ge / total
    if alternative == "less":
        return le / total
    return min(1.0, 2.0 * min(ge, le) / total)


def sign_enumeration(diffs, alternative: str) -> float:
    """Exact sign-test p-value by enumerating all 2^n sign assignments."""
    d = np.asarray(diffs, dtype=np.float64)
    d = d[d != 0.0]
    n = len(d)
    assert 1 <= n <= 20
    k_obs = int(np.count_nonzero(d > 0))
    ge = le = 0
    for mask in range(2 ** n):
        k = bin(mask).count("1")
        if k >= k_obs:
            ge += 1
        if k <= k_obs:
            le += 1
    total = 2 ** n
    if alternative == "greater":
        return ge / total
    if alternative == "less":
        return le / total
    return min(1.0, 2.0 * min(ge, le) / total)


def percentile_interpolated(values, q: float) -> float:
    """Linear interpolation between order statistics, spelled out."""
    s = sorted(float(v) for v in values)
    n = len(s)
    if n == 1:
        return s[0]
    pos = (n - 1) * q
    lo = int(math.floor(pos))
    if lo >= n - 1:
        return s[-1]
    frac = pos - lo
    return s[lo] * (1 - frac) + s[lo + 1] * frac


def float_bits(x: float) -> int:
    return struct.unpack(">Q", struct.pack(">d", x))[0]


def bits_float(pattern: int) -> float:
    return struct.unpack(">d", struct.pack(">Q", pattern))[0]
