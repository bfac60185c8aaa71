"""Error metrics comparing an implementation output against the oracle output.

Both metrics reject non-finite inputs instead of propagating them: a single
infinity would otherwise silently saturate a whole error distribution.
Differences are formed in binary64, so metric rounding is negligible next to
the measured kernel error.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = [
    "METRIC_NAMES",
    "max_hybrid_error",
    "normwise_relative_error",
    "resolve_metric",
]

METRIC_NAMES = ("max_hybrid", "normwise_rel_l2", "normwise_rel_linf")


def _as_2d(x) -> np.ndarray:
    data = getattr(x, "data", x)
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    return arr


def _check_pair(y, y_oracle) -> tuple[np.ndarray, np.ndarray]:
    a, b = _as_2d(y), _as_2d(y_oracle)
    if a.size == 0 or b.size == 0:
        raise ValueError("empty input")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    for name, arr in (("implementation output", a), ("oracle output", b)):
        bad = ~np.isfinite(arr)
        if bad.any():
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            raise ValueError(f"non-finite value in {name} at index {idx}: {arr[idx]!r}")
    return a, b


def max_hybrid_error(y, y_oracle) -> float:
    """max over elements of |y_i - y'_i| / (1 + |y'_i|).

    Blends absolute error (near zero) and relative error (large magnitudes);
    it is the smallest tolerance at which an allclose-style check with equal
    absolute and relative bounds would pass.
    """
    a, b = _check_pair(y, y_oracle)
    return float(np.max(np.abs(a - b) / (1.0 + np.abs(b))))


def normwise_relative_error(y, y_oracle, norm: str = "l2") -> float:
    """||y - y'|| / ||y'|| with matrices flattened to vectors.

    ``norm`` is ``"l2"`` or ``"linf"``.  A zero-norm oracle with a nonzero
    difference is an error; when both norms are zero the result is 0.
    """
    a, b = _check_pair(y, y_oracle)
    d = (a - b).ravel()
    o = b.ravel()
    if norm == "l2":
        # fsum keeps the reduction exactly rounded and platform-independent
        num = math.sqrt(math.fsum(float(v) * float(v) for v in d))
        den = math.sqrt(math.fsum(float(v) * float(v) for v in o))
    elif norm == "linf":
        num = float(np.max(np.abs(d)))
        den = float(np.max(np.abs(o)))
    else:
        raise ValueError(f"unknown norm {norm!r}; expected 'l2' or 'linf'")
    if den == 0.0:
        if num == 0.0:
            return 0.0
        raise ValueError("relative error undefined at zero oracle")
    return num / den


def resolve_metric(name: str):
    """Map a config-facing metric name to its callable."""
    if name == "max_hybrid":
        return max_hybrid_error
    if name == "normwise_rel_l2":
        return lambda y, yo: normwise_relative_error(y, yo, "l2")
    if name == "normwise_rel_linf":
        return lambda y, yo: normwise_relative_error(y, yo, "linf")
    raise ValueError(f"unknown metric {name!r}; expected one of {', '.join(METRIC_NAMES)}")
