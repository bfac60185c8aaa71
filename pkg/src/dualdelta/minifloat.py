"""Software emulation of reduced-precision binary floating-point formats.

Quantized values are kept widened to binary64: every format handled here has
at most 52 explicit fraction bits, so binary64 represents each of its members
exactly and downstream arithmetic on quantized values stays exact.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FloatFormat",
    "BINARY16",
    "BFLOAT16",
    "FP8_E4M3",
    "FP8_E5M2",
    "BINARY32",
    "BINARY64",
    "REGISTRY",
    "parse_format",
    "format_properties",
    "quantize",
    "quantize_array",
    "quantize_matrix",
]


@dataclass(frozen=True)
class FloatFormat:
    """An IEEE-754-style binary format given by exponent and fraction widths.

    ``mantissa_bits`` counts explicit fraction bits (the leading bit is
    implicit).  Bias, exponent range and derived magnitudes follow the
    IEEE-754 interchange conventions: the all-ones exponent encodes
    infinities and NaNs, the all-zeros exponent encodes zero and subnormals.
    The ``name`` is a display label and does not participate in equality.
    """

    name: str = field(compare=False)
    exponent_bits: int
    mantissa_bits: int

    def __post_init__(self) -> None:
        if not 2 <= self.exponent_bits <= 11:
            raise ValueError(f"exponent_bits must be in [2, 11], got {self.exponent_bits}")
        if not 1 <= self.mantissa_bits <= 52:
            raise ValueError(f"mantissa_bits must be in [1, 52], got {self.mantissa_bits}")
        if self.exponent_bits + self.mantissa_bits > 63:
            raise ValueError("exponent_bits + mantissa_bits must not exceed 63")

    @property
    def bias(self) -> int:
        return 2 ** (self.exponent_bits - 1) - 1

    @property
    def min_exp(self) -> int:
        # smallest normal binade
        return 1 - self.bias

    @property
    def max_exp(self) -> int:
        return 2 ** self.exponent_bits - 2 - self.bias

    @property
    def max_finite(self) -> float:
        return (2.0 - 2.0 ** -self.mantissa_bits) * 2.0 ** self.max_exp

    @property
    def min_normal(self) -> float:
        return 2.0 ** self.min_exp

    @property
    def min_subnormal(self) -> float:
        return 2.0 ** (self.min_exp - self.mantissa_bits)

    @property
    def machine_epsilon(self) -> float:
        return 2.0 ** -self.mantissa_bits

    @property
    def is_binary64(self) -> bool:
        return self.exponent_bits == 11 and self.mantissa_bits == 52

    def spec_string(self) -> str:
        """Round-trippable textual form, e.g. ``binary16`` or ``(e=4,m=3)``."""
        if REGISTRY.get(self.name) == self:
            return self.name
        return f"(e={self.exponent_bits},m={self.mantissa_bits})"

    def __str__(self) -> str:
        return self.spec_string()


BINARY16 = FloatFormat("binary16", 5, 10)
BFLOAT16 = FloatFormat("bfloat16", 8, 7)
# Plain IEEE-style encoding; deliberately not the OCP E4M3 variant with the
# remapped max-magnitude NaN.
FP8_E4M3 = FloatFormat("fp8_e4m3", 4, 3)
FP8_E5M2 = FloatFormat("fp8_e5m2", 5, 2)
BINARY32 = FloatFormat("binary32", 8, 23)
BINARY64 = FloatFormat("binary64", 11, 52)

REGISTRY: dict[str, FloatFormat] = {
    f.name: f for f in (BINARY16, BFLOAT16, FP8_E4M3, FP8_E5M2, BINARY32, BINARY64)
}

_CUSTOM_RE = re.compile(r"^\(\s*e\s*=\s*(\d+)\s*,\s*m\s*=\s*(\d+)\s*\)$")


def parse_format(text: str) -> FloatFormat:
    """Resolve a format name (``binary16``, ...) or a ``(e=E,m=M)`` literal."""
    key = text.strip().lower()
    if key in REGISTRY:
        return REGISTRY[key]
    m = _CUSTOM_RE.match(key)
    if m:
        e, mant = int(m.group(1)), int(m.group(2))
        return FloatFormat(f"custom(e={e},m={mant})", e, mant)
    known = ", ".join(sorted(REGISTRY))
    raise ValueError(f"unknown float format {text!r}; expected one of {known} or (e=E,m=M)")


def format_properties(fmt: FloatFormat) -> dict[str, float]:
    """Closed-form magnitude constants of ``fmt``."""
    return {
        "max_finite": fmt.max_finite,
        "min_normal": fmt.min_normal,
        "min_subnormal": fmt.min_subnormal,
        "machine_epsilon": fmt.machine_epsilon,
    }


def quantize(x: float, fmt: FloatFormat) -> float:
    """Round ``x`` to the nearest value representable in ``fmt``.

    Round-to-nearest-ties-to-even.  Magnitudes of at least
    ``max_finite + 0.5 * ulp(max_finite)`` overflow to signed infinity;
    subnormals of ``fmt`` are honored; signed zeros and infinities pass
    through; NaN maps to a canonical NaN (payloads are not preserved).
    """
    x = float(x)
    if math.isnan(x):
        return math.nan
    if math.isinf(x) or x == 0.0:
        return x
    _, high = math.frexp(x)  # |x| in [2**(high-1), 2**high)
    q = max(high - 1, fmt.min_exp) - fmt.mantissa_bits
    # Exact: the scaled magnitude is below 2**(mantissa_bits+1) <= 2**53.
    scaled = math.ldexp(x, -q)
    r = round(scaled)  # round() on a float is round-half-to-even
    if abs(r) >= 2 ** (fmt.mantissa_bits + 1) and high - 1 >= fmt.max_exp:
        return math.copysign(math.inf, x)
    out = math.ldexp(float(r), q)
    if abs(out) > fmt.max_finite:
        return math.copysign(math.inf, x)
    # copysign keeps -0.0 when a tiny negative rounds to zero
    return math.copysign(out, x)


def quantize_array(values: np.ndarray, fmt: FloatFormat) -> np.ndarray:
    """Elementwise :func:`quantize` for float64 arrays; returns a new array."""
    x = np.asarray(values, dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore"):
        _, high = np.frexp(x)
        q = np.maximum(high - 1, fmt.min_exp) - fmt.mantissa_bits
        out = np.ldexp(np.rint(np.ldexp(x, -q)), q)
        out = np.where(
            np.isfinite(x) & (np.abs(out) > fmt.max_finite),
            np.copysign(np.inf, x),
            out,
        )
        out = np.where(np.isnan(x), np.nan, out)
    return out


def quantize_matrix(matrix, fmt: FloatFormat):
    """Quantize every element of a matrix; the result is tagged with ``fmt``."""
    from .matrix import Matrix

    return Matrix(quantize_array(matrix.data, fmt), format_tag=fmt)
