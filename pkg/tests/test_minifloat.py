"""Quantization correctness: exhaustive binary16 fidelity plus property sweeps."""
from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualdelta.matrix import Matrix
from dualdelta.minifloat import (
    BFLOAT16,
    BINARY16,
    BINARY32,
    BINARY64,
    FP8_E4M3,
    FloatFormat,
    format_properties,
    parse_format,
    quantize,
    quantize_array,
    quantize_matrix,
)

from oracles import decode_binary16, float_bits, quantize_binary16_via_numpy


def bits64(x: float) -> np.uint64:
    return np.float64(x).view(np.uint64)


def random_bit_pattern_floats(n: int, seed: int) -> np.ndarray:
    """Uniform over bit patterns: covers normals, subnormals, zeros, inf, NaN."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, 2 ** 64, size=n, dtype=np.uint64).view(np.float64)


# ---------------------------------------------------------------------------
# scalar examples

def test_exactly_representable_value_unchanged():
    assert quantize(1.0, BINARY16) == 1.0


def test_tie_rounds_to_even():
    # 2049 sits midway between 2048 and 2050; 2048 has the even significand
    assert quantize(2049.0, BINARY16) == 2048.0
    assert quantize(-2049.0, BINARY16) == -2048.0


def test_overflow_threshold():
    # half an ulp above max_finite = 65504 is 65520; at and beyond -> inf
    assert quantize(65520.0, BINARY16) == math.inf
    assert quantize(65519.9999, BINARY16) == 65504.0
    assert quantize(-65520.0, BINARY16) == -math.inf
    assert quantize(1e308, BINARY16) == math.inf


def test_signed_zero_preserved():
    out = quantize(-0.0, BFLOAT16)
    assert out == 0.0 and math.copysign(1.0, out) == -1.0
    out = quantize(0.0, BFLOAT16)
    assert math.copysign(1.0, out) == 1.0


def test_tiny_negative_rounds_to_negative_zero():
    out = quantize(-1e-300, BINARY16)
    assert out == 0.0 and math.copysign(1.0, out) == -1.0


def test_nan_maps_to_nan():
    assert math.isnan(quantize(math.nan, BINARY16))
    assert math.isnan(quantize(math.nan, BINARY64))


def test_infinities_pass_through():
    assert quantize(math.inf, FP8_E4M3) == math.inf
    assert quantize(-math.inf, FP8_E4M3) == -math.inf


def test_subnormal_rounding_binary16():
    # min_subnormal is 2^-24; half of it rounds to zero (tie, even), above rounds up
    tiny = 2.0 ** -24
    assert quantize(tiny, BINARY16) == tiny
    assert quantize(tiny / 2, BINARY16) == 0.0
    assert quantize(tiny * 0.75, BINARY16) == tiny


# ---------------------------------------------------------------------------
# format properties

def test_format_properties_binary16():
    props = format_properties(BINARY16)
    assert props["max_finite"] == 65504.0
    assert props["machine_epsilon"] == 2.0 ** -10
    assert props["min_normal"] == 2.0 ** -14
    assert props["min_subnormal"] == 2.0 ** -24


def test_format_properties_bfloat16():
    assert format_properties(BFLOAT16)["machine_epsilon"] == 2.0 ** -7


def test_format_properties_binary64_is_self_description():
    props = format_properties(BINARY64)
    assert props["max_finite"] == np.finfo(np.float64).max
    assert props["machine_epsilon"] == np.finfo(np.float64).eps


def test_format_validation():
    with pytest.raises(ValueError):
        FloatFormat("bad", 1, 10)
    with pytest.raises(ValueError):
        FloatFormat("bad", 5, 0)
    with pytest.raises(ValueError):
        FloatFormat("bad", 11, 53)


def test_parse_format():
    assert parse_format("binary16") is BINARY16
    custom = parse_format("(e=4, m=3)")
    assert (custom.exponent_bits, custom.mantissa_bits) == (4, 3)
    assert custom == FP8_E4M3  # name does not participate in equality
    with pytest.raises(ValueError):
        parse_format("float128")


# ---------------------------------------------------------------------------
# exhaustive binary16 fidelity against the bit-level decode oracle

def test_exhaustive_binary16_roundtrip():
    for pattern in range(0x10000):
        value = decode_binary16(pattern)
        out = quantize(value, BINARY16)
        if math.isnan(value):
            assert math.isnan(out)
        else:
            assert float_bits(out) == float_bits(value), hex(pattern)


def test_exhaustive_binary16_roundtrip_array_path():
    values = np.array([decode_binary16(p) for p in range(0x10000)])
    out = quantize_array(values, BINARY16)
    nan = np.isnan(values)
    assert np.isnan(out[nan]).all()
    assert np.array_equal(out[~nan].view(np.uint64), values[~nan].view(np.uint64))


# ---------------------------------------------------------------------------
# property sweeps (>= 10^6 random bit patterns, vectorized)

SWEEP_FORMATS = (BINARY16, BFLOAT16, FP8_E4M3, BINARY32, BINARY64)


def test_idempotence_sweep():
    x = random_bit_pattern_floats(1_000_000, seed=101)
    for fmt in SWEEP_FORMATS:
        once = quantize_array(x, fmt)
        twice = quantize_array(once, fmt)
        assert np.array_equal(once.view(np.uint64), twice.view(np.uint64)), fmt.name


def test_monotonicity_sweep():
    x = random_bit_pattern_floats(1_000_000, seed=102)
    x = x[np.isfinite(x)]
    a = np.minimum(x[: len(x) // 2], x[len(x) // 2: 2 * (len(x) // 2)])
    b = np.maximum(x[: len(x) // 2], x[len(x) // 2: 2 * (len(x) // 2)])
    for fmt in (BINARY16, BFLOAT16, FP8_E4M3):
        qa = quantize_array(a, fmt)
        qb = quantize_array(b, fmt)
        assert np.all(qa <= qb), fmt.name


def test_sign_symmetry_sweep():
    x = random_bit_pattern_floats(1_000_000, seed=103)
    x = x[~np.isnan(x)]  # NaN is canonicalized, so -quantize(nan) differs in sign bit
    for fmt in SWEEP_FORMATS:
        pos = quantize_array(x, fmt)
        neg = quantize_array(-x, fmt)
        assert np.array_equal(neg.view(np.uint64), (-pos).view(np.uint64)), fmt.name


def test_binary64_identity_on_non_nan():
    x = random_bit_pattern_floats(500_000, seed=104)
    x = x[~np.isnan(x)]
    out = quantize_array(x, BINARY64)
    assert np.array_equal(out.view(np.uint64), x.view(np.uint64))


def test_scalar_and_array_paths_agree_bitwise():
    x = random_bit_pattern_floats(20_000, seed=105)
    for fmt in (BINARY16, FP8_E4M3, BINARY32):
        arr = quantize_array(x, fmt)
        for i in range(0, len(x), 97):
            s = quantize(float(x[i]), fmt)
            a = float(arr[i])
            if math.isnan(s):
                assert math.isnan(a)
            else:
                assert float_bits(s) == float_bits(a), x[i]


def test_binary16_matches_numpy_float16_cast():
    x = random_bit_pattern_floats(300_000, seed=106)
    ours = quantize_array(x, BINARY16)
    with np.errstate(over="ignore"):
        ref = np.float16(x).astype(np.float64)
    nan = np.isnan(x)
    assert np.isnan(ours[nan]).all()
    assert np.array_equal(ours[~nan].view(np.uint64), ref[~nan].view(np.uint64))


# ---------------------------------------------------------------------------
# hypothesis: scalar path on adversarial floats

@given(st.floats(allow_nan=False, allow_infinity=True, allow_subnormal=True))
@settings(max_examples=300)
def test_hypothesis_idempotent_and_matches_float16(x):
    q = quantize(x, BINARY16)
    assert quantize(q, BINARY16) == q
    assert float_bits(q) == float_bits(quantize_binary16_via_numpy(x))


@given(st.floats(allow_nan=False, allow_infinity=False, allow_subnormal=True),
       st.floats(allow_nan=False, allow_infinity=False, allow_subnormal=True))
@settings(max_examples=300)
def test_hypothesis_monotone_pairs(a, b):
    lo, hi = min(a, b), max(a, b)
    assert quantize(lo, BFLOAT16) <= quantize(hi, BFLOAT16)


# ---------------------------------------------------------------------------
# matrix-level quantization

def test_quantize_matrix_all_zero():
    m = Matrix(np.zeros((2, 2)))
    out = quantize_matrix(m, BINARY16)
    assert np.array_equal(out.data, np.zeros((2, 2)))
    assert out.format_tag == BINARY16


def test_quantize_matrix_elementwise():
    m = Matrix(np.array([[1.0, 2049.0]]))
    out = quantize_matrix(m, BINARY16)
    assert out.data.tolist() == [[1.0, 2048.0]]


def test_quantize_matrix_identity_matrix():
    m = Matrix(np.eye(3))
    out = quantize_matrix(m, BFLOAT16)
    assert np.array_equal(out.data, np.eye(3))
