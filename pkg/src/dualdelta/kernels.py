"""Matrix multiplication with configurable emulated-precision accumulation.

Products are always formed exactly in binary64 (exact for operands with up
to 11+11 significant bits, i.e. any pair of binary16 values); precision loss
is injected only where the configuration says so: after every accumulation
step, and once more when the output is stored.  This reproduces the
reduced-precision-reduction behavior of accelerator matmuls on any CPU.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrix import Matrix, representable
from .minifloat import BINARY16, BINARY32, FloatFormat, quantize_array

__all__ = ["REDUCTIONS", "KernelConfig", "dot_reduce", "matmul_emulated", "matmul_oracle"]

REDUCTIONS = ("sequential", "blocked", "pairwise")


@dataclass(frozen=True)
class KernelConfig:
    """Precision and reduction-order policy for one emulated matmul.

    ``accumulate_format`` equal to the element format models a
    reduced-precision reduction; a wider accumulate format models the
    full-precision reduction path.  ``blocked`` quantizes both intra-block
    partials and the inter-block combine, mimicking tiled accumulators.
    """

    element_format: FloatFormat = BINARY16
    accumulate_format: FloatFormat = BINARY32
    reduction: str = "sequential"
    block_size: int = 32
    output_format: FloatFormat = BINARY16

    def __post_init__(self) -> None:
        if self.reduction not in REDUCTIONS:
            raise ValueError(f"reduction must be one of {REDUCTIONS}, got {self.reduction!r}")
        if self.block_size < 1:
            raise ValueError(f"block_size must be >= 1, got {self.block_size}")

    def describe(self) -> str:
        red = self.reduction
        if red == "blocked":
            red = f"blocked({self.block_size})"
        return (f"elem={self.element_format} acc={self.accumulate_format} "
                f"red={red} out={self.output_format}")

    def as_dict(self) -> dict:
        return {
            "element_format": self.element_format.spec_string(),
            "accumulate_format": self.accumulate_format.spec_string(),
            "reduction": self.reduction,
            "block_size": self.block_size,
            "output_format": self.output_format.spec_string(),
        }


def _check_element_format(m: Matrix, fmt: FloatFormat, who: str) -> None:
    # the generator tags its matrices, making this a no-op on the hot path
    if m.format_tag == fmt:
        return
    if not representable(m.data, fmt):
        raise ValueError(f"{who} contains values not representable in element format {fmt}")


def _accumulate(a: np.ndarray, b: np.ndarray, cfg: KernelConfig) -> np.ndarray:
    """Reduce over the inner dimension with per-step quantization.

    ``a`` is (M, K), ``b`` is (K, N).  Every output element follows the same
    reduction order, so results are deterministic regardless of how callers
    parallelize over elements.
    """
    M, K = a.shape
    N = b.shape[1]
    fmt = cfg.accumulate_format
    exact = fmt.is_binary64

    def step(acc, term):
        s = acc + term
        return s if exact else quantize_array(s, fmt)

    if cfg.reduction == "sequential":
        acc = np.zeros((M, N))
        for k in range(K):
            acc = step(acc, a[:, k, None] * b[k, :])
        return acc

    if cfg.reduction == "blocked":
        total = np.zeros((M, N))
        for start in range(0, K, cfg.block_size):
            blk = np.zeros((M, N))
            for k in range(start, min(start + cfg.block_size, K)):
                blk = step(blk, a[:, k, None] * b[k, :])
            total = step(total, blk)
        return total

    # pairwise: leaves are the exact products; only actual pair additions
    # are quantized, odd leftovers carry unchanged to the next level
    level = [a[:, k, None] * b[k, :] for k in range(K)]
    while len(level) > 1:
        nxt = []
        for i in range(0, len(level) - 1, 2):
            nxt.append(step(level[i], level[i + 1]))
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0]


def dot_reduce(u, v, cfg: KernelConfig) -> float:
    """Inner product of two vectors under the configured reduction policy."""
    ua = np.asarray(u, dtype=np.float64).ravel()
    va = np.asarray(v, dtype=np.float64).ravel()
    if len(ua) != len(va):
        raise ValueError(f"length mismatch: {len(ua)} vs {len(va)}")
    if len(ua) == 0:
        raise ValueError("empty vectors")
    for name, arr in (("u", ua), ("v", va)):
        if not representable(arr.reshape(1, -1), cfg.element_format):
            raise ValueError(f"{name} contains values not representable in "
                             f"element format {cfg.element_format}")
    out = _accumulate(ua.reshape(1, -1), va.reshape(-1, 1), cfg)
    if not cfg.output_format.is_binary64:
        out = quantize_array(out, cfg.output_format)
    return float(out[0, 0])


def matmul_emulated(a: Matrix, b: Matrix, cfg: KernelConfig) -> Matrix:
    """rows(a) x cols(b) product with emulated-precision accumulation."""
    if a.cols != b.rows:
        raise ValueError(f"dimension mismatch: ({a.rows}x{a.cols}) @ ({b.rows}x{b.cols})")
    _check_element_format(a, cfg.element_format, "left operand")
    _check_element_format(b, cfg.element_format, "right operand")
    out = _accumulate(a.data, b.data, cfg)
    if not cfg.output_format.is_binary64:
        out = quantize_array(out, cfg.output_format)
    return Matrix(out, format_tag=cfg.output_format)


def matmul_oracle(a: Matrix, b: Matrix) -> Matrix:
    """Plain binary64 matmul with a fixed sequential reduction order.

    Deliberately not BLAS-backed: vendor matmuls reassociate the reduction,
    which would break bitwise reproducibility across platforms.
    """
    if a.cols != b.rows:
        raise ValueError(f"dimension mismatch: ({a.rows}x{a.cols}) @ ({b.rows}x{b.cols})")
    M, K = a.shape
    N = b.cols
    acc = np.zeros((M, N))
    ad, bd = a.data, b.data
    for k in range(K):
        acc = acc + ad[:, k, None] * bd[k, :]
    from .minifloat import BINARY64

    return Matrix(acc, format_tag=BINARY64)


DEFAULT_REDUCED_PRECISION = KernelConfig(BINARY16, BINARY16, "sequential", 32, BINARY16)
DEFAULT_FULL_PRECISION = KernelConfig(BINARY16, BINARY32, "sequential", 32, BINARY16)
