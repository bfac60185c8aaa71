"""Dense row-major binary64 matrix with an optional representability tag."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .minifloat import FloatFormat, quantize_array

__all__ = ["Matrix"]


@dataclass
class Matrix:
    """A 2-D float64 array, optionally tagged as representable in a format.

    The tag is an assertion, not a storage format: data stays binary64.
    Instances are treated as immutable; operations return new matrices.
    """

    data: np.ndarray
    format_tag: FloatFormat | None = field(default=None)

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(np.asarray(self.data, dtype=np.float64))
        if arr.ndim != 2:
            raise ValueError(f"matrix data must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"matrix dims must be positive, got {arr.shape}")
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @classmethod
    def tagged(cls, data, fmt: FloatFormat) -> "Matrix":
        """Build a tagged matrix, verifying every element is representable."""
        m = cls(data, format_tag=fmt)
        if not representable(m.data, fmt):
            raise ValueError(f"matrix contains values not representable in {fmt}")
        return m

    def bitwise_equal(self, other: "Matrix") -> bool:
        if self.shape != other.shape:
            return False
        a = self.data.view(np.uint64)
        b = other.data.view(np.uint64)
        return bool(np.array_equal(a, b))


def representable(data: np.ndarray, fmt: FloatFormat) -> bool:
    """True when quantizing ``data`` to ``fmt`` is an elementwise no-op."""
    q = quantize_array(data, fmt)
    return bool(np.array_equal(q.view(np.uint64), np.asarray(data).view(np.uint64)))
