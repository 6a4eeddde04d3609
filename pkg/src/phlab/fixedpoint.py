"""Exact arithmetic on the circle R/Z with 64-bit fixed-point fractions.

A coordinate ``t`` in [0, 1) is held as the integer ``raw = t * 2**64``.
Sums and integer-linear combinations are computed modulo ``2**64`` and are
therefore exact modulo 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Union

import numpy as np

SCALE = 1 << 64
MASK = SCALE - 1
INV_SCALE = 2.0 ** -64

Number = Union[int, float, Fraction, str]


def to_raw(value: Number) -> int:
    """Round ``value`` mod 1 to the nearest multiple of 2**-64 (ties to even)."""
    if isinstance(value, str):
        value = Fraction(value)
    if isinstance(value, float):
        if not np.isfinite(value):
            raise ValueError(f"coordinate must be finite, got {value!r}")
        value = Fraction(value)
    if not isinstance(value, Rational):
        raise TypeError(f"unsupported coordinate type {type(value).__name__}")
    return round(Fraction(value) * SCALE) & MASK


def raw_to_float(raw: int) -> float:
    return float(raw & MASK) * INV_SCALE


def raw_to_fraction(raw: int) -> Fraction:
    return Fraction(raw & MASK, SCALE)


def as_u64(coeff: int) -> np.uint64:
    """Two's-complement image of an integer coefficient, for wrapping numpy products."""
    return np.uint64(coeff & MASK)


def bin_index(raw: np.ndarray, bins: int) -> np.ndarray:
    """Exact ``floor(raw * bins / 2**64)`` for uint64 arrays and ``bins < 2**32``."""
    if not 1 <= bins < (1 << 32):
        raise ValueError("bins must lie in [1, 2**32)")
    raw = np.asarray(raw, dtype=np.uint64)
    k = np.uint64(bins)
    hi = raw >> np.uint64(32)
    lo = raw & np.uint64(0xFFFFFFFF)
    return ((hi * k + ((lo * k) >> np.uint64(32))) >> np.uint64(32)).astype(np.int64)


@dataclass(frozen=True, order=True)
class TorusCoord:
    """A point of R/Z stored as ``raw / 2**64``."""

    raw: int

    def __post_init__(self):
        if not 0 <= self.raw < SCALE:
            object.__setattr__(self, "raw", self.raw & MASK)

    @classmethod
    def of(cls, value: Number) -> "TorusCoord":
        return cls(to_raw(value))

    def __float__(self) -> float:
        return raw_to_float(self.raw)

    def as_fraction(self) -> Fraction:
        return raw_to_fraction(self.raw)

    def __add__(self, other: "TorusCoord") -> "TorusCoord":
        return TorusCoord((self.raw + other.raw) & MASK)

    def __sub__(self, other: "TorusCoord") -> "TorusCoord":
        return TorusCoord((self.raw - other.raw) & MASK)

    def __neg__(self) -> "TorusCoord":
        return TorusCoord((-self.raw) & MASK)

    def __mul__(self, k: int) -> "TorusCoord":
        if not isinstance(k, int):
            return NotImplemented
        return TorusCoord((self.raw * k) & MASK)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"TorusCoord({float(self)!r})"
