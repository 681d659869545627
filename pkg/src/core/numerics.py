"""Deterministic signed fixed-point arithmetic for the simulation datapath.

FixedReal is the amplitude format: sign, one integer bit and sixteen
fractional bits held as an 18-bit two's complement integer. ExtendedReal
doubles the fractional precision (8.32) and is used wherever the datapath
accumulates, takes square roots or reciprocals.

Scalar value types implement the reference semantics. The ``*_arrays``
kernels apply the same rounding and saturation rules to numpy int64
vectors and are what the engine runs on.
"""
import math
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Tuple, Union

import numpy as np

from .errors import NumericDomainError, NumericRangeError

FRAC_BITS = 16
ONE_RAW = 1 << FRAC_BITS
RAW_MAX = (1 << (FRAC_BITS + 1)) - 1
RAW_MIN = -(1 << (FRAC_BITS + 1))

EXT_FRAC_BITS = 32
EXT_INT_BITS = 8
EXT_ONE_RAW = 1 << EXT_FRAC_BITS

# 2^-14, smallest argument ext_recip accepts
RECIP_FLOOR_RAW = 1 << (EXT_FRAC_BITS - 14)

# |z|^2 slack allowed for a stored amplitude, 4 * 2^-16 in ExtendedReal units
QUANT_SLACK_RAW = 4 << (EXT_FRAC_BITS - FRAC_BITS)

QUANTIZE_LIMIT = Fraction(2) - Fraction(1, 1 << (FRAC_BITS + 1))

Number = Union[int, float, Fraction, Decimal, str]


def round_shift(value: int, shift: int) -> int:
    """Divide by 2**shift, rounding to nearest with ties away from zero."""
    if shift <= 0:
        return value << -shift
    half = 1 << (shift - 1)
    if value >= 0:
        return (value + half) >> shift
    return -((-value + half) >> shift)


def round_shift_array(values: np.ndarray, shift: int) -> np.ndarray:
    """Vector form of :func:`round_shift` for int64 arrays."""
    half = np.int64(1 << (shift - 1))
    magnitude = (np.abs(values) + half) >> shift
    return np.where(values < 0, -magnitude, magnitude)


def saturate(raw: int) -> Tuple[int, bool]:
    """Clamp a raw value to the FixedReal range; second item is the overflow flag."""
    if raw > RAW_MAX:
        return RAW_MAX, True
    if raw < RAW_MIN:
        return RAW_MIN, True
    return raw, False


def saturate_array(values: np.ndarray) -> Tuple[np.ndarray, bool]:
    clipped = np.clip(values, RAW_MIN, RAW_MAX)
    return clipped.astype(np.int64), bool(np.any(clipped != values))


@dataclass(frozen=True)
class FixedReal:
    """Q1.16 value; ``overflow`` is sticky across arithmetic."""

    raw: int
    overflow: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'raw', int(self.raw))
        if not RAW_MIN <= self.raw <= RAW_MAX:
            raise NumericRangeError(f"raw value {self.raw} outside Q1.16 range")

    @property
    def value(self) -> Fraction:
        return Fraction(self.raw, ONE_RAW)

    def __float__(self) -> float:
        return self.raw / ONE_RAW

    def to_extended(self) -> 'ExtendedReal':
        return ExtendedReal(self.raw << (EXT_FRAC_BITS - FRAC_BITS))


@dataclass(frozen=True)
class FixedComplex:
    """Complex amplitude with FixedReal components."""

    re: FixedReal
    im: FixedReal

    @classmethod
    def from_raw(cls, re_raw: int, im_raw: int, overflow: bool = False) -> 'FixedComplex':
        return cls(FixedReal(re_raw, overflow), FixedReal(im_raw, overflow))

    @property
    def overflow(self) -> bool:
        return self.re.overflow or self.im.overflow

    @property
    def raw(self) -> Tuple[int, int]:
        return self.re.raw, self.im.raw

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def is_amplitude(self) -> bool:
        """True when |z|^2 stays within quantization slack of the unit disc."""
        return mag_sq(self).raw <= EXT_ONE_RAW + QUANT_SLACK_RAW


@dataclass(frozen=True, order=True)
class ExtendedReal:
    """8.32 extended-precision value used for sums, roots and reciprocals."""

    raw: int

    def __post_init__(self):
        object.__setattr__(self, 'raw', int(self.raw))

    @classmethod
    def from_fixed(cls, value: FixedReal) -> 'ExtendedReal':
        return value.to_extended()

    @property
    def value(self) -> Fraction:
        return Fraction(self.raw, EXT_ONE_RAW)

    def __float__(self) -> float:
        return self.raw / EXT_ONE_RAW


EXT_ZERO = ExtendedReal(0)
EXT_ONE = ExtendedReal(EXT_ONE_RAW)


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (np.integer, np.floating)):
        return Fraction(x.item())
    if isinstance(x, (int, float, Decimal, str)):
        return Fraction(x)
    raise TypeError(f"cannot quantize {type(x).__name__}")


def quantize(x: Number) -> FixedReal:
    """Nearest FixedReal to ``x``, ties away from zero.

    Raises:
        NumericRangeError: |x| exceeds 2 - 2^-17
    """
    value = _to_fraction(x)
    if abs(value) > QUANTIZE_LIMIT:
        raise NumericRangeError(f"{float(value)} outside the Q1.16 input range")
    scaled = value * ONE_RAW
    magnitude = math.floor(abs(scaled) + Fraction(1, 2))
    raw = magnitude if scaled >= 0 else -magnitude
    raw, overflow = saturate(raw)
    return FixedReal(raw, overflow)


def quantize_complex(z) -> FixedComplex:
    """Quantize a complex, an (re, im) pair or a real number."""
    if isinstance(z, tuple):
        re, im = z
    elif isinstance(z, (complex, np.complexfloating)):
        re, im = float(z.real), float(z.imag)
    else:
        re, im = z, 0
    return FixedComplex(quantize(re), quantize(im))


def cadd(a: FixedComplex, b: FixedComplex) -> FixedComplex:
    """
    Componentwise sum with saturation.

    Args:
        a: First addend
        b: Second addend

    Returns:
        a + b; a component that leaves the Q1.16 range is clamped and flagged,
        and input flags carry over
    """
    re, re_flag = saturate(a.re.raw + b.re.raw)
    im, im_flag = saturate(a.im.raw + b.im.raw)
    return FixedComplex(
        FixedReal(re, re_flag or a.re.overflow or b.re.overflow),
        FixedReal(im, im_flag or a.im.overflow or b.im.overflow),
    )


def cmul(a: FixedComplex, b: FixedComplex) -> FixedComplex:
    """Complex product; each component is rounded once from the exact sum of products."""
    sticky = a.overflow or b.overflow
    re, re_flag = saturate(round_shift(a.re.raw * b.re.raw - a.im.raw * b.im.raw, FRAC_BITS))
    im, im_flag = saturate(round_shift(a.re.raw * b.im.raw + a.im.raw * b.re.raw, FRAC_BITS))
    return FixedComplex(FixedReal(re, re_flag or sticky), FixedReal(im, im_flag or sticky))


def mag_sq(a: FixedComplex) -> ExtendedReal:
    """Exact |a|^2; the 2^-32 scale of the squares is the ExtendedReal scale."""
    return ExtendedReal(a.re.raw * a.re.raw + a.im.raw * a.im.raw)


def isqrt_digits(value: int) -> int:
    """Digit-by-digit (two bits per step) integer square root, floor result."""
    if value < 0:
        raise NumericDomainError("square root of a negative value")
    result = 0
    bit = 1 << ((value.bit_length() - 1) & ~1) if value else 0
    while bit:
        if value >= result + bit:
            value -= result + bit
            result = (result >> 1) + bit
        else:
            result >>= 1
        bit >>= 2
    return result


def ext_sqrt(x: ExtendedReal) -> ExtendedReal:
    """
    Floor square root in the extended format.

    Args:
        x: Non-negative value

    Returns:
        The largest representable r with r*r <= x

    Raises:
        NumericDomainError: x is negative
    """
    if x.raw < 0:
        raise NumericDomainError(f"ext_sqrt of negative value {float(x)}")
    return ExtendedReal(isqrt_digits(x.raw << EXT_FRAC_BITS))


def ext_recip(x: ExtendedReal) -> ExtendedReal:
    """Nearest representable 1/x.

    Raises:
        NumericDomainError: x below 2^-14
    """
    if x.raw < RECIP_FLOOR_RAW:
        raise NumericDomainError(f"ext_recip argument {float(x)} below floor 2^-14")
    numerator = 1 << (2 * EXT_FRAC_BITS)
    return ExtendedReal((2 * numerator + x.raw) // (2 * x.raw))


# Vector kernels over int64 raw arrays.

def cadd_arrays(a_re, a_im, b_re, b_im) -> Tuple[np.ndarray, np.ndarray, bool]:
    re, re_flag = saturate_array(a_re + b_re)
    im, im_flag = saturate_array(a_im + b_im)
    return re, im, re_flag or im_flag


def cmul_arrays(a_re, a_im, b_re, b_im) -> Tuple[np.ndarray, np.ndarray, bool]:
    """Elementwise cmul; ``b`` may be raw Python ints to broadcast a constant."""
    re, re_flag = saturate_array(round_shift_array(a_re * b_re - a_im * b_im, FRAC_BITS))
    im, im_flag = saturate_array(round_shift_array(a_re * b_im + a_im * b_re, FRAC_BITS))
    return re, im, re_flag or im_flag


def mag_sq_array(re: np.ndarray, im: np.ndarray) -> np.ndarray:
    return re * re + im * im


def scale_arrays(re: np.ndarray, im: np.ndarray, factor: ExtendedReal) -> Tuple[np.ndarray, np.ndarray, bool]:
    """Multiply by an ExtendedReal factor, one rounding per component."""
    out_re, re_flag = saturate_array(round_shift_array(re * factor.raw, EXT_FRAC_BITS))
    out_im, im_flag = saturate_array(round_shift_array(im * factor.raw, EXT_FRAC_BITS))
    return out_re, out_im, re_flag or im_flag
