import math
from fractions import Fraction

import numpy as np
import pytest

from core.errors import NumericDomainError, NumericRangeError
from core.numerics import (
    EXT_ONE,
    EXT_ONE_RAW,
    ONE_RAW,
    RAW_MAX,
    RAW_MIN,
    ExtendedReal,
    FixedComplex,
    FixedReal,
    cadd,
    cadd_arrays,
    cmul,
    cmul_arrays,
    ext_recip,
    ext_sqrt,
    isqrt_digits,
    mag_sq,
    mag_sq_array,
    quantize,
    quantize_complex,
    round_shift,
    round_shift_array,
    scale_arrays,
)

INV_SQRT2_RAW = 46341


def fc(re_raw, im_raw=0):
    return FixedComplex.from_raw(re_raw, im_raw)


def nearest_away(value):
    """Nearest integer to a Fraction, ties away from zero."""
    magnitude = math.floor(abs(value) + Fraction(1, 2))
    return magnitude if value >= 0 else -magnitude


class TestQuantize:
    """Nearest-value quantization to Q1.16, ties away from zero."""

    @pytest.mark.parametrize("value,raw", [
        (0, 0),
        (-1, -ONE_RAW),
        (1, ONE_RAW),
        (Fraction(3, 2), 98304),
        ("0.5", 32768),
        (2 ** -0.5, INV_SQRT2_RAW),
        (-(2 ** -0.5), -INV_SQRT2_RAW),
    ])
    def test_quantize_values(self, value, raw):
        assert quantize(value).raw == raw

    def test_ties_round_away_from_zero(self):
        half_ulp = Fraction(1, 1 << 17)
        assert quantize(half_ulp).raw == 1
        assert quantize(-half_ulp).raw == -1
        assert quantize(3 * half_ulp).raw == 2

    @pytest.mark.parametrize("value", [2, -2, 2.5, Fraction(-5, 2)])
    def test_out_of_range(self, value):
        with pytest.raises(NumericRangeError):
            quantize(value)

    def test_quantize_complex_forms(self):
        assert quantize_complex(1j).raw == (0, ONE_RAW)
        assert quantize_complex((Fraction(1, 2), Fraction(-1, 2))).raw == (32768, -32768)
        assert quantize_complex(Fraction(1, 4)).raw == (16384, 0)

    def test_fixed_real_range_checked(self):
        with pytest.raises(NumericRangeError):
            FixedReal(RAW_MAX + 1)
        assert FixedReal(RAW_MIN).value == Fraction(RAW_MIN, ONE_RAW)

    def test_value_is_exact(self):
        assert FixedReal(INV_SQRT2_RAW).value == Fraction(INV_SQRT2_RAW, 65536)
        assert float(FixedReal(-32768)) == -0.5


class TestRounding:
    """Shared round-to-nearest shift used by every kernel."""

    @pytest.mark.parametrize("value,shift,expected", [
        (3, 1, 2),
        (-3, 1, -2),
        (5, 2, 1),
        (6, 2, 2),
        (-6, 2, -2),
        (7, 0, 7),
    ])
    def test_round_shift(self, value, shift, expected):
        assert round_shift(value, shift) == expected

    def test_array_form_matches_scalar(self):
        rng = np.random.default_rng(5)
        values = rng.integers(-(1 << 40), 1 << 40, size=500)
        expected = [round_shift(int(v), 16) for v in values]
        assert round_shift_array(values, 16).tolist() == expected


class TestComplexArithmetic:
    """cadd, cmul and mag_sq semantics including saturation."""

    def test_additive_inverse(self):
        assert cadd(fc(ONE_RAW), fc(-ONE_RAW)).raw == (0, 0)

    def test_add_two_halves_of_root_two(self):
        assert cadd(fc(INV_SQRT2_RAW), fc(INV_SQRT2_RAW)).re.raw == 92682

    def test_add_saturates_with_flag(self):
        result = cadd(fc(0, ONE_RAW), fc(0, ONE_RAW))
        assert result.im.raw == RAW_MAX
        assert result.im.overflow is True
        assert result.overflow is True
        assert result.re.overflow is False

    def test_overflow_is_sticky(self):
        saturated = cadd(fc(0, ONE_RAW), fc(0, ONE_RAW))
        assert cmul(saturated, fc(0)).overflow is True

    def test_multiplicative_identity(self):
        z = fc(12345, -6789)
        assert cmul(fc(ONE_RAW), z).raw == z.raw

    def test_j_squared(self):
        assert cmul(fc(0, ONE_RAW), fc(0, ONE_RAW)).raw == (-ONE_RAW, 0)

    def test_root_half_squared(self):
        product = cmul(fc(INV_SQRT2_RAW), fc(INV_SQRT2_RAW))
        assert abs(float(product.re) - 0.5) <= 2 ** -16
        assert product.im.raw == 0

    def test_mag_sq_exact(self):
        assert mag_sq(fc(ONE_RAW)) == EXT_ONE
        assert mag_sq(fc(INV_SQRT2_RAW, INV_SQRT2_RAW)).raw == 2 * INV_SQRT2_RAW ** 2

    def test_amplitude_slack(self):
        assert fc(INV_SQRT2_RAW, INV_SQRT2_RAW).is_amplitude()
        assert not fc(RAW_MAX, 0).is_amplitude()

    def test_array_kernels_match_scalar(self):
        rng = np.random.default_rng(11)
        a_re, a_im, b_re, b_im = (rng.integers(-ONE_RAW, ONE_RAW, size=200) for _ in range(4))

        add_re, add_im, _ = cadd_arrays(a_re, a_im, b_re, b_im)
        mul_re, mul_im, _ = cmul_arrays(a_re, a_im, b_re, b_im)
        for k in range(200):
            a, b = fc(int(a_re[k]), int(a_im[k])), fc(int(b_re[k]), int(b_im[k]))
            assert cadd(a, b).raw == (add_re[k], add_im[k])
            assert cmul(a, b).raw == (mul_re[k], mul_im[k])

    def test_array_overflow_flag(self):
        re = np.array([RAW_MAX, 0])
        _, _, flag = cadd_arrays(re, np.zeros(2, dtype=np.int64), re, np.zeros(2, dtype=np.int64))
        assert flag is True

    def test_mag_sq_array(self):
        re = np.array([ONE_RAW, 0, 3])
        im = np.array([0, ONE_RAW, 4])
        assert mag_sq_array(re, im).tolist() == [EXT_ONE_RAW, EXT_ONE_RAW, 25]

    def test_cmul_rounds_exact_product_once(self):
        rng = np.random.default_rng(23)
        for _ in range(500):
            a_re, a_im, b_re, b_im = (int(v) for v in rng.integers(-INV_SQRT2_RAW, INV_SQRT2_RAW + 1, size=4))
            product = cmul(fc(a_re, a_im), fc(b_re, b_im))

            exact_re = Fraction(a_re * b_re - a_im * b_im, ONE_RAW)
            exact_im = Fraction(a_re * b_im + a_im * b_re, ONE_RAW)
            assert product.raw == (nearest_away(exact_re), nearest_away(exact_im))
            assert not product.overflow

    @pytest.mark.parametrize("a,b,expected", [
        (1, ONE_RAW // 2, 1),
        (-1, ONE_RAW // 2, -1),
        (3, ONE_RAW // 2, 2),
        (1, ONE_RAW // 2 - 1, 0),
    ])
    def test_cmul_ties_away_from_zero(self, a, b, expected):
        assert cmul(fc(a), fc(b)).re.raw == expected

    def test_mag_sq_exact_over_full_range(self):
        rng = np.random.default_rng(29)
        for re, im in rng.integers(RAW_MIN, RAW_MAX + 1, size=(500, 2)):
            re, im = int(re), int(im)
            assert mag_sq(fc(re, im)).raw == re * re + im * im


class TestExtendedOps:
    """Digit-by-digit square root and the floored reciprocal."""

    @pytest.mark.parametrize("value", [0, 1, 2, 3, 4, 15, 16, 17, 1 << 40, (1 << 64) - 1, 123456789012345])
    def test_isqrt_digits_matches_isqrt(self, value):
        assert isqrt_digits(value) == math.isqrt(value)

    def test_sqrt_of_one(self):
        assert ext_sqrt(EXT_ONE) == EXT_ONE

    def test_sqrt_of_quarter(self):
        assert ext_sqrt(ExtendedReal(EXT_ONE_RAW // 4)).raw == EXT_ONE_RAW // 2

    def test_sqrt_negative(self):
        with pytest.raises(NumericDomainError):
            ext_sqrt(ExtendedReal(-1))

    def test_sqrt_monotonic(self):
        grid = set(range(1 << 12))
        grid.update(range(0, 1 << 40, 1 << 27))
        for k in range(1, 1 << 10):
            square = (k * k) << 20
            grid.update((square - 1, square, square + 1))
        values = sorted(grid)

        roots = [ext_sqrt(ExtendedReal(v)).raw for v in values]
        assert all(lo <= hi for lo, hi in zip(roots, roots[1:]))

    def test_recip_of_one_and_half(self):
        assert ext_recip(EXT_ONE) == EXT_ONE
        assert ext_recip(ExtendedReal(EXT_ONE_RAW // 2)).raw == 2 * EXT_ONE_RAW

    def test_recip_is_nearest(self):
        x = ExtendedReal(3 * EXT_ONE_RAW // 4)
        exact = Fraction(1) / x.value
        assert abs(ext_recip(x).value - exact) <= Fraction(1, 2 * EXT_ONE_RAW)

    def test_recip_floor(self):
        assert float(ext_recip(ExtendedReal(1 << 18))) == 2 ** 14
        with pytest.raises(NumericDomainError):
            ext_recip(ExtendedReal((1 << 18) - 1))

    def test_fixed_converts_exactly(self):
        assert FixedReal(-12345).to_extended().value == FixedReal(-12345).value

    def test_scale_arrays_single_rounding(self):
        factor = ext_recip(ext_sqrt(ExtendedReal(EXT_ONE_RAW // 2)))
        re, im, flag = scale_arrays(np.array([INV_SQRT2_RAW]), np.array([0]), factor)
        assert abs(int(re[0]) - ONE_RAW) <= 1
        assert im.tolist() == [0]
        assert flag is False
