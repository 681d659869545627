"""One- and two-input gate definitions and their gate-pool kernels.

One-input matrices are held exactly (entries in Q(sqrt 2)[j]) and quantized
to FixedComplex. Entries that are 0, +-1 or +-j never go through a
multiplier. Two-input gates are generalized permutation matrices over
{1, -1, j, -j} and are stored only as an entry-action table, so applying
them involves selection, negation and re/im swaps but no arithmetic.
"""
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ValidationError
from .numerics import (
    FixedComplex,
    cadd_arrays,
    cmul_arrays,
    quantize,
    saturate_array,
)


@dataclass(frozen=True)
class Surd:
    """Exact real ``p + q*sqrt(2)`` with rational p and q."""

    p: Fraction = Fraction(0)
    q: Fraction = Fraction(0)

    def __add__(self, other: 'Surd') -> 'Surd':
        return Surd(self.p + other.p, self.q + other.q)

    def __neg__(self) -> 'Surd':
        return Surd(-self.p, -self.q)

    def __sub__(self, other: 'Surd') -> 'Surd':
        return self + (-other)

    def __mul__(self, other: 'Surd') -> 'Surd':
        return Surd(self.p * other.p + 2 * self.q * other.q, self.p * other.q + self.q * other.p)

    def is_zero(self) -> bool:
        return self.p == 0 and self.q == 0

    def __float__(self) -> float:
        return float(self.p) + float(self.q) * 2 ** 0.5

    def to_number(self):
        """Exact Fraction when rational, otherwise the nearest double."""
        return self.p if self.q == 0 else float(self)


@dataclass(frozen=True)
class ExactComplex:
    re: Surd = Surd()
    im: Surd = Surd()

    def __add__(self, other: 'ExactComplex') -> 'ExactComplex':
        return ExactComplex(self.re + other.re, self.im + other.im)

    def __neg__(self) -> 'ExactComplex':
        return ExactComplex(-self.re, -self.im)

    def __mul__(self, other: 'ExactComplex') -> 'ExactComplex':
        return ExactComplex(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    def conj(self) -> 'ExactComplex':
        return ExactComplex(self.re, -self.im)

    def is_zero(self) -> bool:
        return self.re.is_zero() and self.im.is_zero()

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def quantize(self) -> FixedComplex:
        return FixedComplex(quantize(self.re.to_number()), quantize(self.im.to_number()))


def _c(re: Fraction = Fraction(0), im: Fraction = Fraction(0), re_q: Fraction = Fraction(0),
       im_q: Fraction = Fraction(0)) -> ExactComplex:
    return ExactComplex(Surd(Fraction(re), Fraction(re_q)), Surd(Fraction(im), Fraction(im_q)))


ZERO = _c()
ONE = _c(1)
MINUS_ONE = _c(-1)
J = _c(0, 1)
MINUS_J = _c(0, -1)
HALF = Fraction(1, 2)
INV_SQRT2 = _c(re_q=HALF)
# e^{j pi/4} and e^{-j pi/4}; both components quantize to raw 46341 in magnitude
PHASE_PI_4 = _c(re_q=HALF, im_q=HALF)
PHASE_MINUS_PI_4 = _c(re_q=HALF, im_q=-HALF)


class GateKind(Enum):
    """Gate enumeration; the value is the circuit-file keyword."""

    NOP = 'nop'
    X = 'x'
    Y = 'y'
    Z = 'z'
    H = 'h'
    V = 'v'
    SY = 'sy'
    S = 's'
    SDG = 'sdg'
    T = 't'
    TDG = 'tdg'
    EX = 'ex'
    EY = 'ey'
    EZ = 'ez'
    M = 'm'
    CNOT = 'cnot'
    CY = 'cy'
    CZ = 'cz'
    SZZ = 'szz'
    SWAP = 'swap'

    @property
    def keyword(self) -> str:
        return self.value

    @property
    def arity(self) -> int:
        return 2 if self in TWO_INPUT_KINDS else 1

    @property
    def is_measurement(self) -> bool:
        return self is GateKind.M

    @property
    def is_error(self) -> bool:
        return self in ERROR_PAULI

    @property
    def consumes_randomness(self) -> bool:
        return self.is_measurement or self.is_error


TWO_INPUT_KINDS = frozenset({GateKind.CNOT, GateKind.CY, GateKind.CZ, GateKind.SZZ, GateKind.SWAP})
ERROR_PAULI = {GateKind.EX: GateKind.X, GateKind.EY: GateKind.Y, GateKind.EZ: GateKind.Z}
UNIVERSAL_SET = frozenset({GateKind.H, GateKind.T, GateKind.CNOT})


# (swap re/im, sign applied to new re, sign applied to new im)
UnitAction = Tuple[bool, int, int]

_UNIT_ACTIONS: Dict[ExactComplex, UnitAction] = {
    ONE: (False, 1, 1),
    MINUS_ONE: (False, -1, -1),
    J: (True, -1, 1),
    MINUS_J: (True, 1, -1),
}


def unit_action(value: ExactComplex) -> Optional[UnitAction]:
    """Action for multiplying by a unit in {1, -1, j, -j}; None otherwise."""
    return _UNIT_ACTIONS.get(value)


def apply_unit_arrays(re: np.ndarray, im: np.ndarray, action: UnitAction) -> Tuple[np.ndarray, np.ndarray, bool]:
    swap, re_sign, im_sign = action
    src_re, src_im = (im, re) if swap else (re, im)
    out_re, re_flag = saturate_array(re_sign * src_re)
    out_im, im_flag = saturate_array(im_sign * src_im)
    return out_re, out_im, re_flag or im_flag


Matrix = Tuple[Tuple[ExactComplex, ...], ...]


def _is_unitary(rows: Matrix) -> bool:
    size = len(rows)
    for a in range(size):
        for b in range(size):
            acc = ZERO
            for k in range(size):
                acc = acc + rows[k][a].conj() * rows[k][b]
            if acc != (ONE if a == b else ZERO):
                return False
    return True


def _dagger(rows: Matrix) -> Matrix:
    size = len(rows)
    return tuple(tuple(rows[c][r].conj() for c in range(size)) for r in range(size))


# (source column, unit action or None, quantized entry)
_Term = Tuple[int, Optional[UnitAction], FixedComplex]


@dataclass(frozen=True)
class GateMatrix1:
    """2x2 one-input gate: exact entries plus their quantized form."""

    name: str
    exact: Matrix
    quantized: Tuple[Tuple[FixedComplex, ...], ...] = field(init=False)
    sign_only: bool = field(init=False)
    _terms: Tuple[Tuple[_Term, ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.exact) != 2 or any(len(row) != 2 for row in self.exact):
            raise ValidationError(f"{self.name}: one-input gate needs a 2x2 matrix")
        if not _is_unitary(self.exact):
            raise ValidationError(f"{self.name}: matrix is not unitary")
        quantized = tuple(tuple(entry.quantize() for entry in row) for row in self.exact)
        terms = tuple(
            tuple((c, unit_action(entry), quantized[r][c])
                  for c, entry in enumerate(row) if not entry.is_zero())
            for r, row in enumerate(self.exact)
        )
        sign_only = all(action is not None for row in terms for _, action, _ in row)
        object.__setattr__(self, 'quantized', quantized)
        object.__setattr__(self, 'sign_only', sign_only)
        object.__setattr__(self, '_terms', terms)

    def to_complex(self) -> np.ndarray:
        return np.array([[complex(e) for e in row] for row in self.exact], dtype=np.complex128)

    def quantized_complex(self) -> np.ndarray:
        return np.array([[complex(e) for e in row] for row in self.quantized], dtype=np.complex128)

    def dagger(self) -> 'GateMatrix1':
        return GateMatrix1(f"{self.name}^-1", _dagger(self.exact))

    def apply_arrays(self, re: np.ndarray, im: np.ndarray) -> Tuple[np.ndarray, np.ndarray, bool]:
        """Apply to every row of (P, 2) raw arrays; one pair per row."""
        out_re = np.zeros_like(re)
        out_im = np.zeros_like(im)
        overflow = False
        for r, row in enumerate(self._terms):
            acc_re = acc_im = None
            for c, action, entry in row:
                if action is not None:
                    t_re, t_im, flag = apply_unit_arrays(re[:, c], im[:, c], action)
                else:
                    t_re, t_im, flag = cmul_arrays(re[:, c], im[:, c], entry.re.raw, entry.im.raw)
                overflow = overflow or flag
                if acc_re is None:
                    acc_re, acc_im = t_re, t_im
                else:
                    acc_re, acc_im, flag = cadd_arrays(acc_re, acc_im, t_re, t_im)
                    overflow = overflow or flag
            if acc_re is not None:
                out_re[:, r] = acc_re
                out_im[:, r] = acc_im
        return out_re, out_im, overflow


@dataclass(frozen=True)
class EntryAction:
    """Output row takes ``unit * input[source]``."""

    source: int
    swap: bool
    re_sign: int
    im_sign: int

    @property
    def unit(self) -> ExactComplex:
        for value, action in _UNIT_ACTIONS.items():
            if action == (self.swap, self.re_sign, self.im_sign):
                return value
        raise ValidationError("entry action is not a unit")

    def conj(self) -> 'EntryAction':
        if self.swap:
            return EntryAction(self.source, True, -self.re_sign, -self.im_sign)
        return self


@dataclass(frozen=True)
class GateMatrix2:
    """4x4 two-input gate as an entry-action table, one action per output row."""

    name: str
    actions: Tuple[EntryAction, ...]

    def __post_init__(self):
        if len(self.actions) != 4 or sorted(a.source for a in self.actions) != [0, 1, 2, 3]:
            raise ValidationError(f"{self.name}: needs one unit entry per row and per column")

    @classmethod
    def from_exact(cls, name: str, rows: Matrix) -> 'GateMatrix2':
        actions = []
        for r, row in enumerate(rows):
            nonzero = [(c, entry) for c, entry in enumerate(row) if not entry.is_zero()]
            if len(nonzero) != 1:
                raise ValidationError(f"{name}: row {r} must have exactly one nonzero entry")
            c, entry = nonzero[0]
            action = unit_action(entry)
            if action is None:
                raise ValidationError(f"{name}: entries must be in {{1, -1, j, -j}}")
            actions.append(EntryAction(c, *action))
        return cls(name, tuple(actions))

    @property
    def exact(self) -> Matrix:
        rows = [[ZERO] * 4 for _ in range(4)]
        for r, action in enumerate(self.actions):
            rows[r][action.source] = action.unit
        return tuple(tuple(row) for row in rows)

    def to_complex(self) -> np.ndarray:
        return np.array([[complex(e) for e in row] for row in self.exact], dtype=np.complex128)

    def dagger(self) -> 'GateMatrix2':
        inverse: List[Optional[EntryAction]] = [None] * 4
        for r, action in enumerate(self.actions):
            conj = action.conj()
            inverse[action.source] = EntryAction(r, conj.swap, conj.re_sign, conj.im_sign)
        return GateMatrix2(f"{self.name}^-1", tuple(inverse))

    def apply_arrays(self, re: np.ndarray, im: np.ndarray) -> Tuple[np.ndarray, np.ndarray, bool]:
        """Apply to every row of (Q, 4) raw arrays; one quartet per row."""
        out_re = np.empty_like(re)
        out_im = np.empty_like(im)
        overflow = False
        for r, action in enumerate(self.actions):
            t_re, t_im, flag = apply_unit_arrays(
                re[:, action.source], im[:, action.source],
                (action.swap, action.re_sign, action.im_sign),
            )
            out_re[:, r] = t_re
            out_im[:, r] = t_im
            overflow = overflow or flag
        return out_re, out_im, overflow


def _m1(name: str, rows) -> GateMatrix1:
    return GateMatrix1(name, tuple(tuple(row) for row in rows))


def _m2_diag(name: str, diag: Sequence[ExactComplex]) -> GateMatrix2:
    rows = tuple(tuple(diag[r] if r == c else ZERO for c in range(4)) for r in range(4))
    return GateMatrix2.from_exact(name, rows)


def _m2_rows(name: str, rows) -> GateMatrix2:
    return GateMatrix2.from_exact(name, tuple(tuple(row) for row in rows))


_PLUS = _c(HALF, HALF)      # (1+j)/2
_MINUS = _c(HALF, -HALF)    # (1-j)/2
_NEG_PLUS = _c(-HALF, -HALF)

_ONE_INPUT: Dict[GateKind, GateMatrix1] = {
    GateKind.NOP: _m1('nop', [[ONE, ZERO], [ZERO, ONE]]),
    GateKind.X: _m1('x', [[ZERO, ONE], [ONE, ZERO]]),
    # gate table convention: [[0, j], [-j, 0]]
    GateKind.Y: _m1('y', [[ZERO, J], [MINUS_J, ZERO]]),
    GateKind.Z: _m1('z', [[ONE, ZERO], [ZERO, MINUS_ONE]]),
    GateKind.H: _m1('h', [[INV_SQRT2, INV_SQRT2], [INV_SQRT2, -INV_SQRT2]]),
    GateKind.V: _m1('v', [[_PLUS, _MINUS], [_MINUS, _PLUS]]),
    GateKind.SY: _m1('sy', [[_PLUS, _NEG_PLUS], [_PLUS, _PLUS]]),
    GateKind.S: _m1('s', [[ONE, ZERO], [ZERO, J]]),
    GateKind.SDG: _m1('sdg', [[ONE, ZERO], [ZERO, MINUS_J]]),
    GateKind.T: _m1('t', [[ONE, ZERO], [ZERO, PHASE_PI_4]]),
    GateKind.TDG: _m1('tdg', [[ONE, ZERO], [ZERO, PHASE_MINUS_PI_4]]),
}

# sub-index is (bit1 = control j, bit0 = target i)
_TWO_INPUT: Dict[GateKind, GateMatrix2] = {
    GateKind.CNOT: _m2_rows('cnot', [
        [ONE, ZERO, ZERO, ZERO],
        [ZERO, ONE, ZERO, ZERO],
        [ZERO, ZERO, ZERO, ONE],
        [ZERO, ZERO, ONE, ZERO],
    ]),
    GateKind.CY: _m2_rows('cy', [
        [ONE, ZERO, ZERO, ZERO],
        [ZERO, ONE, ZERO, ZERO],
        [ZERO, ZERO, ZERO, J],
        [ZERO, ZERO, MINUS_J, ZERO],
    ]),
    GateKind.CZ: _m2_diag('cz', [ONE, ONE, ONE, MINUS_ONE]),
    GateKind.SZZ: _m2_diag('szz', [ONE, J, J, MINUS_ONE]),
    GateKind.SWAP: _m2_rows('swap', [
        [ONE, ZERO, ZERO, ZERO],
        [ZERO, ZERO, ONE, ZERO],
        [ZERO, ONE, ZERO, ZERO],
        [ZERO, ZERO, ZERO, ONE],
    ]),
}


def is_unitary(matrix) -> bool:
    """Exact U^dagger U = I check for a GateMatrix1 or GateMatrix2."""
    return _is_unitary(matrix.exact)


def one_input_matrix(kind: GateKind) -> GateMatrix1:
    """Static matrix of a one-input gate.

    Raises:
        ValidationError: M and the error gates are procedural, two-input kinds have no 2x2 form
    """
    matrix = _ONE_INPUT.get(kind)
    if matrix is None:
        raise ValidationError(f"gate '{kind.keyword}' has no static one-input matrix")
    return matrix


def two_input_matrix(kind: GateKind) -> GateMatrix2:
    """Entry-action table of a two-input gate.

    Args:
        kind: CNOT, CY, CZ, SZZ or SWAP

    Returns:
        GateMatrix2 with one unit entry per row and column

    Raises:
        ValidationError: kind is not a two-input gate
    """
    matrix = _TWO_INPUT.get(kind)
    if matrix is None:
        raise ValidationError(f"gate '{kind.keyword}' is not a two-input gate")
    return matrix


def error_pauli(kind: GateKind) -> GateKind:
    """Pauli gate an error gate applies when it fires."""
    return ERROR_PAULI[kind]


def _raw_pairs(values: Sequence[FixedComplex]) -> Tuple[np.ndarray, np.ndarray]:
    re = np.array([[z.re.raw for z in values]], dtype=np.int64)
    im = np.array([[z.im.raw for z in values]], dtype=np.int64)
    return re, im


def apply1(m: GateMatrix1, pair: Sequence[FixedComplex]) -> List[FixedComplex]:
    """Quantized product of a 2x2 gate with one amplitude pair.

    Sign-only matrices rearrange raw values without rounding; the others
    round each output component once.

    Args:
        m: One-input gate matrix
        pair: Amplitudes with the operand qubit at 0 and 1

    Returns:
        The new pair; overflow flags are sticky
    """
    re, im = _raw_pairs(pair)
    out_re, out_im, overflow = m.apply_arrays(re, im)
    sticky = overflow or any(z.overflow for z in pair)
    return [FixedComplex.from_raw(out_re[0, r], out_im[0, r], sticky) for r in range(2)]


def apply2(m: GateMatrix2, quartet: Sequence[FixedComplex]) -> List[FixedComplex]:
    """Route each output row from its single source component.

    No rounding occurs. For amplitude inputs (components within +-1) no
    overflow flag is set. A raw component of RAW_MIN (-2.0) has no
    representable negation, so a negating entry saturates it to RAW_MAX and
    flags overflow.

    Args:
        m: Two-input entry-action table
        quartet: Amplitudes in sub-index order (bit 1 = control, bit 0 = target)

    Returns:
        The new quartet
    """
    re, im = _raw_pairs(quartet)
    out_re, out_im, overflow = m.apply_arrays(re, im)
    sticky = overflow or any(z.overflow for z in quartet)
    return [FixedComplex.from_raw(out_re[0, r], out_im[0, r], sticky) for r in range(4)]
