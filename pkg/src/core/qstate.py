"""Quantum State Register (QSR) and Initialization Manager.

The register stores 2^n fixed-point amplitudes in *physical* index order
together with the ordering that maps each logical qubit to the index bit
currently holding it. After a circuit completes the ordering is the
identity and physical and logical indices coincide.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import DegenerateStateError, NumericDomainError, ValidationError
from .numerics import (
    EXT_FRAC_BITS,
    ExtendedReal,
    FixedComplex,
    ONE_RAW,
    ext_recip,
    ext_sqrt,
    mag_sq_array,
    quantize_complex,
    scale_arrays,
)

N_MAX = 16
DRIFT_TOLERANCE_EXP = -15


def tolerance_raw(n: int, exp: int) -> int:
    """2^n * 2^exp expressed in ExtendedReal raw units."""
    shift = n + exp + EXT_FRAC_BITS
    return 1 << shift if shift >= 0 else 0


def drift_budget(n: int, exp: int = DRIFT_TOLERANCE_EXP) -> ExtendedReal:
    """Allowed |norm_sq - 1| for an n-qubit register (epsilon(n))."""
    return ExtendedReal(tolerance_raw(n, exp))


@dataclass(frozen=True)
class QubitOrdering:
    """``perm[k]`` is the index bit currently holding logical qubit ``k``."""

    perm: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'perm', tuple(int(p) for p in self.perm))
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValidationError(f"ordering {self.perm} is not a permutation of bit positions")

    @classmethod
    def identity(cls, n: int) -> 'QubitOrdering':
        return cls(tuple(range(n)))

    @property
    def n(self) -> int:
        return len(self.perm)

    @property
    def is_identity(self) -> bool:
        return all(bit == qubit for qubit, bit in enumerate(self.perm))

    def position_of(self, qubit: int) -> int:
        return self.perm[qubit]

    def qubit_at(self, bit: int) -> int:
        return self.perm.index(bit)

    def __str__(self) -> str:
        return ",".join(str(bit) for bit in self.perm)


@dataclass
class QuantumStateRegister:
    """2^n amplitudes (raw int64 real/imag planes) plus ordering and measurement flags."""

    n: int
    re: np.ndarray
    im: np.ndarray
    ordering: QubitOrdering
    measured: Dict[int, int] = field(default_factory=dict)
    overflow: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("a register needs at least one qubit")
        size = 1 << self.n
        if len(self.re) != size or len(self.im) != size:
            raise ValidationError(f"register of {self.n} qubits needs exactly {size} amplitudes")
        if self.ordering.n != self.n:
            raise ValidationError("ordering does not match qubit count")

    @property
    def size(self) -> int:
        return 1 << self.n

    def amplitude(self, index: int) -> FixedComplex:
        return FixedComplex.from_raw(int(self.re[index]), int(self.im[index]))

    def amplitudes(self) -> List[FixedComplex]:
        return [self.amplitude(i) for i in range(self.size)]

    def to_complex(self) -> np.ndarray:
        """Amplitude values interpreted exactly as raw / 2^16."""
        return (self.re + 1j * self.im) / ONE_RAW

    def copy(self) -> 'QuantumStateRegister':
        return QuantumStateRegister(
            self.n, self.re.copy(), self.im.copy(), self.ordering,
            dict(self.measured), self.overflow,
        )

    def mark_measured(self, qubit: int, bit: int) -> None:
        self.measured[qubit] = bit

    def all_measured(self) -> bool:
        return len(self.measured) == self.n

    def dump(self) -> str:
        """Text dump: header line then ``index_hex re_raw im_raw`` per amplitude."""
        lines = [f"n={self.n} ordering={self.ordering}"]
        for index in range(self.size):
            lines.append(f"0x{index:x} {int(self.re[index])} {int(self.im[index])}")
        return "\n".join(lines) + "\n"


def _check_qubit_count(n: int, n_max: int) -> None:
    if not 1 <= n <= n_max:
        raise ValidationError(f"qubit count {n} outside 1..{n_max}")


def init_basis(n: int, index: int, n_max: int = N_MAX) -> QuantumStateRegister:
    """Register holding the sharp basis state ``|index>``."""
    _check_qubit_count(n, n_max)
    if not 0 <= index < (1 << n):
        raise ValidationError(f"basis index {index} out of range for {n} qubits")
    re = np.zeros(1 << n, dtype=np.int64)
    im = np.zeros(1 << n, dtype=np.int64)
    re[index] = ONE_RAW
    return QuantumStateRegister(n, re, im, QubitOrdering.identity(n))


def norm_sq(qsr: QuantumStateRegister) -> ExtendedReal:
    """
    Exact sum of squared magnitudes.

    Args:
        qsr: Register in any ordering

    Returns:
        ExtendedReal total; the integer sum has no rounding
    """
    return ExtendedReal(int(np.sum(mag_sq_array(qsr.re, qsr.im))))


def init_arbitrary(n: int, raw_amps: Sequence, n_max: int = N_MAX) -> QuantumStateRegister:
    """Quantize the given amplitudes, then normalize them in fixed point.

    Normalization multiplies every component by 1/sqrt(norm_sq) computed with
    ext_sqrt and ext_recip, the same path the measurement collapse uses.

    Raises:
        DegenerateStateError: all amplitudes are zero or the norm is too small
    """
    _check_qubit_count(n, n_max)
    if len(raw_amps) != 1 << n:
        raise ValidationError(f"expected {1 << n} amplitudes, got {len(raw_amps)}")

    quantized = [quantize_complex(a) for a in raw_amps]
    re = np.array([z.re.raw for z in quantized], dtype=np.int64)
    im = np.array([z.im.raw for z in quantized], dtype=np.int64)

    total = ExtendedReal(int(np.sum(mag_sq_array(re, im))))
    if total.raw == 0:
        raise DegenerateStateError("initial state has all-zero amplitudes")
    try:
        factor = ext_recip(ext_sqrt(total))
    except NumericDomainError as e:
        raise DegenerateStateError(f"initial state cannot be normalized: {e}") from e

    re, im, overflow = scale_arrays(re, im, factor)
    return QuantumStateRegister(n, re, im, QubitOrdering.identity(n), overflow=overflow)
