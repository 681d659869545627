"""Circuit evaluation on the fixed-point state register.

Every gate is evaluated the same way: the permutation network moves the
operand qubits to the low index bits, the gate pool applies the gate to
all disjoint pairs (or quartets), and the measurement unit reduces and
collapses. In ``deferred`` mode the register keeps whatever ordering the
last gate left and only the final pass restores the identity; in
``literal`` mode every gate is bracketed by a permutation and its inverse.
Both modes run the same kernels and produce bit-identical registers.
"""
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Deque, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    FixedPointOverflowError,
    NumericalCollapseError,
    UnsharpReadoutError,
    ValidationError,
)
from .gatelib import (
    GateKind,
    GateMatrix1,
    GateMatrix2,
    error_pauli,
    one_input_matrix,
    two_input_matrix,
)
from .numerics import (
    EXT_ONE_RAW,
    RECIP_FLOOR_RAW,
    ExtendedReal,
    ext_recip,
    ext_sqrt,
    mag_sq_array,
    scale_arrays,
)
from .permnet import BenesNetwork, RoutingCache, SwitchSettings, target_ordering
from .qstate import N_MAX, QubitOrdering, QuantumStateRegister, tolerance_raw

PRN_BITS = 32
PRN_SCALE = 1 << PRN_BITS


class EngineMode(str, Enum):
    DEFERRED = 'deferred'
    LITERAL = 'literal'


@dataclass(frozen=True)
class GateSpec:
    """One gate instance: target ``i``, optional control ``j``, optional error probability."""

    kind: GateKind
    i: int
    j: Optional[int] = None
    p_err: Optional[float] = None

    def __post_init__(self):
        if self.i < 0 or (self.j is not None and self.j < 0):
            raise ValidationError(f"{self.kind.keyword}: qubit indices must be non-negative")
        if self.kind.arity == 2:
            if self.j is None:
                raise ValidationError(f"{self.kind.keyword} needs a second qubit")
            if self.j == self.i:
                raise ValidationError(f"{self.kind.keyword}: duplicate qubit {self.i}")
        elif self.j is not None:
            raise ValidationError(f"{self.kind.keyword} takes a single qubit")

        if self.kind.is_error:
            if self.p_err is None:
                raise ValidationError(f"{self.kind.keyword} needs an error probability")
            if not 0 <= self.p_err <= 1:
                raise ValidationError(f"{self.kind.keyword}: probability {self.p_err} outside [0, 1]")
        elif self.p_err is not None:
            raise ValidationError(f"{self.kind.keyword} does not take a probability")

    @property
    def qubits(self) -> Tuple[int, ...]:
        return (self.i,) if self.j is None else (self.i, self.j)

    def check_qubits(self, n: int) -> None:
        for qubit in self.qubits:
            if qubit >= n:
                raise ValidationError(f"{self.kind.keyword}: qubit {qubit} out of range for {n} qubits")

    def __str__(self) -> str:
        parts = [self.kind.keyword, *(str(q) for q in self.qubits)]
        if self.p_err is not None:
            parts.append(repr(float(self.p_err)))
        return " ".join(parts)


class Circuit:
    """Append-only ordered gate list; evaluation issues gates from the head."""

    def __init__(self, gates: Iterable[GateSpec] = ()):
        self._gates: List[GateSpec] = list(gates)

    def append(self, spec: GateSpec) -> None:
        self._gates.append(spec)

    def extend(self, specs: Iterable[GateSpec]) -> None:
        self._gates.extend(specs)

    @property
    def gates(self) -> Tuple[GateSpec, ...]:
        return tuple(self._gates)

    def issue(self) -> Deque[GateSpec]:
        """Fresh issue queue; consuming it leaves the circuit intact."""
        return deque(self._gates)

    def validate(self, n: int) -> None:
        for spec in self._gates:
            spec.check_qubits(n)

    def deterministic_prefix(self) -> int:
        """Number of leading gates that draw no randomness."""
        for index, spec in enumerate(self._gates):
            if spec.kind.consumes_randomness:
                return index
        return len(self._gates)

    def __len__(self) -> int:
        return len(self._gates)

    def __iter__(self) -> Iterator[GateSpec]:
        return iter(self._gates)

    def __eq__(self, other) -> bool:
        return isinstance(other, Circuit) and self._gates == other._gates


def prn_from_fraction(value: float) -> int:
    """32-bit raw draw for a value in [0, 1]; 1 maps to the largest draw."""
    if not 0 <= value <= 1:
        raise ValidationError(f"forced prn {value} outside [0, 1]")
    return min(int(Fraction(value) * PRN_SCALE), PRN_SCALE - 1)


class RandomSource:
    """Seeded uniform draws with 32-bit resolution.

    Forced values are consumed first, in order; once exhausted the seeded
    PCG64 stream takes over.
    """

    def __init__(self, seed: int = 0, forced: Sequence[float] = ()):
        if seed < 0 or seed >= 1 << 64:
            raise ValidationError(f"seed {seed} is not a 64-bit unsigned value")
        self.seed = seed
        self._generator = np.random.Generator(np.random.PCG64(seed))
        self._forced: Deque[int] = deque(prn_from_fraction(v) for v in forced)
        self.draws = 0

    def force(self, *values: float) -> None:
        self._forced.extend(prn_from_fraction(v) for v in values)

    def next_raw(self) -> int:
        self.draws += 1
        if self._forced:
            return self._forced.popleft()
        return int(self._generator.integers(0, PRN_SCALE, dtype=np.uint64))

    def next_uniform(self) -> float:
        return self.next_raw() / PRN_SCALE

    def fires(self, probability: float) -> Tuple[bool, int]:
        """Draw once; True when the draw falls below ``probability``."""
        raw = self.next_raw()
        threshold = int(Fraction(probability) * PRN_SCALE)
        return raw < threshold, raw


@dataclass(frozen=True)
class MeasurementOutcome:
    qubit: int
    bit: int
    p0: ExtendedReal
    sharp: bool
    prn: Optional[int] = None


@dataclass(frozen=True)
class ReadoutResult:
    index: int
    n: int

    @property
    def hex(self) -> str:
        return f"0x{self.index:x}"


@dataclass(frozen=True)
class TraceRecord:
    """One line of the evaluation trace."""

    seq: int
    kind: str
    qubits: Tuple[int, ...]
    prn: Optional[int]
    ordering_after: QubitOrdering
    passes: int
    routing: Tuple[SwitchSettings, ...] = field(default=(), compare=False, repr=False)

    def format(self) -> str:
        prn = "-" if self.prn is None else f"0x{self.prn:08x}"
        qubits = ",".join(str(q) for q in self.qubits) or "-"
        return f"{self.seq} {self.kind} {qubits} {prn} {self.ordering_after}"


@dataclass(frozen=True)
class OpCounts:
    gate_evaluations: int = 0
    permutation_passes: int = 0
    measurement_reductions: int = 0

    def as_dict(self) -> Dict[str, int]:
        return {
            'gate_evaluations': self.gate_evaluations,
            'permutation_passes': self.permutation_passes,
            'measurement_reductions': self.measurement_reductions,
        }


RESTORE_KIND = 'restore'


def op_counts(trace: Sequence[TraceRecord]) -> OpCounts:
    """Deterministic operation tally; the final restore pass is not counted."""
    gates = passes = reductions = 0
    for record in trace:
        if record.kind == RESTORE_KIND:
            continue
        passes += record.passes
        if record.kind == GateKind.M.keyword:
            reductions += 1
        else:
            gates += 1
    return OpCounts(gates, passes, reductions)


@dataclass(frozen=True)
class Tolerances:
    """Exponents of the 2^n * 2^exp tolerances used by measurement and readout.

    The sharpness and readout windows grow with n up to 2^sharp_cap_exp and
    2^readout_cap_exp, keeping tau well below 1/2 and rho below 1 for every
    supported register width.
    """

    sharp_exp: int = -17
    readout_exp: int = -14
    drift_exp: int = -15
    sharp_cap_exp: int = -8
    readout_cap_exp: int = -3

    def sharp(self, n: int) -> ExtendedReal:
        """Sharpness window tau(n) for a single-qubit probability.

        Args:
            n: Register width

        Returns:
            min(2^n * 2^sharp_exp, 2^sharp_cap_exp)
        """
        return ExtendedReal(min(tolerance_raw(n, self.sharp_exp), tolerance_raw(0, self.sharp_cap_exp)))

    def readout(self, n: int) -> ExtendedReal:
        """Readout window rho(n), capped at 2^readout_cap_exp."""
        return ExtendedReal(min(tolerance_raw(n, self.readout_exp), tolerance_raw(0, self.readout_cap_exp)))

    def drift(self, n: int) -> ExtendedReal:
        return ExtendedReal(tolerance_raw(n, self.drift_exp))


class Engine:
    """Gate issue, permutation, gate pools and measurement for one trial at a time."""

    def __init__(self, mode: EngineMode = EngineMode.DEFERRED, tolerances: Optional[Tolerances] = None,
                 n_max: int = N_MAX):
        self.mode = EngineMode(mode)
        self.tolerances = tolerances or Tolerances()
        self.n_max = n_max
        self.trace: List[TraceRecord] = []
        self._caches: Dict[int, RoutingCache] = {}

    def routing_cache(self, n: int) -> RoutingCache:
        cache = self._caches.get(n)
        if cache is None:
            cache = RoutingCache(BenesNetwork(n))
            self._caches[n] = cache
        return cache

    def reset_trace(self) -> None:
        self.trace = []

    # permutation stage

    def _permute(self, qsr: QuantumStateRegister, target: QubitOrdering) -> SwitchSettings:
        settings, gather = self.routing_cache(qsr.n).lookup(qsr.ordering, target)
        qsr.re = qsr.re[gather]
        qsr.im = qsr.im[gather]
        qsr.ordering = target
        return settings

    def _bring_forward(self, qsr: QuantumStateRegister, i: int, j: Optional[int] = None) -> SwitchSettings:
        return self._permute(qsr, target_ordering(qsr.ordering, i, j))

    def _finish(self, qsr: QuantumStateRegister, routing: List[SwitchSettings]) -> int:
        """Undo the operand permutation in literal mode; returns passes used by the gate."""
        if self.mode is EngineMode.LITERAL:
            routing.append(self._permute(qsr, QubitOrdering.identity(qsr.n)))
            return 2
        return 1

    def _record(self, kind: str, qubits: Tuple[int, ...], prn: Optional[int],
                qsr: QuantumStateRegister, passes: int, routing: Sequence[SwitchSettings]) -> None:
        self.trace.append(TraceRecord(len(self.trace), kind, qubits, prn, qsr.ordering, passes, tuple(routing)))

    def restore_identity(self, qsr: QuantumStateRegister) -> QuantumStateRegister:
        """Final inverse permutation back to the identity ordering."""
        if not qsr.ordering.is_identity:
            settings = self._permute(qsr, QubitOrdering.identity(qsr.n))
            self._record(RESTORE_KIND, (), None, qsr, 1, [settings])
        return qsr

    # gate pools

    @staticmethod
    def _apply_pool(qsr: QuantumStateRegister, matrix, width: int) -> None:
        re, im, overflow = matrix.apply_arrays(qsr.re.reshape(-1, width), qsr.im.reshape(-1, width))
        qsr.re = re.reshape(-1)
        qsr.im = im.reshape(-1)
        if overflow:
            qsr.overflow = True
            raise FixedPointOverflowError(f"gate {matrix.name} saturated an amplitude component")

    def evaluate_gate1(self, qsr: QuantumStateRegister, spec: GateSpec, rng: RandomSource) -> QuantumStateRegister:
        """
        Bring the operand to bit 0 and run the pair pool.

        Error gates draw one prn and apply their Pauli or Nop.

        Args:
            qsr: Register, updated in place
            spec: One-input gate other than M
            rng: Prn source for error gates

        Returns:
            The same register

        Raises:
            FixedPointOverflowError: a component saturated
        """
        if spec.kind.arity != 1 or spec.kind.is_measurement:
            raise ValidationError(f"{spec.kind.keyword} is not a one-input gate")
        spec.check_qubits(qsr.n)

        prn = None
        if spec.kind.is_error:
            fired, prn = rng.fires(spec.p_err)
            matrix: GateMatrix1 = one_input_matrix(error_pauli(spec.kind) if fired else GateKind.NOP)
        else:
            matrix = one_input_matrix(spec.kind)

        routing = [self._bring_forward(qsr, spec.i)]
        self._apply_pool(qsr, matrix, 2)
        passes = self._finish(qsr, routing)
        self._record(spec.kind.keyword, spec.qubits, prn, qsr, passes, routing)
        return qsr

    def evaluate_gate2(self, qsr: QuantumStateRegister, spec: GateSpec, rng: RandomSource) -> QuantumStateRegister:
        """Bring target and control to bits 0 and 1 and run the quartet pool."""
        if spec.kind.arity != 2:
            raise ValidationError(f"{spec.kind.keyword} is not a two-input gate")
        spec.check_qubits(qsr.n)
        matrix: GateMatrix2 = two_input_matrix(spec.kind)

        # quartet sub-index: bit 1 = j (control), bit 0 = i (target)
        routing = [self._bring_forward(qsr, spec.i, spec.j)]
        self._apply_pool(qsr, matrix, 4)
        passes = self._finish(qsr, routing)
        self._record(spec.kind.keyword, spec.qubits, None, qsr, passes, routing)
        return qsr

    def measure(self, qsr: QuantumStateRegister, qubit: int,
                rng: RandomSource) -> Tuple[QuantumStateRegister, MeasurementOutcome]:
        """Reduce, decide and collapse one qubit.

        Raises:
            NumericalCollapseError: the winning probability is below 2^-14
        """
        if not 0 <= qubit < qsr.n:
            raise ValidationError(f"m: qubit {qubit} out of range for {qsr.n} qubits")
        routing = [self._bring_forward(qsr, qubit)]

        re = qsr.re.reshape(-1, 2)
        im = qsr.im.reshape(-1, 2)
        # integer sums are exact, so the reduction order cannot change the result
        p0 = int(mag_sq_array(re[:, 0], im[:, 0]).sum())
        p1 = int(mag_sq_array(re[:, 1], im[:, 1]).sum())
        tau = self.tolerances.sharp(qsr.n).raw

        prn = None
        if p0 <= tau:
            bit, sharp = 1, True
        elif abs(p0 - EXT_ONE_RAW) <= tau:
            bit, sharp = 0, True
        else:
            sharp = False
            prn = rng.next_raw()
            # prn/2^32 < p0/2^32
            bit = 0 if prn < p0 else 1
            p_win = p0 if bit == 0 else p1
            if p_win < RECIP_FLOOR_RAW:
                raise NumericalCollapseError(
                    f"winning probability {p_win / EXT_ONE_RAW:.3g} for qubit {qubit} below 2^-14"
                )
            factor = ext_recip(ext_sqrt(ExtendedReal(p_win)))
            keep_re, keep_im, overflow = scale_arrays(re[:, bit], im[:, bit], factor)
            out_re = np.zeros_like(re)
            out_im = np.zeros_like(im)
            out_re[:, bit] = keep_re
            out_im[:, bit] = keep_im
            qsr.re = out_re.reshape(-1)
            qsr.im = out_im.reshape(-1)
            if overflow:
                qsr.overflow = True
                raise FixedPointOverflowError(f"collapse of qubit {qubit} saturated an amplitude component")

        qsr.mark_measured(qubit, bit)
        passes = self._finish(qsr, routing)
        self._record(GateKind.M.keyword, (qubit,), prn, qsr, passes, routing)
        return qsr, MeasurementOutcome(qubit, bit, ExtendedReal(p0), sharp, prn)

    # circuit evaluation

    def evaluate_gates(self, qsr: QuantumStateRegister, gates: Iterable[GateSpec],
                       rng: RandomSource) -> List[MeasurementOutcome]:
        """Issue and dispatch gates without the final restore."""
        queue = gates.issue() if isinstance(gates, Circuit) else deque(gates)
        outcomes = []
        while queue:
            spec = queue.popleft()
            if spec.kind.is_measurement:
                _, outcome = self.measure(qsr, spec.i, rng)
                outcomes.append(outcome)
            elif spec.kind.arity == 2:
                self.evaluate_gate2(qsr, spec, rng)
            else:
                self.evaluate_gate1(qsr, spec, rng)
        return outcomes

    def evaluate_circuit(self, qsr: QuantumStateRegister, circuit: Circuit,
                         rng: RandomSource) -> Tuple[QuantumStateRegister, List[MeasurementOutcome]]:
        """Evaluate ``circuit`` in place; the register ends in identity ordering.

        All gate specs are checked against the register before any gate runs.
        """
        if qsr.n > self.n_max:
            raise ValidationError(f"register of {qsr.n} qubits exceeds the {self.n_max}-qubit limit")
        circuit.validate(qsr.n)
        outcomes = self.evaluate_gates(qsr, circuit, rng)
        self.restore_identity(qsr)
        return qsr, outcomes

    def rrm_readout(self, qsr: QuantumStateRegister) -> ReadoutResult:
        """Index of the single surviving basis state.

        Raises:
            UnsharpReadoutError: no single component has weight within rho(n) of 1
        """
        self.restore_identity(qsr)
        rho = self.tolerances.readout(qsr.n).raw
        weights = mag_sq_array(qsr.re, qsr.im)
        heavy = np.flatnonzero(weights >= EXT_ONE_RAW - rho)
        if len(heavy) == 1:
            rest = np.delete(weights, heavy[0])
            if rest.size == 0 or int(rest.max()) <= rho:
                return ReadoutResult(int(heavy[0]), qsr.n)
        raise UnsharpReadoutError("register does not hold a single basis state")


# kind -> (kind of the inverse, repetitions)
_INVERSE_GATES = {
    GateKind.NOP: (GateKind.NOP, 1),
    GateKind.X: (GateKind.X, 1),
    GateKind.Y: (GateKind.Y, 1),
    GateKind.Z: (GateKind.Z, 1),
    GateKind.H: (GateKind.H, 1),
    GateKind.S: (GateKind.SDG, 1),
    GateKind.SDG: (GateKind.S, 1),
    GateKind.T: (GateKind.TDG, 1),
    GateKind.TDG: (GateKind.T, 1),
    GateKind.V: (GateKind.V, 3),
    GateKind.SY: (GateKind.SY, 3),
    GateKind.CNOT: (GateKind.CNOT, 1),
    GateKind.CY: (GateKind.CY, 1),
    GateKind.CZ: (GateKind.CZ, 1),
    GateKind.SZZ: (GateKind.SZZ, 3),
    GateKind.SWAP: (GateKind.SWAP, 1),
}


def inverse_circuit(circuit: Circuit) -> Circuit:
    """Exact inverse of a unitary circuit using only gates from the library.

    Raises:
        ValidationError: the circuit contains measurement or error gates
    """
    inverse = Circuit()
    for spec in reversed(circuit.gates):
        entry = _INVERSE_GATES.get(spec.kind)
        if entry is None:
            raise ValidationError(f"{spec.kind.keyword} has no unitary inverse")
        kind, repeat = entry
        inverse.extend(GateSpec(kind, spec.i, spec.j) for _ in range(repeat))
    return inverse
