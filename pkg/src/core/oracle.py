"""Double-precision reference simulator and comparison metrics.

The oracle applies gates straight to bit-selected index pairs and quartets
with complex128 arithmetic: no permutation network, no fixed point. It
draws from the same RandomSource at the same points as the engine, so a
shared seed gives a shared trajectory whenever no draw is marginal.
"""
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .engine import Circuit, GateSpec, RandomSource, ReadoutResult, Tolerances
from .errors import UnsharpReadoutError, ValidationError
from .gatelib import GateKind, error_pauli, one_input_matrix, two_input_matrix
from .histogram import TrialHistogram, format_state
from .qstate import N_MAX, QuantumStateRegister

PRN_SCALE = float(1 << 32)


@dataclass
class OracleState:
    n: int
    amps: np.ndarray
    measured: Dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=np.complex128)
        if self.amps.shape != (1 << self.n,):
            raise ValidationError(f"oracle state of {self.n} qubits needs {1 << self.n} amplitudes")

    @classmethod
    def basis(cls, n: int, index: int = 0) -> 'OracleState':
        if not 0 <= index < 1 << n:
            raise ValidationError(f"basis index {index} out of range for {n} qubits")
        amps = np.zeros(1 << n, dtype=np.complex128)
        amps[index] = 1.0
        return cls(n, amps)

    @classmethod
    def from_amplitudes(cls, n: int, values: Sequence[complex]) -> 'OracleState':
        amps = np.asarray(values, dtype=np.complex128)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValidationError("initial state has all-zero amplitudes")
        return cls(n, amps / norm)

    def norm_sq(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def copy(self) -> 'OracleState':
        return OracleState(self.n, self.amps.copy(), dict(self.measured))


@dataclass(frozen=True)
class OracleOutcome:
    qubit: int
    bit: int
    p0: float
    sharp: bool
    prn: Optional[int] = None


def _pair_indices(n: int, i: int) -> Tuple[np.ndarray, np.ndarray]:
    indices = np.arange(1 << n)
    zeros = indices[((indices >> i) & 1) == 0]
    return zeros, zeros | (1 << i)


def oracle_apply1(state: OracleState, matrix: np.ndarray, i: int) -> None:
    zeros, ones = _pair_indices(state.n, i)
    a0 = state.amps[zeros]
    a1 = state.amps[ones]
    state.amps[zeros] = matrix[0, 0] * a0 + matrix[0, 1] * a1
    state.amps[ones] = matrix[1, 0] * a0 + matrix[1, 1] * a1


def oracle_apply2(state: OracleState, matrix: np.ndarray, i: int, j: int) -> None:
    """Apply a 4x4 matrix with sub-index (bit 1 = qubit j, bit 0 = qubit i)."""
    indices = np.arange(1 << state.n)
    base = indices[(((indices >> i) & 1) == 0) & (((indices >> j) & 1) == 0)]
    quartets = np.stack([base, base | (1 << i), base | (1 << j), base | (1 << i) | (1 << j)], axis=1)
    state.amps[quartets] = state.amps[quartets] @ matrix.T


def oracle_measure(state: OracleState, qubit: int, rng: RandomSource,
                   tolerances: Optional[Tolerances] = None) -> OracleOutcome:
    tolerances = tolerances or Tolerances()
    zeros, ones = _pair_indices(state.n, qubit)
    p0 = float(np.sum(np.abs(state.amps[zeros]) ** 2))
    tau = float(tolerances.sharp(state.n))

    prn = None
    if p0 <= tau:
        bit, sharp = 1, True
    elif abs(p0 - 1.0) <= tau:
        bit, sharp = 0, True
    else:
        sharp = False
        prn = rng.next_raw()
        bit = 0 if prn / PRN_SCALE < p0 else 1
        keep, lose = (zeros, ones) if bit == 0 else (ones, zeros)
        p_win = float(np.sum(np.abs(state.amps[keep]) ** 2))
        state.amps[lose] = 0
        state.amps[keep] /= np.sqrt(p_win)
    state.measured[qubit] = bit
    return OracleOutcome(qubit, bit, p0, sharp, prn)


def oracle_gate(state: OracleState, spec: GateSpec, rng: RandomSource,
                tolerances: Optional[Tolerances] = None) -> Optional[OracleOutcome]:
    """Apply one gate; returns the outcome for measurements."""
    spec.check_qubits(state.n)
    if spec.kind.is_measurement:
        return oracle_measure(state, spec.i, rng, tolerances)
    if spec.kind.arity == 2:
        oracle_apply2(state, two_input_matrix(spec.kind).to_complex(), spec.i, spec.j)
        return None
    kind = spec.kind
    if kind.is_error:
        fired, _ = rng.fires(spec.p_err)
        kind = error_pauli(kind) if fired else GateKind.NOP
    oracle_apply1(state, one_input_matrix(kind).to_complex(), spec.i)
    return None


def oracle_evaluate(circuit: Circuit, n: int, rng: RandomSource, initial: Optional[OracleState] = None,
                    tolerances: Optional[Tolerances] = None) -> Tuple[OracleState, List[OracleOutcome]]:
    """Evaluate ``circuit`` from ``initial`` (default |0...0>)."""
    if not 1 <= n <= N_MAX:
        raise ValidationError(f"qubit count {n} outside 1..{N_MAX}")
    circuit.validate(n)
    state = initial.copy() if initial is not None else OracleState.basis(n)
    if state.n != n:
        raise ValidationError("initial oracle state does not match qubit count")
    outcomes = []
    for spec in circuit:
        outcome = oracle_gate(state, spec, rng, tolerances)
        if outcome is not None:
            outcomes.append(outcome)
    return state, outcomes


def oracle_readout(state: OracleState, tolerances: Optional[Tolerances] = None) -> ReadoutResult:
    """Single surviving basis state, with the same rho(n) window as the engine's readout."""
    tolerances = tolerances or Tolerances()
    rho = float(tolerances.readout(state.n))
    weights = np.abs(state.amps) ** 2
    heavy = np.flatnonzero(weights >= 1.0 - rho)
    if len(heavy) == 1:
        rest = np.delete(weights, heavy[0])
        if rest.size == 0 or float(rest.max()) <= rho:
            return ReadoutResult(int(heavy[0]), state.n)
    raise UnsharpReadoutError("oracle state does not hold a single basis state")


@dataclass(frozen=True)
class ComparisonRow:
    state: int
    count_a: int
    mu_a: float
    count_b: int
    mu_b: float


@dataclass
class ComparisonReport:
    """State or distribution comparison between two sources.

    For states the per-component differences are complex magnitudes; for
    distributions they are differences of empirical probabilities. Both
    cases report over all 2^n basis states.
    """

    kind: str
    n: int
    max_abs_diff: float
    mean_abs_diff: float
    euclidean_distance: float
    mae_std: float
    labels: Tuple[str, str] = ('engine', 'oracle')
    rows: List[ComparisonRow] = field(default_factory=list)
    others: Tuple[float, float] = (0.0, 0.0)
    others_counts: Tuple[int, int] = (0, 0)
    unsharp: Tuple[int, int] = (0, 0)
    totals: Tuple[int, int] = (0, 0)

    @property
    def mae(self) -> float:
        return self.mean_abs_diff

    def to_dict(self) -> Dict:
        a, b = self.labels
        data = {
            'kind': self.kind,
            'n': self.n,
            'max_abs_diff': self.max_abs_diff,
            'mean_abs_diff': self.mean_abs_diff,
            'euclidean_distance': self.euclidean_distance,
            'mae': self.mae,
            'mae_std': self.mae_std,
        }
        if self.kind == 'distributions':
            data['labels'] = list(self.labels)
            data['totals'] = {a: self.totals[0], b: self.totals[1]}
            data['rows'] = [
                {'state': format_state(row.state), f'{a}_count': row.count_a, f'{a}_mu': row.mu_a,
                 f'{b}_count': row.count_b, f'{b}_mu': row.mu_b}
                for row in self.rows
            ]
            data['others'] = {
                f'{a}_count': self.others_counts[0], f'{a}_mu': self.others[0],
                f'{b}_count': self.others_counts[1], f'{b}_mu': self.others[1],
            }
            data['unsharp'] = {a: self.unsharp[0], b: self.unsharp[1]}
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def format_table(self) -> str:
        """Per-state table (state, count and mu per source) followed by the summary statistics."""
        lines = []
        if self.kind == 'distributions':
            a, b = self.labels
            width = max(5, len(format_state((1 << self.n) - 1)), len('others'))
            lines.append(f"{'state':<{width}}  {a + ' n':>12}  {a + ' mu':>12}  {b + ' n':>12}  {b + ' mu':>12}")
            for row in self.rows:
                lines.append(
                    f"{format_state(row.state):<{width}}  {row.count_a:>12}  {row.mu_a:>12.5f}"
                    f"  {row.count_b:>12}  {row.mu_b:>12.5f}"
                )
            lines.append(
                f"{'others':<{width}}  {self.others_counts[0]:>12}  {self.others[0]:>12.5f}"
                f"  {self.others_counts[1]:>12}  {self.others[1]:>12.5f}"
            )
            if any(self.unsharp):
                lines.append(f"{'unsharp':<{width}}  {self.unsharp[0]:>12}  {'':>12}  {self.unsharp[1]:>12}")
            lines.append("")
        lines.append(f"euclidean distance: {self.euclidean_distance:.6e}")
        lines.append(f"mean absolute error: {self.mae:.6e}")
        lines.append(f"mae standard deviation: {self.mae_std:.6e}")
        lines.append(f"max abs difference: {self.max_abs_diff:.6e}")
        return "\n".join(lines) + "\n"


def _summary(diff: np.ndarray) -> Tuple[float, float, float, float]:
    return (
        float(diff.max()) if diff.size else 0.0,
        float(diff.mean()) if diff.size else 0.0,
        float(np.sqrt(np.sum(diff ** 2))),
        float(diff.std()) if diff.size else 0.0,
    )


def compare_states(engine_qsr: QuantumStateRegister, oracle_state: OracleState) -> ComparisonReport:
    """Per-component |fixed - double| with fixed values read exactly as raw / 2^16."""
    if engine_qsr.n != oracle_state.n:
        raise ValidationError(f"cannot compare {engine_qsr.n}-qubit and {oracle_state.n}-qubit states")
    if not engine_qsr.ordering.is_identity:
        raise ValidationError("engine register must be in identity ordering for comparison")
    diff = np.abs(engine_qsr.to_complex() - oracle_state.amps)
    max_diff, mean_diff, distance, spread = _summary(diff)
    return ComparisonReport('states', engine_qsr.n, max_diff, mean_diff, distance, spread)


def compare_distributions(h1: TrialHistogram, h2: TrialHistogram,
                          labels: Tuple[str, str] = ('engine', 'oracle')) -> ComparisonReport:
    """Euclidean distance, MAE and its spread between two empirical distributions.

    The table lists the states both sides observed; ``others`` holds each
    side's mass on states the other side never produced.
    """
    if h1.n != h2.n:
        raise ValidationError(f"cannot compare {h1.n}-qubit and {h2.n}-qubit histograms")
    mu1 = h1.probabilities()
    mu2 = h2.probabilities()
    diff = np.abs(mu1 - mu2)
    max_diff, mean_diff, distance, spread = _summary(diff)

    common = set(h1.states()) & set(h2.states())
    rows = [
        ComparisonRow(s, h1.counts[s], float(mu1[s]), h2.counts[s], float(mu2[s]))
        for s in sorted(common)
    ]
    only1 = [s for s in h1.states() if s not in common]
    only2 = [s for s in h2.states() if s not in common]
    others = (float(sum(mu1[s] for s in only1)), float(sum(mu2[s] for s in only2)))
    others_counts = (sum(h1.counts[s] for s in only1), sum(h2.counts[s] for s in only2))

    return ComparisonReport(
        'distributions', h1.n, max_diff, mean_diff, distance, spread, labels, rows,
        others, others_counts, (h1.unsharp, h2.unsharp), (h1.total, h2.total),
    )
