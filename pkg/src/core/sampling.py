"""Trial sampling for the engine and the oracle.

Each trial gets its own seed mixed from (seed, trial index), so any trial
can be replayed alone. Gates before the first randomness-consuming gate
are evaluated once per worker and every trial continues from a copy of
that register.
"""
from concurrent.futures import ProcessPoolExecutor
from enum import Enum
from typing import List, Optional, Sequence, Tuple

from .circuitio import CircuitDocument
from .engine import Engine, EngineMode, RandomSource, Tolerances
from .errors import UnsharpReadoutError, ValidationError
from .histogram import TrialHistogram
from .oracle import OracleState, oracle_gate, oracle_readout
from .qstate import N_MAX, QuantumStateRegister, init_basis

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class Backend(str, Enum):
    ENGINE = 'engine'
    ORACLE = 'oracle'


def mix64(z: int) -> int:
    """SplitMix64 output finalizer."""
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def trial_seed(seed: int, index: int) -> int:
    """Seed of trial ``index``: the (index+1)-th SplitMix64 output seeded with ``seed``."""
    if index < 0:
        raise ValidationError(f"trial index {index} must be non-negative")
    return mix64((seed + (index + 1) * GOLDEN_GAMMA) & MASK64)


def stream_seed(seed: int, stream: int) -> int:
    """Base seed of an independent trial stream (engine 0, oracle 1, ...)."""
    return mix64((mix64(seed & MASK64) ^ ((stream + 1) * GOLDEN_GAMMA)) & MASK64)


def _chunks(trials: int, jobs: int) -> List[Tuple[int, int]]:
    jobs = max(1, min(jobs, trials))
    step, extra = divmod(trials, jobs)
    bounds = []
    start = 0
    for k in range(jobs):
        stop = start + step + (1 if k < extra else 0)
        bounds.append((start, stop))
        start = stop
    return bounds


def _engine_chunk(doc: CircuitDocument, seed: int, start: int, stop: int, mode: EngineMode,
                  tolerances: Tolerances, forced: Tuple[float, ...],
                  initial: Optional[QuantumStateRegister]) -> TrialHistogram:
    engine = Engine(mode, tolerances)
    gates = doc.gates
    prefix = doc.circuit.deterministic_prefix()

    base = initial.copy() if initial is not None else init_basis(doc.n, 0)
    engine.evaluate_gates(base, gates[:prefix], RandomSource(seed))
    rest = gates[prefix:]

    histogram = TrialHistogram(doc.n)
    for index in range(start, stop):
        qsr = base.copy()
        engine.reset_trace()
        engine.evaluate_gates(qsr, rest, RandomSource(trial_seed(seed, index), forced))
        try:
            histogram.add(engine.rrm_readout(qsr).index)
        except UnsharpReadoutError:
            histogram.add_unsharp()
    return histogram


def _oracle_chunk(doc: CircuitDocument, seed: int, start: int, stop: int, tolerances: Tolerances,
                  forced: Tuple[float, ...], initial: Optional[OracleState]) -> TrialHistogram:
    gates = doc.gates
    prefix = doc.circuit.deterministic_prefix()

    base = initial.copy() if initial is not None else OracleState.basis(doc.n)
    prefix_rng = RandomSource(seed)
    for spec in gates[:prefix]:
        oracle_gate(base, spec, prefix_rng, tolerances)
    rest = gates[prefix:]

    histogram = TrialHistogram(doc.n)
    for index in range(start, stop):
        state = base.copy()
        rng = RandomSource(trial_seed(seed, index), forced)
        for spec in rest:
            oracle_gate(state, spec, rng, tolerances)
        try:
            histogram.add(oracle_readout(state, tolerances).index)
        except UnsharpReadoutError:
            histogram.add_unsharp()
    return histogram


def _run_chunk(backend: Backend, doc: CircuitDocument, seed: int, bounds: Tuple[int, int],
               mode: EngineMode, tolerances: Tolerances, forced: Tuple[float, ...], initial) -> TrialHistogram:
    start, stop = bounds
    if backend is Backend.ENGINE:
        return _engine_chunk(doc, seed, start, stop, mode, tolerances, forced, initial)
    return _oracle_chunk(doc, seed, start, stop, tolerances, forced, initial)


def run_trials(doc: CircuitDocument, trials: int, seed: int, backend: Backend = Backend.ENGINE,
               jobs: int = 1, mode: EngineMode = EngineMode.DEFERRED,
               tolerances: Optional[Tolerances] = None, forced: Sequence[float] = (),
               initial=None) -> TrialHistogram:
    """
    Sample ``trials`` independent runs of ``doc`` into a histogram.

    Args:
        doc: Circuit to sample; every qubit should be measured by the end
        trials: Number of trials, at least 1
        seed: Base seed; trial k uses trial_seed(seed, k)
        backend: engine or oracle
        jobs: Worker processes; 1 runs serially in this process
        mode: Engine permutation mode
        tolerances: Sharpness and readout tolerances
        forced: prn values every trial consumes before its seeded stream
        initial: Starting register (QuantumStateRegister or OracleState), default |0...0>

    Returns:
        Merged histogram; trials that did not read out sharp count as unsharp
    """
    if trials < 1:
        raise ValidationError("at least one trial is required")
    if not 1 <= doc.n <= N_MAX:
        raise ValidationError(f"qubit count {doc.n} outside 1..{N_MAX}")
    backend = Backend(backend)
    mode = EngineMode(mode)
    tolerances = tolerances or Tolerances()
    forced = tuple(forced)
    bounds = _chunks(trials, jobs)

    if len(bounds) == 1:
        return _run_chunk(backend, doc, seed, bounds[0], mode, tolerances, forced, initial)

    histogram = TrialHistogram(doc.n)
    with ProcessPoolExecutor(max_workers=len(bounds)) as pool:
        futures = [
            pool.submit(_run_chunk, backend, doc, seed, b, mode, tolerances, forced, initial)
            for b in bounds
        ]
        for future in futures:
            histogram = histogram.merge(future.result())
    return histogram
