import json
import math

import numpy as np
import pytest

from core.circuitio import random_circuit, strip_measurements
from core.engine import Circuit, Engine, GateSpec, RandomSource
from core.errors import UnsharpReadoutError, ValidationError
from core.gatelib import GateKind, two_input_matrix
from core.histogram import TrialHistogram
from core.qstate import QubitOrdering, QuantumStateRegister, init_basis
from core.oracle import (
    OracleState,
    compare_distributions,
    compare_states,
    oracle_apply2,
    oracle_evaluate,
    oracle_gate,
    oracle_measure,
    oracle_readout,
)

S = 2 ** -0.5
BELL = Circuit([GateSpec(GateKind.H, 0), GateSpec(GateKind.CNOT, 1, 0)])


class TestOracleState:
    """Double-precision state construction."""

    def test_basis(self):
        state = OracleState.basis(3, 5)
        assert state.amps[5] == 1
        assert state.norm_sq() == 1.0

    def test_basis_out_of_range(self):
        with pytest.raises(ValidationError):
            OracleState.basis(2, 4)

    def test_from_amplitudes_normalizes(self):
        state = OracleState.from_amplitudes(1, [1, 1j])
        assert np.allclose(state.amps, [S, S * 1j], atol=1e-15)

    def test_zero_amplitudes(self):
        with pytest.raises(ValidationError):
            OracleState.from_amplitudes(1, [0, 0])

    def test_shape_checked(self):
        with pytest.raises(ValidationError):
            OracleState(2, np.zeros(3))


class TestOracleEvaluate:
    """Reference evaluation of circuits."""

    def test_hadamard(self):
        state, outcomes = oracle_evaluate(Circuit([GateSpec(GateKind.H, 0)]), 1, RandomSource(0))
        assert np.abs(state.amps - [S, S]).max() <= 1e-15
        assert outcomes == []

    def test_bell(self):
        state, _ = oracle_evaluate(BELL, 2, RandomSource(0))
        assert np.abs(state.amps - [S, 0, 0, S]).max() <= 1e-15

    def test_two_input_sub_index(self):
        state = OracleState.basis(2, 0b10)
        oracle_apply2(state, two_input_matrix(GateKind.CNOT).to_complex(), 0, 1)
        assert state.amps[0b11] == 1

    def test_norm_preserved_over_long_circuit(self):
        doc = strip_measurements(random_circuit(7, iterations=75, seed=4))
        assert len(doc.gates) > 900

        state, _ = oracle_evaluate(doc.circuit, 7, RandomSource(0))
        assert abs(state.norm_sq() - 1) <= 1e-12

    def test_initial_state_used(self):
        initial = OracleState.basis(2, 3)
        state, _ = oracle_evaluate(Circuit([GateSpec(GateKind.X, 0)]), 2, RandomSource(0), initial)

        assert state.amps[2] == 1
        assert initial.amps[3] == 1

    def test_initial_state_size_checked(self):
        with pytest.raises(ValidationError):
            oracle_evaluate(Circuit(), 2, RandomSource(0), OracleState.basis(3))

    def test_qubit_range_checked(self):
        with pytest.raises(ValidationError):
            oracle_evaluate(Circuit([GateSpec(GateKind.X, 3)]), 2, RandomSource(0))

    def test_sharp_measurement_draws_nothing(self):
        rng = RandomSource(0)
        outcome = oracle_measure(OracleState.basis(1, 1), 0, rng)

        assert outcome.bit == 1
        assert outcome.sharp
        assert rng.draws == 0

    def test_forced_collapse(self):
        state, _ = oracle_evaluate(Circuit([GateSpec(GateKind.H, 0)]), 1, RandomSource(0))
        outcome = oracle_measure(state, 0, RandomSource(0, forced=[0.3]))

        assert outcome.bit == 0
        assert abs(outcome.p0 - 0.5) < 1e-15
        assert np.abs(state.amps - [1, 0]).max() <= 1e-15

    def test_error_gate_draw(self):
        rng = RandomSource(0, forced=[0.1])
        state, _ = oracle_evaluate(Circuit([GateSpec(GateKind.EY, 0, p_err=0.5)]), 1, rng)

        assert rng.draws == 1
        assert np.abs(state.amps - [0, -1j]).max() <= 1e-15

    @pytest.mark.parametrize("n", [14, 15, 16])
    def test_equal_superposition_on_wide_register(self, n):
        state = OracleState.basis(n)
        oracle_gate(state, GateSpec(GateKind.H, 0), RandomSource(0))
        rng = RandomSource(0, forced=[0.1])
        outcome = oracle_measure(state, 0, rng)

        assert not outcome.sharp
        assert outcome.bit == 0
        assert rng.draws == 1
        assert abs(outcome.p0 - 0.5) < 1e-12
        assert abs(state.amps[0] - 1) <= 1e-12
        assert oracle_readout(state).index == 0


class TestTrajectories:
    """Engine and oracle share draws for a shared seed."""

    @pytest.mark.parametrize("seed", range(10))
    def test_same_outcomes_unless_marginal(self, seed):
        doc = random_circuit(4, iterations=2, seed=seed)
        _, engine_outcomes = Engine().evaluate_circuit(init_basis(4, 0), doc.circuit, RandomSource(seed))
        _, oracle_outcomes = oracle_evaluate(doc.circuit, 4, RandomSource(seed))

        assert len(engine_outcomes) == len(oracle_outcomes) == 4
        for ours, reference in zip(engine_outcomes, oracle_outcomes):
            assert ours.qubit == reference.qubit
            assert ours.prn == reference.prn
            if ours.bit != reference.bit:
                assert abs(ours.prn / 2 ** 32 - reference.p0) < 1e-3
                break
            assert abs(float(ours.p0) - reference.p0) < 1e-3


class TestReadout:
    """Oracle readout window."""

    def test_basis(self):
        assert oracle_readout(OracleState.basis(3, 5)).index == 5

    def test_bell_is_unsharp(self):
        state, _ = oracle_evaluate(BELL, 2, RandomSource(0))
        with pytest.raises(UnsharpReadoutError):
            oracle_readout(state)

    @pytest.mark.parametrize("n", [14, 15, 16])
    def test_basis_on_wide_register(self, n):
        assert oracle_readout(OracleState.basis(n, 5)).index == 5


class TestCompareStates:
    """Fixed versus double state comparison."""

    def test_bell_agreement(self):
        qsr, _ = Engine().evaluate_circuit(init_basis(2, 0), BELL, RandomSource(0))
        state, _ = oracle_evaluate(BELL, 2, RandomSource(0))

        report = compare_states(qsr, state)
        assert report.kind == 'states'
        assert report.max_abs_diff <= 2 ** -15
        assert report.mae <= report.max_abs_diff

    def test_identical(self):
        report = compare_states(init_basis(2, 1), OracleState.basis(2, 1))
        assert report.max_abs_diff == 0
        assert report.euclidean_distance == 0

    def test_qubit_mismatch(self):
        with pytest.raises(ValidationError):
            compare_states(init_basis(2, 0), OracleState.basis(3, 0))

    def test_requires_identity_ordering(self):
        qsr = QuantumStateRegister(2, np.array([65536, 0, 0, 0]), np.zeros(4, dtype=np.int64),
                                   QubitOrdering((1, 0)))
        with pytest.raises(ValidationError):
            compare_states(qsr, OracleState.basis(2, 0))

    def test_table_has_only_statistics(self):
        text = compare_states(init_basis(1, 0), OracleState.basis(1, 0)).format_table()
        assert text.splitlines()[0].startswith("euclidean distance:")
        assert len(text.splitlines()) == 4


class TestCompareDistributions:
    """Histogram comparison statistics and table."""

    def test_identical(self):
        h = TrialHistogram(2, {0: 5, 3: 5})
        report = compare_distributions(h, TrialHistogram(2, {0: 5, 3: 5}))

        assert report.euclidean_distance == 0
        assert report.mae == 0
        assert report.others == (0.0, 0.0)
        assert [row.state for row in report.rows] == [0, 3]

    def test_disjoint(self):
        report = compare_distributions(TrialHistogram(1, {0: 10}), TrialHistogram(1, {1: 10}))

        assert report.euclidean_distance == pytest.approx(math.sqrt(2))
        assert report.rows == []
        assert report.others == (1.0, 1.0)
        assert report.others_counts == (10, 10)

    def test_partial_overlap(self):
        report = compare_distributions(TrialHistogram(2, {0: 2, 1: 2}), TrialHistogram(2, {0: 2, 2: 2}))

        assert report.mae == pytest.approx(0.25)
        assert report.euclidean_distance == pytest.approx(math.sqrt(0.5))
        assert report.max_abs_diff == pytest.approx(0.5)
        assert report.mae_std == pytest.approx(0.25)
        assert len(report.rows) == 1
        assert report.rows[0].mu_a == 0.5
        assert report.others == (0.5, 0.5)

    def test_qubit_mismatch(self):
        with pytest.raises(ValidationError):
            compare_distributions(TrialHistogram(1), TrialHistogram(2))

    def test_json(self):
        report = compare_distributions(TrialHistogram(2, {0: 3, 1: 1}), TrialHistogram(2, {0: 4}))
        data = json.loads(report.to_json())

        assert data['kind'] == 'distributions'
        assert data['rows'] == [
            {'state': '0x0', 'engine_count': 3, 'engine_mu': 0.75, 'oracle_count': 4, 'oracle_mu': 1.0},
        ]
        assert data['others']['engine_count'] == 1
        assert data['totals'] == {'engine': 4, 'oracle': 4}

    def test_table(self):
        report = compare_distributions(
            TrialHistogram(2, {0: 3, 1: 1}, unsharp=1), TrialHistogram(2, {0: 4}),
        )
        lines = report.format_table().splitlines()

        assert lines[0].split() == ['state', 'engine', 'n', 'engine', 'mu', 'oracle', 'n', 'oracle', 'mu']
        assert lines[1].split()[0] == '0x0'
        assert lines[2].split()[0] == 'others'
        assert lines[3].split() == ['unsharp', '1', '0']
        assert lines[-4].startswith("euclidean distance:")
        assert lines[-1].startswith("max abs difference:")

    def test_custom_labels(self):
        report = compare_distributions(TrialHistogram(1, {0: 1}), TrialHistogram(1, {0: 1}), labels=('a', 'b'))
        assert 'a_count' in report.to_dict()['rows'][0]
