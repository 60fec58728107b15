"""Statevector engine against brute-force dense embeddings."""

import numpy as np
import pytest

from chiralnet.gates import (
    ControlledGateParams,
    RotationGateParams,
    controlled_gate,
    rotation_gate,
)
from chiralnet.simulator import (
    StateVector,
    apply_1q,
    apply_2q,
    apply_gate_amps,
    conjugate_operator,
    init_state,
    norm2,
    prob_one,
)

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)


def embed_1q(gate, qubit, n):
    """Independent dense embedding via Kronecker products (qubit 1 = MSB)."""
    out = np.array([[1.0]], dtype=complex)
    for q in range(1, n + 1):
        out = np.kron(out, gate if q == qubit else np.eye(2))
    return out


def embed_2q(gate, control, target, n):
    """Independent embedding by explicit basis-index bookkeeping."""
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        bc = (col >> (n - control)) & 1
        bt = (col >> (n - target)) & 1
        rest = col & ~((1 << (n - control)) | (1 << (n - target)))
        for bc2 in (0, 1):
            for bt2 in (0, 1):
                row = rest | (bc2 << (n - control)) | (bt2 << (n - target))
                out[row, col] += gate[(bc2 << 1) | bt2, (bc << 1) | bt]
    return out


class TestInit:
    def test_single_qubit(self):
        s = init_state(1)
        np.testing.assert_allclose(s.amps, [1.0, 0.0])

    def test_two_qubits(self):
        np.testing.assert_allclose(init_state(2).amps, [1, 0, 0, 0])

    def test_norm(self):
        assert norm2(init_state(5)) == pytest.approx(1.0)

    @pytest.mark.parametrize("q", [0, 21, -1])
    def test_out_of_range(self, q):
        with pytest.raises(ValueError):
            init_state(q)


class TestApply1q:
    def test_x_on_most_significant_qubit(self):
        s = apply_1q(init_state(2), X, 1)
        np.testing.assert_allclose(s.amps, [0, 0, 1, 0])

    def test_hadamard_like(self):
        s = apply_1q(init_state(1), HADAMARD, 1)
        np.testing.assert_allclose(s.amps, [1 / np.sqrt(2), 1 / np.sqrt(2)])

    def test_physical_rotation_flips_to_minus_one(self):
        gate = rotation_gate(RotationGateParams(1.0, 0.0, 0.0, 1.0)).matrix
        s = apply_1q(init_state(1), gate, 1)
        np.testing.assert_allclose(s.amps, [0.0, -1.0], atol=1e-15)
        assert prob_one(s, 1) == pytest.approx(1.0)

    def test_against_dense_embedding(self):
        rng = np.random.default_rng(71)
        for n in (2, 3, 4):
            amps = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
            state = StateVector(n, amps.copy())
            gate = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            for q in range(1, n + 1):
                got = apply_1q(state, gate, q).amps
                want = embed_1q(gate, q, n) @ amps
                np.testing.assert_allclose(got, want, atol=1e-13)

    def test_index_out_of_range(self):
        with pytest.raises(ValueError):
            apply_1q(init_state(2), X, 3)


class TestApply2q:
    CNOT_PHASED = controlled_gate(ControlledGateParams(0.0, True)).matrix

    def test_control_set(self):
        s = StateVector(2, np.array([0, 0, 1, 0], dtype=complex))
        out = apply_2q(s, self.CNOT_PHASED, 1, 2)
        np.testing.assert_allclose(out.amps, [0, 0, 0, -1j], atol=1e-15)

    def test_control_clear(self):
        out = apply_2q(init_state(2), self.CNOT_PHASED, 1, 2)
        np.testing.assert_allclose(out.amps, [1, 0, 0, 0], atol=1e-15)

    def test_superposed_control(self):
        s = StateVector(2, np.array([1, 0, 1, 0], dtype=complex) / np.sqrt(2))
        out = apply_2q(s, self.CNOT_PHASED, 1, 2)
        np.testing.assert_allclose(
            out.amps, [1 / np.sqrt(2), 0, 0, -1j / np.sqrt(2)], atol=1e-15
        )
        assert prob_one(out, 2) == pytest.approx(0.5)

    def test_against_dense_embedding_all_orderings(self):
        rng = np.random.default_rng(73)
        for n in (2, 3, 4):
            amps = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
            gate = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            for control in range(1, n + 1):
                for target in range(1, n + 1):
                    if control == target:
                        continue
                    got = apply_2q(StateVector(n, amps.copy()), gate, control, target).amps
                    want = embed_2q(gate, control, target, n) @ amps
                    np.testing.assert_allclose(got, want, atol=1e-12)

    def test_same_qubit_rejected(self):
        with pytest.raises(ValueError):
            apply_2q(init_state(2), self.CNOT_PHASED, 1, 1)


class TestProbNorm:
    def test_ground_state(self):
        assert prob_one(init_state(3), 3) == 0.0

    def test_global_phase_ignored(self):
        s = StateVector(1, np.array([0.0, -1.0], dtype=complex))
        assert prob_one(s, 1) == pytest.approx(1.0)

    def test_marginals_sum_to_one(self):
        from chiralnet.simulator import one_mask

        rng = np.random.default_rng(79)
        amps = rng.normal(size=8) + 1j * rng.normal(size=8)
        s = StateVector(3, amps)
        weights = np.abs(amps) ** 2
        for q in (1, 2, 3):
            p_one = prob_one(s, q)
            p_zero = weights[~one_mask(q, 3)].sum() / weights.sum()
            assert p_one + p_zero == pytest.approx(1.0, abs=1e-12)
            assert 0.0 <= p_one <= 1.0

    def test_zero_norm_rejected(self):
        with pytest.raises(ValueError):
            prob_one(StateVector(1, np.zeros(2, dtype=complex)), 1)

    def test_lossy_gate_reduces_norm(self):
        lossy = 0.9 * X
        s = apply_1q(init_state(1), lossy, 1)
        assert norm2(s) == pytest.approx(0.81)
        assert prob_one(s, 1) == pytest.approx(1.0)


class TestRandomCircuits:
    def test_unitary_evolution_preserves_norm(self):
        rng = np.random.default_rng(83)
        n = 5
        state = init_state(n)
        cnot = controlled_gate(ControlledGateParams(0.0, True)).matrix
        for _ in range(1000):
            if rng.random() < 0.7:
                phase = np.exp(1j * rng.uniform(0, 2 * np.pi))
                c, s_ = np.cos(a := rng.uniform(0, np.pi)), np.sin(a)
                gate = np.array([[c, -s_], [s_, c]], dtype=complex) * phase
                state = apply_1q(state, gate, rng.integers(1, n + 1))
            else:
                q1, q2 = rng.choice(np.arange(1, n + 1), size=2, replace=False)
                state = apply_2q(state, cnot, int(q1), int(q2))
        assert norm2(state) == pytest.approx(1.0, abs=1e-10)


class TestConjugateOperator:
    def test_matches_dense_sandwich(self):
        rng = np.random.default_rng(89)
        n = 3
        dim = 2**n
        op = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        gate = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        for q in (1, 2, 3):
            e = embed_1q(gate, q, n)
            want = e.conj().T @ op @ e
            got = conjugate_operator(op, gate, (q,), n)
            np.testing.assert_allclose(got, want, atol=1e-12)

    def test_matches_dense_sandwich_2q(self):
        rng = np.random.default_rng(97)
        n = 3
        dim = 2**n
        op = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        gate = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        e = embed_2q(gate, 3, 1, n)
        want = e.conj().T @ op @ e
        got = conjugate_operator(op, gate, (3, 1), n)
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_batched_gates(self):
        rng = np.random.default_rng(101)
        n, b = 2, 5
        dim = 2**n
        ops = rng.normal(size=(b, dim, dim)) + 1j * rng.normal(size=(b, dim, dim))
        gates_b = rng.normal(size=(b, 2, 2)) + 1j * rng.normal(size=(b, 2, 2))
        got = conjugate_operator(ops, gates_b, (2,), n)
        for i in range(b):
            e = embed_1q(gates_b[i], 2, n)
            np.testing.assert_allclose(got[i], e.conj().T @ ops[i] @ e, atol=1e-12)


class TestBatchedAmps:
    def test_batched_equals_loop(self):
        rng = np.random.default_rng(103)
        n, b = 3, 7
        amps = rng.normal(size=(b, 2**n)) + 1j * rng.normal(size=(b, 2**n))
        gates_b = rng.normal(size=(b, 2, 2)) + 1j * rng.normal(size=(b, 2, 2))
        got = apply_gate_amps(amps, gates_b, (2,), n)
        for i in range(b):
            want = apply_gate_amps(amps[i], gates_b[i], (2,), n)
            np.testing.assert_allclose(got[i], want, atol=1e-13)
