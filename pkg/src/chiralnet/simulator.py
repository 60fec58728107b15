"""Dense statevector simulation for a small register of dual-rail qubits.

Qubits are numbered 1..Q and qubit 1 is the most significant bit of the
basis index, so for Q = 2 the amplitude order is |00>, |01>, |10>, |11>.
Gates may be non-unitary (lossy scatterers), in which case the state norm
drops below one and measurement probabilities are read post-selectively,
i.e. renormalized; :func:`norm2` exposes the surviving flux separately.

The module-level kernels operate on bare amplitude arrays with optional
leading batch axes and are shared with the training engine; the
:class:`StateVector` wrapper provides the one-state convenience API.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "StateVector",
    "init_state",
    "apply_1q",
    "apply_2q",
    "prob_one",
    "norm2",
    "apply_gate_amps",
    "conjugate_operator",
    "prob_one_amps",
    "one_mask",
]

MAX_QUBITS = 20


@dataclass
class StateVector:
    """Q-qubit amplitudes; qubit 1 is the most significant basis-index bit."""

    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amps, dtype=complex)
        if a.shape != (2**self.n_qubits,):
            raise ValueError("amplitude vector must have length 2**n_qubits")
        self.amps = a


def init_state(n_qubits: int) -> StateVector:
    """All qubits in |0>."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"qubit count must be in [1, {MAX_QUBITS}]")
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def apply_gate_amps(amps: np.ndarray, gate: np.ndarray, qubits, n_qubits: int) -> np.ndarray:
    """Apply a k-qubit gate to amplitudes shaped (..., 2**n_qubits).

    ``qubits`` are 1-based positions ordered as the gate's tensor factors.
    ``gate`` is (2**k, 2**k), or (B, 2**k, 2**k) for a per-item gate batch
    aligned with the first axis of ``amps``.
    """
    k = len(qubits)
    dim = 2**n_qubits
    if amps.shape[-1] != dim:
        raise ValueError("amplitude axis does not match qubit count")
    for q in qubits:
        if not 1 <= q <= n_qubits:
            raise ValueError(f"qubit index {q} out of range 1..{n_qubits}")
    if len(set(qubits)) != k:
        raise ValueError("gate qubits must be distinct")
    batch = amps.shape[:-1]
    nb = len(batch)
    t = amps.reshape(batch + (2,) * n_qubits)
    src = [nb + q - 1 for q in qubits]
    dst = list(range(nb, nb + k))
    if src != dst:
        t = np.moveaxis(t, src, dst)
    rest = t.shape[nb + k :]
    t = t.reshape(batch + (2**k, -1))
    if gate.ndim == 2:
        # one large BLAS product over the contraction axis
        t = np.swapaxes(np.swapaxes(t, -2, -1) @ gate.T, -2, -1)
    elif gate.ndim == 3:
        if nb == 0 or batch[0] != gate.shape[0]:
            raise ValueError("batched gate requires a matching leading batch axis")
        g = gate.reshape((gate.shape[0],) + (1,) * (nb - 1) + gate.shape[1:])
        t = np.matmul(g, t)
    else:
        raise ValueError("gate must be a matrix or a batch of matrices")
    t = t.reshape(batch + (2,) * k + rest)
    if src != dst:
        t = np.moveaxis(t, dst, src)
    return t.reshape(batch + (dim,))


def conjugate_operator(op: np.ndarray, gate: np.ndarray, qubits, n_qubits: int) -> np.ndarray:
    """Return E^dag @ op @ E for the embedded gate E, op shaped (..., dim, dim).

    This is the Heisenberg-picture pull-back of an observable through one
    gate; iterating it backwards over a circuit yields the effective
    measurement operator at every gate position.
    """
    gate_t = np.swapaxes(gate, -1, -2)
    right = apply_gate_amps(op, gate_t, qubits, n_qubits)
    gate_h = np.conj(gate_t)
    left = apply_gate_amps(np.swapaxes(right, -1, -2), gate_h, qubits, n_qubits)
    return np.swapaxes(left, -1, -2)


def one_mask(qubit: int, n_qubits: int) -> np.ndarray:
    """Boolean mask of basis indices where the given qubit is |1>."""
    if not 1 <= qubit <= n_qubits:
        raise ValueError(f"qubit index {qubit} out of range 1..{n_qubits}")
    idx = np.arange(2**n_qubits)
    return ((idx >> (n_qubits - qubit)) & 1).astype(bool)


def prob_one_amps(amps: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """P(qubit = 1) for amplitudes shaped (..., 2**n), renormalizing lossy states."""
    mask = one_mask(qubit, n_qubits)
    weights = np.abs(amps) ** 2
    total = weights.sum(axis=-1)
    if np.any(total == 0):
        raise ValueError("cannot measure a zero-norm state")
    return weights[..., mask].sum(axis=-1) / total


def apply_1q(state: StateVector, gate: np.ndarray, qubit: int) -> StateVector:
    """Apply a single-qubit gate matrix; returns a new state."""
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (2, 2):
        raise ValueError("single-qubit gate must be 2x2")
    amps = apply_gate_amps(state.amps, gate, (qubit,), state.n_qubits)
    return StateVector(state.n_qubits, amps)


def apply_2q(state: StateVector, gate: np.ndarray, control: int, target: int) -> StateVector:
    """Apply a two-qubit gate given in the |control, target> basis."""
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (4, 4):
        raise ValueError("two-qubit gate must be 4x4")
    if control == target:
        raise ValueError("control and target must differ")
    amps = apply_gate_amps(state.amps, gate, (control, target), state.n_qubits)
    return StateVector(state.n_qubits, amps)


def prob_one(state: StateVector, qubit: int) -> float:
    """Probability of finding the qubit in |1>, post-selected on survival."""
    return float(prob_one_amps(state.amps, qubit, state.n_qubits))


def norm2(state: StateVector) -> float:
    """Total squared norm; equals 1 after unitary evolution, less after loss."""
    return float(np.sum(np.abs(state.amps) ** 2))
