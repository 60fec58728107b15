"""Qubit gates realized by emitter-waveguide scattering, and their angle maps.

A dual-rail qubit lives in a pair of waveguides: |0> is the photon in the
first waveguide, |1> in the second.  The scattering matrices of
:mod:`chiralnet.scattering` then act directly as single-qubit gates:

* the two-waveguide dressed atom acts as an X rotation (up to a global
  phase): ``R = exp(-i*theta/2) * R_X(theta)``,
* the one-waveguide dressed atom acts as a phase gate ``diag(e^{i*phi}, 1)``,
* a conversion stage plus a bare two-level scatterer on a second rail pair
  acts as a controlled rotation; at resonance it is a CNOT with an extra
  pi/2 phase on the set control.

The angle maps ``theta(omega, delta_k, delta_laser)`` and ``phi(...)`` and
their exact derivatives are what make laser-space gradient descent possible:
measured probabilities are first-harmonic trigonometric functions of the
angles, so two angle-shifted circuit evaluations give exact angle gradients,
and the closed-form derivatives below chain them back to the laser
parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateParametersError
from .scattering import (
    FOUR_CHANNEL_LABELS,
    EmitterSpec,
    ScatterMatrix,
    conversion_transfer,
    lambda_phase_1ch,
    lambda_transfer_2ch,
    multichannel_transfer,
    twolevel_transfer,
)

__all__ = [
    "PAULI_X",
    "RotationGateParams",
    "PhaseGateParams",
    "ControlledGateParams",
    "QubitGate",
    "LossReport",
    "rotation_gate",
    "phase_gate",
    "controlled_gate",
    "angle_of_rotation",
    "angle_of_phase",
    "dtheta_dparams",
    "dphi_dparams",
    "rotation_angle",
    "phase_angle",
    "rotation_angle_gradients",
    "phase_angle_gradients",
    "angle_rotation_gate",
    "angle_phase_gate",
    "rx_matrix",
    "phase_matrix",
    "imperfect_rotation_gate",
    "imperfect_controlled_gate",
    "rotation_gate_fidelity",
    "controlled_gate_fidelity",
    "state_fidelity",
]

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)

_UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class RotationGateParams:
    """Laser and photon parameters of one rotation gate (coupling rate first)."""

    coupling: float = 1.0
    omega: float = 0.0
    delta_k: float = 0.0
    delta_laser: float = 0.0

    def __post_init__(self):
        if self.coupling <= 0:
            raise ValueError("coupling rate must be positive")

    @property
    def delta_two_photon(self) -> float:
        return self.delta_k - self.delta_laser


class PhaseGateParams(RotationGateParams):
    """Same parameter set as the rotation gate, driving the one-waveguide atom."""


@dataclass(frozen=True)
class ControlledGateParams:
    """Target-photon detuning and the pi/2 control-phase toggle."""

    delta_target: float = 0.0
    include_control_phase: bool = True


@dataclass(frozen=True)
class QubitGate:
    """A concrete 2x2 or 4x4 gate matrix with its construction kind."""

    matrix: np.ndarray
    kind: str
    unitary: bool

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape not in ((2, 2), (4, 4)):
            raise ValueError("gate matrix must be 2x2 or 4x4")
        object.__setattr__(self, "matrix", m)


def _as_gate(matrix: np.ndarray, kind: str) -> QubitGate:
    defect = np.max(np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0])))
    return QubitGate(matrix, kind, unitary=bool(defect < _UNITARY_TOL))


def rotation_gate(p: RotationGateParams) -> QubitGate:
    """Single-qubit rotation gate from the two-waveguide dressed atom."""
    spec = EmitterSpec(
        gammas=(p.coupling, p.coupling),
        omega=p.omega,
        delta_k=p.delta_k,
        delta_laser=p.delta_laser,
    )
    return _as_gate(lambda_transfer_2ch(spec).entries, "rotation")


def phase_gate(p: PhaseGateParams) -> QubitGate:
    """Single-qubit phase gate diag(p, 1) from the one-waveguide dressed atom."""
    spec = EmitterSpec(
        gammas=(p.coupling,),
        omega=p.omega,
        delta_k=p.delta_k,
        delta_laser=p.delta_laser,
    )
    factor = lambda_phase_1ch(spec)
    return _as_gate(np.diag([factor, 1.0]).astype(complex), "phase")


def controlled_gate(p: ControlledGateParams, coupling: float = 1.0) -> QubitGate:
    """Two-qubit controlled gate in the |control, target> basis.

    A set control photon shelves the atom (picking up a pi/2 phase when the
    converter runs resonantly) and the target photon then scatters off the
    resulting two-level system; a clear control leaves the target untouched.
    At resonant target detuning the lower block is -iX (phase on) or -X.
    """
    block = twolevel_transfer(coupling, p.delta_target).entries
    if p.include_control_phase:
        block = 1j * block
    m = np.eye(4, dtype=complex)
    m[2:, 2:] = block
    return _as_gate(m, "controlled")


def _reduce_branch(theta):
    theta = np.where(theta > np.pi, theta - 2.0 * np.pi, theta)
    theta = np.where(theta < -np.pi, theta + 2.0 * np.pi, theta)
    return theta


def rotation_angle(omega, delta_k, delta_laser, coupling=1.0):
    """Rotation angle theta with R = exp(-i*theta/2) R_X(theta), in [-pi, pi].

    theta = 2*atan2(-dtp*coupling, dtp*delta_k - omega**2) reduced to the
    principal branch; dtp is the two-photon detuning.  Broadcasts.
    """
    omega = np.asarray(omega, dtype=float)
    dtp = np.asarray(delta_k, dtype=float) - np.asarray(delta_laser, dtype=float)
    y = -dtp * coupling
    x = dtp * np.asarray(delta_k, dtype=float) - omega**2
    if np.any((x == 0) & (y == 0)):
        raise DegenerateParametersError(
            "rotation angle undefined: laser off and two-photon resonant"
        )
    return _reduce_branch(2.0 * np.arctan2(y, x))


def phase_angle(omega, delta_k, delta_laser, coupling=1.0):
    """Phase-gate angle phi with p = e^{i*phi}, principal branch.  Broadcasts."""
    omega = np.asarray(omega, dtype=float)
    dk = np.asarray(delta_k, dtype=float)
    dtp = dk - np.asarray(delta_laser, dtype=float)
    y = 0.5 * dtp * coupling
    x = dtp * dk - omega**2
    if np.any((x == 0) & (y == 0)):
        raise DegenerateParametersError(
            "phase angle undefined: laser off and two-photon resonant"
        )
    return _reduce_branch(2.0 * np.arctan2(y, x))


def rotation_angle_gradients(omega, delta_k, delta_laser, coupling=1.0):
    """d(theta)/d(omega) and d(theta)/d(delta_laser) of the rotation angle.

    Derivatives of theta = 2*atan2(-dtp*coupling, dtp*delta_k - omega**2)
    with dtp = delta_k - delta_laser:

        d theta / d omega       = -4*omega*dtp*coupling / D
        d theta / d delta_laser = -2*coupling*omega**2 / D
        D = (dtp*delta_k - omega**2)**2 + (dtp*coupling)**2

    Broadcasts; verified against central finite differences in the tests.
    """
    omega = np.asarray(omega, dtype=float)
    dk = np.asarray(delta_k, dtype=float)
    dtp = dk - np.asarray(delta_laser, dtype=float)
    d = (dtp * dk - omega**2) ** 2 + (dtp * coupling) ** 2
    if np.any(d == 0):
        raise DegenerateParametersError("rotation angle gradient undefined at 0/0")
    return -4.0 * omega * dtp * coupling / d, -2.0 * coupling * omega**2 / d


def phase_angle_gradients(omega, delta_k, delta_laser, coupling=1.0):
    """d(phi)/d(omega) and d(phi)/d(delta_laser) of the phase-gate angle.

        d phi / d omega       = 2*omega*dtp*coupling / D
        d phi / d delta_laser = coupling*omega**2 / D
        D = (dtp*delta_k - omega**2)**2 + (dtp*coupling/2)**2

    Broadcasts; verified against central finite differences in the tests.
    """
    omega = np.asarray(omega, dtype=float)
    dk = np.asarray(delta_k, dtype=float)
    dtp = dk - np.asarray(delta_laser, dtype=float)
    d = (dtp * dk - omega**2) ** 2 + (0.5 * dtp * coupling) ** 2
    if np.any(d == 0):
        raise DegenerateParametersError("phase angle gradient undefined at 0/0")
    return 2.0 * omega * dtp * coupling / d, coupling * omega**2 / d


def angle_of_rotation(p: RotationGateParams) -> float:
    return float(rotation_angle(p.omega, p.delta_k, p.delta_laser, p.coupling))


def angle_of_phase(p: PhaseGateParams) -> float:
    return float(phase_angle(p.omega, p.delta_k, p.delta_laser, p.coupling))


def dtheta_dparams(p: RotationGateParams) -> tuple[float, float]:
    """Exact (d theta/d omega, d theta/d delta_laser) at the given parameters."""
    g_om, g_dl = rotation_angle_gradients(p.omega, p.delta_k, p.delta_laser, p.coupling)
    return float(g_om), float(g_dl)


def dphi_dparams(p: PhaseGateParams) -> tuple[float, float]:
    """Exact (d phi/d omega, d phi/d delta_laser) at the given parameters."""
    g_om, g_dl = phase_angle_gradients(p.omega, p.delta_k, p.delta_laser, p.coupling)
    return float(g_om), float(g_dl)


def rx_matrix(theta):
    """Bare X-rotation matrix R_X(theta); broadcasts to (..., 2, 2)."""
    theta = np.asarray(theta, dtype=float)
    c = np.cos(theta / 2.0)
    s = -1j * np.sin(theta / 2.0)
    out = np.empty(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def phase_matrix(phi):
    """Phase-gate matrix diag(e^{i*phi}, 1); broadcasts to (..., 2, 2)."""
    phi = np.asarray(phi, dtype=float)
    out = np.zeros(phi.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = np.exp(1j * phi)
    out[..., 1, 1] = 1.0
    return out


def angle_rotation_gate(theta: float) -> QubitGate:
    """R_X(theta) as a gate; probability-equivalent to the physical rotation."""
    return QubitGate(rx_matrix(float(theta)), "angle_rotation", unitary=True)


def angle_phase_gate(phi: float) -> QubitGate:
    """diag(e^{i*phi}, 1) as a gate; equals the physical lossless phase gate."""
    return QubitGate(phase_matrix(float(phi)), "angle_phase", unitary=True)


@dataclass(frozen=True)
class LossReport:
    """Flux audit of a lossy gate, per input channel of the 2x2 block.

    ``kept`` is the probability remaining in the qubit (right-moving)
    channels, ``leaked_left`` the probability backscattered into the
    wrong-direction channels, ``decayed`` the probability emitted into
    unguided modes.
    """

    kept: np.ndarray
    leaked_left: np.ndarray
    decayed: np.ndarray


def imperfect_rotation_gate(
    p: RotationGateParams,
    gamma_right: float,
    gamma_left: float,
    decay: float = 0.0,
) -> tuple[QubitGate, LossReport]:
    """Rotation gate with imperfect chirality and atomic decay.

    The atom couples to both right movers (rate ``gamma_right``, the working
    channels) and to the parasitic left movers (rate ``gamma_left``).  The
    returned gate is the right-to-right 2x2 block of the four-channel
    transfer matrix; the report accounts for where the missing flux went.
    In the limit gamma_left -> 0, decay -> 0 the ideal rotation gate is
    recovered.
    """
    if gamma_right <= 0:
        raise ValueError("right-moving coupling must be positive")
    if gamma_left < 0:
        raise ValueError("left-moving coupling must be nonnegative")
    gammas = (gamma_right, gamma_right, gamma_left, gamma_left)
    spec = EmitterSpec(
        gammas=gammas,
        omega=p.omega,
        delta_k=p.delta_k,
        delta_laser=p.delta_laser,
        gamma_decay=decay,
    )
    full = multichannel_transfer(gammas, spec, FOUR_CHANNEL_LABELS).entries
    probs = np.abs(full) ** 2
    kept = probs[:2, :2].sum(axis=0)
    leaked = probs[2:, :2].sum(axis=0)
    report = LossReport(kept=kept, leaked_left=leaked, decayed=1.0 - kept - leaked)
    return _as_gate(full[:2, :2], "rotation"), report


def imperfect_controlled_gate(
    delta_target: float,
    gamma_right: float,
    gamma_left: float,
    decay: float = 0.0,
) -> QubitGate:
    """Controlled gate with atomic decay and imperfect target-stage chirality.

    Decay shifts every photon detuning in both stages (three excited levels
    decay at the same rate): the resonant converter's control amplitude
    drops below the ideal pi/2 phase factor, and the target photon scatters
    off the shelved atom through the four-channel matrix with parasitic
    left-moving couplings.  The clear-control block stays exactly the
    identity since the target photon never meets a resonant transition.
    """
    if gamma_right <= 0:
        raise ValueError("right-moving coupling must be positive")
    if gamma_left < 0:
        raise ValueError("left-moving coupling must be nonnegative")
    converter = conversion_transfer(
        gamma_right, gamma_right / 2.0, 0.0, 0.0, decay=decay
    )
    control_amp = converter.entries[1, 0]
    gammas = (gamma_right, gamma_right, gamma_left, gamma_left)
    spec = EmitterSpec(gammas=gammas, delta_k=delta_target, gamma_decay=decay)
    block = multichannel_transfer(gammas, spec, FOUR_CHANNEL_LABELS).entries[:2, :2]
    m = np.eye(4, dtype=complex)
    m[2:, 2:] = control_amp * block
    return _as_gate(m, "controlled")


def rotation_gate_fidelity(
    p: RotationGateParams, gamma_left: float, decay: float = 0.0
) -> float:
    """Fidelity of the imperfect rotation gate on a photon entering in |0>.

    The ideal reference is the same gate with perfect chirality and no
    decay; the imperfect output is left unnormalized so loss counts as
    infidelity.
    """
    ideal = rotation_gate(p).matrix[:, 0]
    actual = imperfect_rotation_gate(p, p.coupling, gamma_left, decay)[0].matrix[:, 0]
    return state_fidelity(ideal, actual)


def controlled_gate_fidelity(
    gamma_left: float,
    decay: float = 0.0,
    gamma_right: float = 1.0,
    delta_target: float = 0.0,
) -> float:
    """Fidelity of the imperfect controlled gate on the input |control=1, target=0>.

    That input exercises both imperfection channels: the lossy frequency
    conversion on the control photon and the chirality-degraded scattering
    of the target photon.
    """
    ideal = controlled_gate(
        ControlledGateParams(delta_target, True), coupling=gamma_right
    ).matrix[:, 2]
    actual = imperfect_controlled_gate(
        delta_target, gamma_right, gamma_left, decay
    ).matrix[:, 2]
    return state_fidelity(ideal, actual)


def state_fidelity(ideal: np.ndarray, actual: np.ndarray) -> float:
    """Squared overlap |<ideal|actual>|^2 with the actual state unnormalized.

    Lost flux therefore counts directly as infidelity.  The ideal state must
    be normalized.
    """
    ideal = np.asarray(ideal, dtype=complex).ravel()
    actual = np.asarray(actual, dtype=complex).ravel()
    if ideal.shape != actual.shape:
        raise ValueError("states must have the same dimension")
    if abs(np.vdot(ideal, ideal).real - 1.0) > 1e-9:
        raise ValueError("ideal state must be normalized")
    return float(abs(np.vdot(ideal, actual)) ** 2)


def decomposition_phase(theta: float) -> complex:
    """Global phase factor exp(-i*theta/2) relating R_X(theta) to the gate."""
    return complex(math.cos(theta / 2.0), -math.sin(theta / 2.0))
