"""Closed-form single-photon transfer matrices for laser-driven waveguide emitters.

Every scatterer modeled here is a multilevel atom pinned at one point of one
or more 1D waveguides.  A single guided photon with detuning ``delta_k`` from
its atomic transition drives the atom, an external classical laser with Rabi
frequency ``omega`` and detuning ``delta_laser`` dresses it, and the photon
leaves through one of the coupled channels.  With linearized dispersion and
frequency-independent couplings the outgoing amplitudes are related to the
incoming ones by a small complex matrix, which this module evaluates exactly.

Conventions
-----------
* The reference coupling rate is the global unit; every rate and detuning in
  this package is a dimensionless multiple of it.
* The two-photon detuning is always derived as ``delta_k - delta_laser`` and
  never supplied separately.
* Excited-state decay at rate ``gamma_decay`` enters through the substitution
  ``delta_k -> delta_k - i*gamma_decay/2`` applied to every bare photon
  detuning.  The two-photon detuning is left untouched (it contains the laser
  frequency, not the excited level).  With decay the matrices become
  subunitary: every column then carries squared norm <= 1 and the deficit is
  the probability lost to unguided modes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateParametersError

__all__ = [
    "EmitterSpec",
    "ScatterMatrix",
    "lambda_transfer_2ch",
    "lambda_phase_1ch",
    "multichannel_transfer",
    "conversion_transfer",
    "conversion_probability",
    "twolevel_transfer",
    "rotation_entries",
    "phase_factor",
]

FOUR_CHANNEL_LABELS = ("right_1", "right_2", "left_1", "left_2")


@dataclass(frozen=True)
class EmitterSpec:
    """Physical parameters of one emitter-waveguide scattering event.

    ``gammas`` lists the coupling rate of each guided channel.  ``omega`` is
    the Rabi frequency of the dressing laser, ``delta_k`` the photon detuning,
    ``delta_laser`` the laser detuning and ``gamma_decay`` the decay rate of
    the excited level into unguided modes.
    """

    gammas: tuple[float, ...]
    omega: float = 0.0
    delta_k: float = 0.0
    delta_laser: float = 0.0
    gamma_decay: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        if any(g < 0 for g in self.gammas):
            raise ValueError("channel couplings must be nonnegative")
        if self.gamma_decay < 0:
            raise ValueError("decay rate must be nonnegative")

    @property
    def delta_two_photon(self) -> float:
        """Two-photon detuning, recomputed from the stored detunings."""
        return self.delta_k - self.delta_laser


@dataclass(frozen=True)
class ScatterMatrix:
    """A dense channel-space transfer matrix with labeled channels."""

    entries: np.ndarray
    channel_labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("entries must be a square matrix")
        object.__setattr__(self, "entries", m)
        labels = self.channel_labels or tuple(f"ch{i + 1}" for i in range(m.shape[0]))
        if len(labels) != m.shape[0]:
            raise ValueError("one label per channel required")
        object.__setattr__(self, "channel_labels", tuple(labels))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def unitarity_defect(self) -> float:
        """Max-norm of S^dag S - I; ~1e-15 for lossless parameters."""
        gram = self.entries.conj().T @ self.entries
        return float(np.max(np.abs(gram - np.eye(self.dim))))

    def column_norms(self) -> np.ndarray:
        """Squared column norms; the flux kept out of each input channel."""
        return np.sum(np.abs(self.entries) ** 2, axis=0)


def _complex_detuning(delta_k, gamma_decay):
    return np.asarray(delta_k, dtype=complex) - 0.5j * np.asarray(gamma_decay)


def rotation_entries(omega, delta_k, delta_laser, coupling=1.0, decay=0.0):
    """Diagonal and off-diagonal entries of the two-waveguide rotation scatterer.

    The atom couples equally (rate ``coupling``) to the right movers of two
    waveguides; the returned pair (d, o) fills the symmetric matrix
    [[d, o], [o, d]].  Broadcasts over array arguments.
    """
    omega = np.asarray(omega, dtype=float)
    dtp = np.asarray(delta_k, dtype=float) - np.asarray(delta_laser, dtype=float)
    dk = _complex_detuning(delta_k, decay)
    denom = dtp * (dk - 1j * coupling) - omega**2
    if np.any(denom == 0):
        raise DegenerateParametersError(
            "rotation scatterer pole: laser off and two-photon resonant "
            "(omega = 0 with delta_k = delta_laser), or exact pole hit"
        )
    diag = (dk * dtp - omega**2) / denom
    off = 1j * dtp * coupling / denom
    return diag, off


def phase_factor(omega, delta_k, delta_laser, coupling=1.0, decay=0.0):
    """Reflection phase factor of the single-waveguide scatterer.

    For real parameters and no decay the factor lies on the unit circle; with
    decay its modulus drops below one.  Broadcasts over array arguments.
    """
    omega = np.asarray(omega, dtype=float)
    dtp = np.asarray(delta_k, dtype=float) - np.asarray(delta_laser, dtype=float)
    dk = _complex_detuning(delta_k, decay)
    denom = dtp * (dk - 0.5j * coupling) - omega**2
    if np.any(denom == 0):
        raise DegenerateParametersError(
            "phase scatterer pole: laser off and two-photon resonant, "
            "or exact pole hit"
        )
    return (dtp * (dk + 0.5j * coupling) - omega**2) / denom


def lambda_transfer_2ch(spec: EmitterSpec) -> ScatterMatrix:
    """Transfer matrix of a laser-dressed atom coupled equally to two waveguides.

    The photon enters in either waveguide and is redistributed between the
    two with laser-tunable weights.  Requires two equal channel couplings.
    """
    if len(spec.gammas) != 2 or spec.gammas[0] != spec.gammas[1]:
        raise ValueError("two equal channel couplings required")
    diag, off = rotation_entries(
        spec.omega,
        spec.delta_k,
        spec.delta_laser,
        coupling=spec.gammas[0],
        decay=spec.gamma_decay,
    )
    return ScatterMatrix(
        np.array([[diag, off], [off, diag]]), ("waveguide_0", "waveguide_1")
    )


def lambda_phase_1ch(spec: EmitterSpec) -> complex:
    """Phase factor picked up by a photon passing a one-waveguide dressed atom."""
    if len(spec.gammas) != 1:
        raise ValueError("exactly one channel coupling required")
    return complex(
        phase_factor(
            spec.omega,
            spec.delta_k,
            spec.delta_laser,
            coupling=spec.gammas[0],
            decay=spec.gamma_decay,
        )
    )


def multichannel_transfer(gammas, spec: EmitterSpec, labels=()) -> ScatterMatrix:
    """Unified n-channel transfer matrix of one dressed emitter.

    Entry (c, c') is ``delta_cc' + i*sqrt(g_c*g_c') / (delta_eff - i*G/2)``
    with G the total coupling and ``delta_eff`` the laser-dressed photon
    detuning ``delta_k - omega**2/delta_two_photon`` (decay-shifted).  With
    the laser off the dressing term is dropped entirely, which is the
    physical zero-drive limit.

    Specializes to the two-waveguide rotation scatterer, the single-channel
    phase factor, the bare two-level scatterer, and the four-channel
    imperfect-chirality matrix, depending on the channel list.
    """
    g = np.asarray(gammas, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ValueError("gammas must be a nonempty 1-D sequence")
    if np.any(g < 0):
        raise ValueError("channel couplings must be nonnegative")
    dk = complex(spec.delta_k) - 0.5j * spec.gamma_decay
    if spec.omega == 0:
        delta_eff = dk
    else:
        dtp = spec.delta_two_photon
        if dtp == 0:
            raise DegenerateParametersError(
                "two-photon resonance with the laser on makes the dressed "
                "detuning diverge"
            )
        delta_eff = dk - spec.omega**2 / dtp
    denom = delta_eff - 0.5j * g.sum()
    if denom == 0:
        raise DegenerateParametersError("multichannel scatterer pole hit")
    entries = np.eye(g.size, dtype=complex) + 1j * np.sqrt(np.outer(g, g)) / denom
    return ScatterMatrix(entries, tuple(labels))


def conversion_transfer(
    coupling: float, omega: float, delta_in: float, delta_out: float, decay: float = 0.0
) -> ScatterMatrix:
    """Transfer matrix of the laser-bridged frequency converter.

    The atom absorbs the photon on one transition and may reemit it on
    another, leaving the atom shelved; channel 0 is the incoming carrier
    frequency and channel 1 the converted one.  ``delta_in`` and
    ``delta_out`` are the photon detunings from the two transitions; with
    decay both excited levels decay at the same rate and both detunings
    shift.
    """
    d1 = complex(delta_in) - 0.5j * decay
    d2 = complex(delta_out) - 0.5j * decay
    common = d1 * d2 - omega**2
    half = 0.5j * coupling
    denom = common - half * d1 - half * d2 - coupling**2 / 4
    if denom == 0:
        raise DegenerateParametersError("frequency converter pole hit")
    diag_in = (common - half * d1 + half * d2 + coupling**2 / 4) / denom
    diag_out = (common + half * d1 - half * d2 + coupling**2 / 4) / denom
    off = -1j * coupling * omega / denom
    return ScatterMatrix(
        np.array([[diag_in, off], [off, diag_out]]), ("carrier", "converted")
    )


def conversion_probability(matrix: ScatterMatrix) -> float:
    """Probability that the converter scatters the photon to the new frequency."""
    return float(np.abs(matrix.entries[1, 0]) ** 2)


def twolevel_transfer(coupling: float, delta: float, decay: float = 0.0) -> ScatterMatrix:
    """Transfer matrix of a bare two-level atom coupled equally to two waveguides.

    At resonance the photon is deterministically swapped between the
    waveguides with a sign flip; far off resonance it decouples.
    """
    dk = complex(delta) - 0.5j * decay
    denom = dk - 1j * coupling
    if denom == 0:
        raise DegenerateParametersError("two-level scatterer pole hit")
    diag = dk / denom
    off = 1j * coupling / denom
    return ScatterMatrix(
        np.array([[diag, off], [off, diag]]), ("waveguide_0", "waveguide_1")
    )
