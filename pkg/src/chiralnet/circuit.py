"""The two-part learning circuit: layout, parameter bookkeeping, forward passes.

Part One applies, per layer, a stack of rotation gates to every qubit and
then a chain of controlled gates between nearest neighbors; it encodes the
input data in the rotation gates' laser detunings.  Part Two applies one
rotation and one phase gate per qubit per layer, again followed by the
controlled chain, and carries the bulk of the trainable laser parameters.
The measured quantity is the probability of the last qubit being |1>.

Parameter partition
-------------------
Every single-qubit gate owns a photon detuning (frozen at creation, drawn
uniformly from [-2, 2] coupling units), a Rabi frequency and a laser
detuning.  Part-One laser detunings are the data-encoding slots.  Everything
else adjustable forms the trainable vector: Part-One Rabi frequencies
(optionally frozen) and Part-Two Rabi frequencies and laser detunings.
Controlled gates are parameter-free: they run at target resonance with the
pi/2 control phase switched on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gates as _gates
from .errors import ConfigError, DegenerateParametersError
from .scattering import phase_factor, rotation_entries
from .simulator import apply_gate_amps, prob_one_amps

__all__ = [
    "ROTATION",
    "PHASE",
    "CONTROLLED",
    "CircuitSpec",
    "GateAddress",
    "ThetaKey",
    "ParameterTable",
    "build_circuit",
    "init_parameters",
    "encode_1d",
    "encode_2d",
    "Binder",
    "forward",
    "forward_batch",
    "forward_with_replacement",
    "output_fn",
    "table_to_doc",
    "table_from_doc",
]

ROTATION = "rotation"
PHASE = "phase"
CONTROLLED = "controlled"

PHYSICAL_SPACE = "physical"
ANGLE_SPACE = "angle"

FIXED_DETUNING_RANGE = (-2.0, 2.0)
OMEGA_INIT_RANGE = (0.0, 2.0)
LASER_INIT_RANGE = (-2.0, 2.0)


@dataclass(frozen=True)
class CircuitSpec:
    """Architecture parameters: qubits, layer counts, rotations per layer."""

    Q: int
    L: int
    N: int
    L_prime: int
    control_phase: bool = True

    def __post_init__(self):
        for name in ("Q", "L", "N", "L_prime"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {v!r}")


@dataclass(frozen=True, order=True)
class GateAddress:
    """Position of one gate: part, qubit, slot within the layer, layer, kind.

    For controlled gates ``qubit`` is the control and the target is
    ``qubit + 1``.
    """

    part: int
    qubit: int
    slot: int
    layer: int
    kind: str


@dataclass(frozen=True, order=True)
class ThetaKey:
    """One trainable coordinate: a gate address plus the parameter name."""

    address: GateAddress
    name: str


def build_circuit(spec: CircuitSpec) -> tuple[GateAddress, ...]:
    """Deterministic gate order of the two-part circuit."""
    out: list[GateAddress] = []
    for layer in range(1, spec.L + 1):
        for qubit in range(1, spec.Q + 1):
            for slot in range(1, spec.N + 1):
                out.append(GateAddress(1, qubit, slot, layer, ROTATION))
        for ctrl in range(1, spec.Q):
            out.append(GateAddress(1, ctrl, 1, layer, CONTROLLED))
    for layer in range(1, spec.L_prime + 1):
        for qubit in range(1, spec.Q + 1):
            out.append(GateAddress(2, qubit, 1, layer, ROTATION))
            out.append(GateAddress(2, qubit, 1, layer, PHASE))
        for ctrl in range(1, spec.Q):
            out.append(GateAddress(2, ctrl, 1, layer, CONTROLLED))
    return tuple(out)


def _trainable_param_names(address: GateAddress) -> tuple[str, ...]:
    if address.kind == CONTROLLED:
        return ()
    if address.part == 1:
        return ("omega",) if address.kind == ROTATION else ()
    return ("omega", "delta_laser")


@dataclass
class ParameterTable:
    """Frozen photon detunings plus the trainable-parameter layout and seeds."""

    spec: CircuitSpec
    seed: int
    train_part_one_omega: bool
    fixed_delta_k: dict[GateAddress, float]
    theta_keys: tuple[ThetaKey, ...]
    theta0: np.ndarray
    frozen: dict[ThetaKey, float]
    _index: dict[ThetaKey, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.theta0 = np.asarray(self.theta0, dtype=float)
        if self.theta0.shape != (len(self.theta_keys),):
            raise ValueError("theta0 length must match theta_keys")
        self._index = {k: i for i, k in enumerate(self.theta_keys)}

    @property
    def n_trainable(self) -> int:
        return len(self.theta_keys)

    def theta_index(self, key: ThetaKey) -> int:
        return self._index[key]

    def is_trainable(self, key: ThetaKey) -> bool:
        return key in self._index

    def param_value(self, key: ThetaKey, theta: np.ndarray) -> float:
        if key in self._index:
            return float(theta[self._index[key]])
        return self.frozen[key]


def init_parameters(
    spec: CircuitSpec, seed: int, train_part_one_omega: bool = True
) -> ParameterTable:
    """Draw the frozen photon detunings and the initial trainable values.

    One seeded generator drives all draws in circuit order, so a table is
    bit-reproducible from (spec, seed) alone.  Rabi frequencies start
    uniform in [0, 2], laser detunings uniform in [-2, 2].
    """
    rng = np.random.default_rng(seed)
    addresses = build_circuit(spec)
    fixed = {
        a: float(rng.uniform(*FIXED_DETUNING_RANGE))
        for a in addresses
        if a.kind != CONTROLLED
    }
    all_keys: list[ThetaKey] = []
    for a in addresses:
        for name in _trainable_param_names(a):
            all_keys.append(ThetaKey(a, name))
    values = np.array(
        [
            rng.uniform(*(OMEGA_INIT_RANGE if k.name == "omega" else LASER_INIT_RANGE))
            for k in all_keys
        ],
        dtype=float,
    )
    if train_part_one_omega:
        keys, theta0, frozen = tuple(all_keys), values, {}
    else:
        trainable = [k.address.part == 2 for k in all_keys]
        keys = tuple(k for k, t in zip(all_keys, trainable) if t)
        theta0 = values[np.asarray(trainable)]
        frozen = {k: float(v) for k, v, t in zip(all_keys, values, trainable) if not t}
    return ParameterTable(
        spec=spec,
        seed=seed,
        train_part_one_omega=train_part_one_omega,
        fixed_delta_k=fixed,
        theta_keys=keys,
        theta0=theta0,
        frozen=frozen,
    )


def _encoding_addresses(table: ParameterTable) -> list[GateAddress]:
    return [
        a
        for a in build_circuit(table.spec)
        if a.part == 1 and a.kind == ROTATION
    ]


def encode_1d(table: ParameterTable, x: float) -> dict[GateAddress, float]:
    """Bind a scalar input to every Part-One rotation's laser detuning."""
    if not np.isfinite(x):
        raise ValueError("input value must be finite")
    return {a: float(x) for a in _encoding_addresses(table)}


def encode_2d(table: ParameterTable, x1: float, x2: float) -> dict[GateAddress, float]:
    """Bind a 2-D input: odd rotation slots take x1, even slots take x2."""
    if table.spec.N % 2 != 0:
        raise ConfigError("2-D encoding needs an even number of rotation slots")
    if not (np.isfinite(x1) and np.isfinite(x2)):
        raise ValueError("input values must be finite")
    return {
        a: float(x1) if a.slot % 2 == 1 else float(x2)
        for a in _encoding_addresses(table)
    }


def output_fn(prob: float, scale: float, offset: float) -> float:
    """Linear read-out g = scale * P + offset."""
    return scale * prob + offset


@dataclass(frozen=True)
class _Slot:
    address: GateAddress
    qubits: tuple[int, ...]
    delta_k: float = 0.0
    omega_idx: int = -1
    omega_value: float = 0.0
    laser_idx: int = -1
    encode_col: int = -1
    angle_idx: int = -1


class Binder:
    """Resolves (theta, inputs) into concrete gate matrices and angle data.

    ``space`` selects the trainable coordinates: ``physical`` trains laser
    parameters (Rabi frequencies and detunings) and chains angle gradients
    back to them; ``angle`` trains the Part-Two gate angles directly,
    freezing Part-One Rabi frequencies at their initial values.
    """

    def __init__(self, spec: CircuitSpec, table: ParameterTable, space: str = PHYSICAL_SPACE):
        if space not in (PHYSICAL_SPACE, ANGLE_SPACE):
            raise ConfigError(f"unknown gradient space {space!r}")
        if table.spec != spec:
            raise ValueError("parameter table was built for a different circuit")
        self.spec = spec
        self.table = table
        self.space = space
        self.addresses = build_circuit(spec)
        self._controlled = _gates.controlled_gate(
            _gates.ControlledGateParams(0.0, spec.control_phase)
        ).matrix
        self._identity4 = np.eye(4, dtype=complex)
        slots: list[_Slot] = []
        keys: list[ThetaKey] = []
        for a in self.addresses:
            if a.kind == CONTROLLED:
                slots.append(_Slot(a, (a.qubit, a.qubit + 1)))
                continue
            delta_k = table.fixed_delta_k[a]
            if a.part == 1:
                okey = ThetaKey(a, "omega")
                if space == PHYSICAL_SPACE and table.is_trainable(okey):
                    oidx, oval = table.theta_index(okey), 0.0
                else:
                    oidx = -1
                    oval = table.frozen.get(okey)
                    if oval is None:
                        oval = float(table.theta0[table.theta_index(okey)])
                col = 0 if a.slot % 2 == 1 else 1
                slots.append(
                    _Slot(a, (a.qubit,), delta_k, oidx, oval, encode_col=col)
                )
            elif space == PHYSICAL_SPACE:
                slots.append(
                    _Slot(
                        a,
                        (a.qubit,),
                        delta_k,
                        omega_idx=table.theta_index(ThetaKey(a, "omega")),
                        laser_idx=table.theta_index(ThetaKey(a, "delta_laser")),
                    )
                )
            else:
                keys.append(ThetaKey(a, "angle"))
                slots.append(
                    _Slot(a, (a.qubit,), delta_k, angle_idx=len(keys) - 1)
                )
        self.slots = tuple(slots)
        if space == PHYSICAL_SPACE:
            self.theta_keys = table.theta_keys
        else:
            self.theta_keys = tuple(keys)

    @property
    def n_params(self) -> int:
        return len(self.theta_keys)

    def initial_theta(self) -> np.ndarray:
        """Starting point in this space (angles derived from the drawn lasers)."""
        if self.space == PHYSICAL_SPACE:
            return self.table.theta0.copy()
        vals = np.empty(len(self.theta_keys), dtype=float)
        for i, key in enumerate(self.theta_keys):
            a = key.address
            omega = self.table.param_value(ThetaKey(a, "omega"), self.table.theta0)
            laser = self.table.param_value(ThetaKey(a, "delta_laser"), self.table.theta0)
            dk = self.table.fixed_delta_k[a]
            fn = _gates.rotation_angle if a.kind == ROTATION else _gates.phase_angle
            vals[i] = fn(omega, dk, laser)
        return vals

    @staticmethod
    def as_inputs(xs) -> np.ndarray:
        """Normalize inputs to shape (batch, dim) with dim 1 or 2."""
        if isinstance(xs, np.ndarray) and xs.ndim == 2 and xs.dtype == np.float64:
            return xs
        arr = np.asarray(xs, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.shape[1] not in (1, 2):
            raise ValueError("inputs must be scalars, 1-D, or rows of 2 features")
        if not np.all(np.isfinite(arr)):
            raise ValueError("inputs must be finite")
        return arr

    def slot_params(self, slot: _Slot, theta: np.ndarray, xs: np.ndarray):
        """(omega, laser detuning) of a single-qubit slot; laser may be (B,)."""
        if slot.omega_idx >= 0:
            omega = float(theta[slot.omega_idx])
        else:
            omega = slot.omega_value
        if slot.encode_col >= 0:
            col = min(slot.encode_col, xs.shape[1] - 1)
            laser = xs[:, col]
        else:
            laser = float(theta[slot.laser_idx])
        return omega, laser

    def matrices(self, theta, xs, controlled_identity: bool = False) -> list[np.ndarray]:
        """Concrete gate matrices in circuit order; Part-One ones are batched."""
        xs = self.as_inputs(xs)
        if self.spec.N % 2 != 0 and xs.shape[1] == 2:
            raise ConfigError("2-D encoding needs an even number of rotation slots")
        theta = np.asarray(theta, dtype=float)
        mats: list[np.ndarray] = []
        for slot in self.slots:
            a = slot.address
            if a.kind == CONTROLLED:
                mats.append(self._identity4 if controlled_identity else self._controlled)
                continue
            if slot.angle_idx >= 0:
                ang = float(theta[slot.angle_idx])
                fn = _gates.rx_matrix if a.kind == ROTATION else _gates.phase_matrix
                mats.append(fn(ang))
                continue
            omega, laser = self.slot_params(slot, theta, xs)
            try:
                if a.kind == ROTATION:
                    diag, off = rotation_entries(omega, slot.delta_k, laser)
                else:
                    factor = phase_factor(omega, slot.delta_k, laser)
            except DegenerateParametersError as exc:
                raise DegenerateParametersError(f"{exc} at gate {a}") from exc
            if a.kind == ROTATION:
                if np.ndim(diag) == 0:
                    mats.append(np.array([[diag, off], [off, diag]], dtype=complex))
                else:
                    m = np.empty(diag.shape + (2, 2), dtype=complex)
                    m[..., 0, 0] = diag
                    m[..., 1, 1] = diag
                    m[..., 0, 1] = off
                    m[..., 1, 0] = off
                    mats.append(m)
            else:
                m = np.zeros(np.shape(factor) + (2, 2), dtype=complex)
                m[..., 0, 0] = factor
                m[..., 1, 1] = 1.0
                mats.append(m)
        return mats

    def slot_angle(self, slot: _Slot, theta, xs):
        """Current gate angle of a parametrized slot; per-point for Part One."""
        if slot.angle_idx >= 0:
            return float(np.asarray(theta, dtype=float)[slot.angle_idx])
        omega, laser = self.slot_params(slot, np.asarray(theta, float), self.as_inputs(xs))
        fn = _gates.rotation_angle if slot.address.kind == ROTATION else _gates.phase_angle
        return fn(omega, slot.delta_k, laser)

    def slot_chain(self, slot: _Slot, theta, xs):
        """(theta index, d(angle)/d(coordinate)) pairs for a slot's trainables."""
        if slot.address.kind == CONTROLLED:
            return []
        if slot.angle_idx >= 0:
            return [(slot.angle_idx, 1.0)]
        out = []
        omega, laser = self.slot_params(slot, np.asarray(theta, float), self.as_inputs(xs))
        grad_fn = (
            _gates.rotation_angle_gradients
            if slot.address.kind == ROTATION
            else _gates.phase_angle_gradients
        )
        if slot.omega_idx >= 0 or slot.laser_idx >= 0:
            d_omega, d_laser = grad_fn(omega, slot.delta_k, laser)
            if slot.omega_idx >= 0:
                out.append((slot.omega_idx, d_omega))
            if slot.laser_idx >= 0:
                out.append((slot.laser_idx, d_laser))
        return out

    def run(self, matrices, controlled_identity: bool = False, batch: int = 1):
        """Apply prepared matrices to |0...0>, returning final amplitudes."""
        dim = 2**self.spec.Q
        amps = np.zeros((batch, dim), dtype=complex)
        amps[:, 0] = 1.0
        for mat, slot in zip(matrices, self.slots):
            amps = apply_gate_amps(amps, mat, slot.qubits, self.spec.Q)
        return amps

    def forward(self, theta, xs, controlled_identity: bool = False) -> np.ndarray:
        xs_arr = self.as_inputs(xs)
        mats = self.matrices(theta, xs_arr, controlled_identity)
        amps = self.run(mats, controlled_identity, batch=xs_arr.shape[0])
        return prob_one_amps(amps, self.spec.Q, self.spec.Q)


def forward_batch(
    spec: CircuitSpec,
    table: ParameterTable,
    theta,
    xs,
    *,
    controlled_identity: bool = False,
    space: str = PHYSICAL_SPACE,
) -> np.ndarray:
    """Measured P(last qubit = 1) for a batch of inputs."""
    binder = Binder(spec, table, space)
    theta = binder.initial_theta() if theta is None else theta
    return binder.forward(theta, xs, controlled_identity)


def forward(
    spec: CircuitSpec,
    table: ParameterTable,
    theta,
    x,
    *,
    controlled_identity: bool = False,
    space: str = PHYSICAL_SPACE,
) -> float:
    """Measured P for a single input point (scalar or 2-vector)."""
    xs = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)
    return float(
        forward_batch(
            spec,
            table,
            theta,
            xs,
            controlled_identity=controlled_identity,
            space=space,
        )[0]
    )


def forward_with_replacement(
    spec: CircuitSpec,
    table: ParameterTable,
    theta,
    x,
    address: GateAddress,
    matrix: np.ndarray,
    *,
    controlled_identity: bool = False,
    space: str = PHYSICAL_SPACE,
) -> float:
    """Forward pass with one gate's matrix overridden; used by shift rules."""
    binder = Binder(spec, table, space)
    theta = binder.initial_theta() if theta is None else theta
    xs = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)
    mats = binder.matrices(theta, xs, controlled_identity)
    positions = [i for i, s in enumerate(binder.slots) if s.address == address]
    if not positions:
        raise ValueError(f"no gate at address {address}")
    mats[positions[0]] = np.asarray(matrix, dtype=complex)
    amps = binder.run(mats, controlled_identity, batch=1)
    return float(prob_one_amps(amps, spec.Q, spec.Q)[0])


def _address_doc(a: GateAddress) -> dict:
    return {
        "part": a.part,
        "qubit": a.qubit,
        "slot": a.slot,
        "layer": a.layer,
        "kind": a.kind,
    }


def _address_from_doc(d: dict) -> GateAddress:
    return GateAddress(
        int(d["part"]), int(d["qubit"]), int(d["slot"]), int(d["layer"]), str(d["kind"])
    )


def table_to_doc(table: ParameterTable, theta=None) -> dict:
    """JSON-ready checkpoint: seed, circuit shape, frozen detunings, trainables."""
    theta = table.theta0 if theta is None else np.asarray(theta, dtype=float)
    doc = {
        "seed": table.seed,
        "spec": {
            "Q": table.spec.Q,
            "L": table.spec.L,
            "N": table.spec.N,
            "L_prime": table.spec.L_prime,
            "control_phase": table.spec.control_phase,
        },
        "train_part_one_omega": table.train_part_one_omega,
        "F": [
            {"address": _address_doc(a), "delta_k": v}
            for a, v in table.fixed_delta_k.items()
        ],
        "theta": [
            {"address": _address_doc(k.address), "param_name": k.name, "value": float(v)}
            for k, v in zip(table.theta_keys, theta)
        ],
    }
    if table.frozen:
        doc["fixed_omega"] = [
            {"address": _address_doc(k.address), "param_name": k.name, "value": v}
            for k, v in table.frozen.items()
        ]
    return doc


def table_from_doc(doc: dict) -> tuple[ParameterTable, np.ndarray]:
    """Rebuild a table and its trainable vector from a checkpoint document."""
    s = doc["spec"]
    spec = CircuitSpec(
        int(s["Q"]),
        int(s["L"]),
        int(s["N"]),
        int(s["L_prime"]),
        bool(s.get("control_phase", True)),
    )
    fixed = {
        _address_from_doc(e["address"]): float(e["delta_k"]) for e in doc["F"]
    }
    theta_pairs = [
        (ThetaKey(_address_from_doc(e["address"]), e["param_name"]), float(e["value"]))
        for e in doc["theta"]
    ]
    frozen = {
        ThetaKey(_address_from_doc(e["address"]), e["param_name"]): float(e["value"])
        for e in doc.get("fixed_omega", [])
    }
    table = ParameterTable(
        spec=spec,
        seed=int(doc["seed"]),
        train_part_one_omega=bool(doc.get("train_part_one_omega", True)),
        fixed_delta_k=fixed,
        theta_keys=tuple(k for k, _ in theta_pairs),
        theta0=np.array([v for _, v in theta_pairs], dtype=float),
        frozen=frozen,
    )
    return table, table.theta0.copy()
