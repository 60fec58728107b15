"""Photonic variational circuits built from laser-driven chiral waveguide emitters.

The package simulates a machine-learning circuit whose gates are the exact
single-photon transfer matrices of laser-dressed atoms chirally coupled to
waveguides, trains it by full-batch gradient descent with exact shift-rule
gradients, and models the fidelity cost of imperfect chirality and atomic
decay.
"""

from .circuit import (
    Binder,
    CircuitSpec,
    GateAddress,
    ParameterTable,
    ThetaKey,
    build_circuit,
    encode_1d,
    encode_2d,
    forward,
    forward_batch,
    init_parameters,
    output_fn,
    table_from_doc,
    table_to_doc,
)
from .errors import (
    ChiralNetError,
    ConfigError,
    DegenerateParametersError,
    NonFiniteGradientError,
)
from .gates import (
    ControlledGateParams,
    PhaseGateParams,
    QubitGate,
    RotationGateParams,
    angle_of_phase,
    angle_of_rotation,
    controlled_gate,
    dphi_dparams,
    dtheta_dparams,
    imperfect_rotation_gate,
    phase_gate,
    rotation_gate,
    state_fidelity,
)
from .learning import (
    Dataset,
    TrainConfig,
    TrainRun,
    classification_sets,
    classify_metric,
    cost,
    cost_gradient,
    gd_step,
    physical_gradient,
    regression_grid,
    regression_targets,
    shift_gradient,
    train,
)
from .scattering import (
    EmitterSpec,
    ScatterMatrix,
    conversion_probability,
    conversion_transfer,
    lambda_phase_1ch,
    lambda_transfer_2ch,
    multichannel_transfer,
    twolevel_transfer,
)
from .simulator import StateVector, apply_1q, apply_2q, init_state, norm2, prob_one

__version__ = "0.1.0"
