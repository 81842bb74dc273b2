"""Simulation of qubit loss, QND detection and recovery with a 4-qubit erasure code."""

from .cavity import CavityParams, FeasibilityReport, feasibility, photon_window
from .circuit import Circuit, Gate, parse_circuit
from .correction import CorrectionOutcome, MeasurementMode, correct_after_loss, correction_circuit
from .errors import (
    CapacityError,
    DomainError,
    ImpossibleOutcomeError,
    ProtocolOrderError,
    QubitLossError,
    SingularityError,
    ValidationError,
)
from .gbp import GBP, CodeSpec, LogicalQubit, encode, logical_state, loss_permutation, verify_erasure_code
from .leakage import LevelLabel, classify, handle_leak, return_to_ground
from .loss import apply_loss, insert_fresh, loss_reset_channel, qnd_sweep
from .montecarlo import TrialConfig, estimate_failure, run_trial, run_trials
from .qstate import ChoiMatrix, DensityMatrix, PureState, choi_of, fidelity, measure_qubit, partial_trace, tensor

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "CavityParams",
    "ChoiMatrix",
    "Circuit",
    "CodeSpec",
    "CorrectionOutcome",
    "DensityMatrix",
    "DomainError",
    "FeasibilityReport",
    "GBP",
    "Gate",
    "ImpossibleOutcomeError",
    "LevelLabel",
    "LogicalQubit",
    "MeasurementMode",
    "ProtocolOrderError",
    "PureState",
    "QubitLossError",
    "SingularityError",
    "TrialConfig",
    "ValidationError",
    "apply_loss",
    "choi_of",
    "classify",
    "correct_after_loss",
    "correction_circuit",
    "encode",
    "estimate_failure",
    "feasibility",
    "fidelity",
    "handle_leak",
    "insert_fresh",
    "logical_state",
    "loss_permutation",
    "loss_reset_channel",
    "measure_qubit",
    "parse_circuit",
    "partial_trace",
    "photon_window",
    "qnd_sweep",
    "return_to_ground",
    "run_trial",
    "run_trials",
    "tensor",
    "verify_erasure_code",
]
