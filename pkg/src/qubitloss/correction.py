"""Recovery of the GBP logical qubit after one qubit has been lost and refilled.

For a loss on qubit 1 the refilled register is an equal mixture of
``c0|0000> + c1|0011>`` and ``c0|0111> + c1|0100>``; qubit 2 labels the branch.
Recovery is

1. measure qubit 2 in Z (bit b),
2. H on qubit 1,
3. CNOT 1->2, 1->3, 1->4,
4. X on qubit 1 if b = 1.

A loss anywhere else is first relabeled onto qubit 1 with a codeword-preserving
pair swap, and the swap is undone afterwards. No extra qubits are used.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field

import numpy as np

from .circuit import CNOT, H, X, Circuit, Measure
from .errors import DomainError
from .gbp import loss_permutation
from .loss import insert_fresh
from .qstate import (
    DensityMatrix,
    MeasurementResult,
    PureState,
    apply_circuit,
    apply_gate,
    fidelity,
    measure_qubit,
    partial_trace,
)

REGISTER_SIZE = 4
BRANCH_QUBIT = 2


class MeasurementMode(str, enum.Enum):
    PROJECTIVE = "projective"
    DESTRUCTIVE = "destructive-replace"


@dataclass(frozen=True, eq=False)
class CorrectionOutcome:
    measured_bit: int
    probability: float
    circuit_applied: Circuit
    output: DensityMatrix
    recovered_fidelity: float | None = None
    # snapshots after each step, in the relabeled frame (loss on qubit 1)
    stages: dict[str, DensityMatrix] = field(default_factory=dict, repr=False)


@functools.lru_cache(maxsize=2)
def _fixed_circuit(measured_bit: int) -> Circuit:
    ops = [H(1), CNOT(1, 2), CNOT(1, 3), CNOT(1, 4)]
    if measured_bit:
        ops.append(X(1))
    return Circuit(tuple(ops))


def correction_circuit(measured_bit: int) -> Circuit:
    """H(1), CNOT(1,2), CNOT(1,3), CNOT(1,4), then X(1) when the branch bit is 1."""
    if measured_bit not in (0, 1):
        raise DomainError(f"measured bit must be 0 or 1, got {measured_bit!r}")
    return _fixed_circuit(int(measured_bit))


def destructive_measure_replace(
    rho: DensityMatrix,
    qubit: int,
    rng: np.random.Generator | None = None,
    forced: int | None = None,
) -> MeasurementResult:
    """Read the qubit out destructively, put a |0> atom back, and flip it if the readout was 1.

    The atom is gone after readout, so the post-measurement state of that qubit
    is rebuilt from the classical result alone.
    """
    readout = measure_qubit(rho, qubit, forced=forced, rng=rng)
    if rho.n_qubits == 1:
        state = DensityMatrix.basis("0")
    else:
        remaining = partial_trace(readout.collapsed.with_sites(None), qubit)
        state = insert_fresh(remaining, qubit)
    if readout.outcome:
        state = apply_gate(state, X(qubit))
    return MeasurementResult(readout.outcome, readout.probability, state.with_sites(rho.sites))


def _check_register(state: DensityMatrix, stage: str) -> None:
    if state.n_qubits != REGISTER_SIZE:
        raise RuntimeError(f"register holds {state.n_qubits} qubits at stage {stage!r}")


def correct_after_loss(
    rho_e: DensityMatrix,
    lost_site: int,
    mode: MeasurementMode | str = MeasurementMode.PROJECTIVE,
    rng: np.random.Generator | None = None,
    forced_bit: int | None = None,
    reference: PureState | None = None,
) -> CorrectionOutcome:
    """Run the recovery on the refilled 4-qubit register.

    The branch bit is sampled from ``rng`` unless ``forced_bit`` is given.
    When ``reference`` (the encoded logical state) is supplied its fidelity
    with the output is reported.
    """
    if not isinstance(rho_e, DensityMatrix):
        raise TypeError(f"expected a DensityMatrix, got {type(rho_e).__name__}")
    if rho_e.n_qubits != REGISTER_SIZE:
        raise DomainError(f"expected a {REGISTER_SIZE}-qubit register, got {rho_e.n_qubits}")
    if not 1 <= lost_site <= REGISTER_SIZE:
        raise DomainError(f"lost site {lost_site} out of range 1..{REGISTER_SIZE}")
    mode = MeasurementMode(mode)

    relabel = loss_permutation(lost_site)
    stages = {}
    state = apply_circuit(rho_e, relabel)
    stages["relabeled"] = state

    if mode is MeasurementMode.PROJECTIVE:
        readout = measure_qubit(state, BRANCH_QUBIT, forced=forced_bit, rng=rng)
    else:
        readout = destructive_measure_replace(state, BRANCH_QUBIT, rng=rng, forced=forced_bit)
    state = readout.collapsed
    stages["measured"] = state

    fix = correction_circuit(readout.outcome)
    names = ["hadamard", "cnot_1_2", "cnot_1_3", "cnot_1_4", "flip"]
    for gate, name in zip(fix, names):
        state = apply_gate(state, gate)
        stages[name] = state

    state = apply_circuit(state, relabel.inverse())
    stages["output"] = state
    for name, snapshot in stages.items():
        _check_register(snapshot, name)

    applied = relabel + Circuit((Measure(BRANCH_QUBIT),)) + fix + relabel.inverse()
    fid = None if reference is None else fidelity(state, reference)
    return CorrectionOutcome(readout.outcome, readout.probability, applied, state, fid, stages)
