"""The 4-qubit Grassl-Beth-Pellizzari erasure code.

    |0_L> = (|0000> + |1111>) / sqrt(2)
    |1_L> = (|0011> + |1100>) / sqrt(2)

Both codewords are invariant under the pair swaps (12)(34), (13)(24) and
(14)(23), which is what lets a single recovery circuit written for a loss on
qubit 1 handle a loss anywhere.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field

import numpy as np

from .circuit import SWAP, Circuit
from .errors import DomainError, ValidationError
from .qstate import ATOL, DensityMatrix, PureState

GRAM_ATOL = 1e-10

_PAULIS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class LogicalQubit:
    c0: complex
    c1: complex

    def __post_init__(self):
        c0, c1 = complex(self.c0), complex(self.c1)
        norm = abs(c0) ** 2 + abs(c1) ** 2
        if abs(norm - 1) > ATOL:
            raise ValidationError(f"|c0|^2 + |c1|^2 = {norm!r}, expected 1")
        object.__setattr__(self, "c0", c0)
        object.__setattr__(self, "c1", c1)

    @classmethod
    def normalized(cls, c0: complex, c1: complex) -> "LogicalQubit":
        norm = np.sqrt(abs(c0) ** 2 + abs(c1) ** 2)
        if norm == 0:
            raise ValidationError("both amplitudes are zero")
        return cls(c0 / norm, c1 / norm)

    @classmethod
    def haar_random(cls, rng: np.random.Generator) -> "LogicalQubit":
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        return cls.normalized(v[0], v[1])


@dataclass(frozen=True, eq=False)
class CodeSpec:
    """A code encoding one logical qubit into ``n_physical`` qubits."""

    codeword_0: PureState
    codeword_1: PureState
    name: str = field(default="code", compare=False)

    def __post_init__(self):
        if self.codeword_0.n_qubits != self.codeword_1.n_qubits:
            raise ValidationError("codewords live on different numbers of qubits")
        overlap = abs(self.codeword_0.inner(self.codeword_1))
        if overlap > ATOL:
            raise ValidationError(f"codewords are not orthogonal (overlap {overlap:.3g})")

    @property
    def n_physical(self) -> int:
        return self.codeword_0.n_qubits

    def logical_state(self, lq: LogicalQubit) -> PureState:
        return PureState(lq.c0 * self.codeword_0.amplitudes + lq.c1 * self.codeword_1.amplitudes)

    def codespace_projector(self) -> np.ndarray:
        a, b = self.codeword_0.amplitudes, self.codeword_1.amplitudes
        return np.outer(a, a.conj()) + np.outer(b, b.conj())


def logical_zero() -> PureState:
    return PureState.from_labels({"0000": 2**-0.5, "1111": 2**-0.5})


def logical_one() -> PureState:
    return PureState.from_labels({"0011": 2**-0.5, "1100": 2**-0.5})


GBP = CodeSpec(logical_zero(), logical_one(), name="GBP")


def repetition_code() -> CodeSpec:
    """{|00>, |11>}: detects a bit flip but does not survive the loss of a qubit."""
    return CodeSpec(PureState.basis("00"), PureState.basis("11"), name="repetition-2")


def logical_state(lq: LogicalQubit, code: CodeSpec = GBP) -> PureState:
    return code.logical_state(lq)


def encode(lq: LogicalQubit, code: CodeSpec = GBP) -> DensityMatrix:
    """Pure density matrix of c0|0_L> + c1|1_L>."""
    if not isinstance(lq, LogicalQubit):
        raise ValidationError(f"expected a LogicalQubit, got {type(lq).__name__}")
    return code.logical_state(lq).density()


@dataclass(frozen=True, eq=False)
class ErasureReport:
    position: int
    correctable: bool
    gram: np.ndarray = field(repr=False)  # gram[a, b, i, j] = <i_L| E_a^dag E_b |j_L>
    lambdas: np.ndarray = field(repr=False)
    max_violation: float
    operators: tuple[str, ...] = tuple(_PAULIS)


def verify_erasure_code(code: CodeSpec, position: int) -> ErasureReport:
    """Check the erasure Knill-Laflamme conditions for a known loss at ``position``.

    Every pair of single-qubit Paulis on that qubit must satisfy
    ``<i_L|E_a^dag E_b|j_L> = lambda_ab delta_ij``.
    """
    n = code.n_physical
    if not 1 <= position <= n:
        raise DomainError(f"position {position} out of range 1..{n}")
    words = np.stack([code.codeword_0.amplitudes, code.codeword_1.amplitudes])
    ops = [embed_single(p, position, n) for p in _PAULIS.values()]
    k = len(ops)
    gram = np.zeros((k, k, 2, 2), dtype=complex)
    for a, b in itertools.product(range(k), repeat=2):
        m = ops[a].conj().T @ ops[b]
        gram[a, b] = words.conj() @ m @ words.T
    lambdas = gram[:, :, 0, 0]
    off_diag = np.abs(gram[:, :, 0, 1]).max(initial=0.0)
    off_diag = max(off_diag, np.abs(gram[:, :, 1, 0]).max(initial=0.0))
    unequal = np.abs(gram[:, :, 0, 0] - gram[:, :, 1, 1]).max(initial=0.0)
    violation = float(max(off_diag, unequal))
    return ErasureReport(position, violation <= GRAM_ATOL, gram, lambdas, violation)


def embed_single(op: np.ndarray, position: int, n_qubits: int) -> np.ndarray:
    left = np.eye(2 ** (position - 1))
    right = np.eye(2 ** (n_qubits - position))
    return np.kron(np.kron(left, op), right)


# pair swaps that carry each position onto position 1
_LOSS_SWAPS = {
    1: (),
    2: ((1, 2), (3, 4)),
    3: ((1, 3), (2, 4)),
    4: ((1, 4), (2, 3)),
}


@functools.lru_cache(maxsize=32)
def loss_permutation(position: int, code: CodeSpec = GBP) -> Circuit:
    """Codeword-preserving relabeling that moves a loss at ``position`` onto qubit 1.

    The returned circuit is its own inverse. It is checked against both
    codewords of ``code`` before being returned.
    """
    if position not in _LOSS_SWAPS:
        raise DomainError(f"position must be in 1..4, got {position}")
    if code.n_physical != 4:
        raise DomainError("loss permutations are defined for 4-qubit codes")
    circuit = Circuit(tuple(SWAP(a, b) for a, b in _LOSS_SWAPS[position]))
    u = circuit.unitary(4)
    for word in (code.codeword_0, code.codeword_1):
        moved = u @ word.amplitudes
        if np.abs(moved - word.amplitudes).max() > ATOL:
            raise ValidationError(f"permutation for position {position} does not fix {code.name}")
    return circuit


def export_codewords(code: CodeSpec = GBP) -> dict:
    """Both codewords in the density-matrix fixture format."""
    return {
        "code": code.name,
        "logical_zero": code.codeword_0.density().to_dict(),
        "logical_one": code.codeword_1.density().to_dict(),
    }


__all__ = [
    "GBP",
    "CodeSpec",
    "ErasureReport",
    "LogicalQubit",
    "encode",
    "export_codewords",
    "logical_one",
    "logical_state",
    "logical_zero",
    "loss_permutation",
    "repetition_code",
    "verify_erasure_code",
]
