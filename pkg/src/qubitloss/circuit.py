"""Gates, circuits and the line-oriented circuit text format.

Qubits are addressed with 1-based indices; qubit 1 is the leftmost label in a
ket string and the most significant bit of an amplitude index.

Text format, one operation per line::

    H 1
    CNOT 1 3
    SWAP 2 4
    MEASURE 2
    MEASIG
    SEL 1,+1 -> 2,0

Blank lines and ``#`` comments are ignored by the parser.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

from .errors import DomainError, ValidationError

UNITARY_ATOL = 1e-12

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
_SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)

GATE_KINDS = ("H", "X", "Y", "Z", "RZ", "CNOT", "SWAP", "PERMUTE", "CUSTOM")


def is_unitary(matrix: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        return False
    eye = np.eye(matrix.shape[0])
    return bool(np.abs(matrix.conj().T @ matrix - eye).max() <= atol)


@dataclass(frozen=True, eq=False)
class Gate:
    """A unitary acting on ``targets`` (1-based, in the order of the matrix's tensor factors)."""

    kind: str
    targets: tuple[int, ...]
    matrix: np.ndarray = field(repr=False)
    param: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValidationError(f"unknown gate kind {self.kind!r}")
        targets = tuple(int(t) for t in self.targets)
        if any(t < 1 for t in targets):
            raise DomainError(f"qubit indices are 1-based, got {targets}")
        if len(set(targets)) != len(targets):
            raise ValidationError(f"repeated target in {targets}")
        matrix = np.array(self.matrix, dtype=complex)
        dim = 2 ** len(targets)
        if matrix.shape != (dim, dim):
            raise ValidationError(
                f"{self.kind} on {len(targets)} qubit(s) needs a {dim}x{dim} matrix, "
                f"got {matrix.shape}"
            )
        if not is_unitary(matrix):
            raise ValidationError(f"{self.kind} matrix is not unitary")
        matrix.setflags(write=False)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "matrix", matrix)

    def inverse(self) -> "Gate":
        param = None if self.param is None else -self.param
        return Gate(self.kind, self.targets, self.matrix.conj().T, param)

    def __eq__(self, other):
        if not isinstance(other, Gate):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.targets == other.targets
            and np.allclose(self.matrix, other.matrix, atol=UNITARY_ATOL)
        )

    def __hash__(self):
        return hash((self.kind, self.targets))


def H(q: int) -> Gate:
    return Gate("H", (q,), _H)


def X(q: int) -> Gate:
    return Gate("X", (q,), _X)


def Y(q: int) -> Gate:
    return Gate("Y", (q,), _Y)


def Z(q: int) -> Gate:
    return Gate("Z", (q,), _Z)


def RZ(q: int, angle: float) -> Gate:
    """exp(-i angle Z / 2) on qubit ``q``."""
    m = np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])
    return Gate("RZ", (q,), m, float(angle))


def CNOT(control: int, target: int) -> Gate:
    return Gate("CNOT", (control, target), _CNOT)


def SWAP(a: int, b: int) -> Gate:
    return Gate("SWAP", (a, b), _SWAP)


def custom(matrix: np.ndarray, targets: Sequence[int]) -> Gate:
    return Gate("CUSTOM", tuple(targets), matrix)


def permutation_matrix(order: Sequence[int]) -> np.ndarray:
    """Matrix that moves the content of old qubit ``order[k]`` to new position ``k+1``."""
    n = len(order)
    if sorted(order) != list(range(1, n + 1)):
        raise ValidationError(f"{order} is not a permutation of 1..{n}")
    dim = 2**n
    m = np.zeros((dim, dim), dtype=complex)
    for old in range(dim):
        bits = [(old >> (n - 1 - k)) & 1 for k in range(n)]
        new = 0
        for k in range(n):
            new = (new << 1) | bits[order[k] - 1]
        m[new, old] = 1
    return m


def permute(order: Sequence[int]) -> Gate:
    """Qubit relabeling on qubits 1..len(order) as a single PERMUTE gate."""
    order = tuple(int(o) for o in order)
    return Gate("PERMUTE", tuple(range(1, len(order) + 1)), permutation_matrix(order))


@dataclass(frozen=True)
class Measure:
    """Projective Z measurement record (not a unitary)."""

    qubit: int


@dataclass(frozen=True)
class MeasureSignature:
    """Phase-signature QND measurement pseudo-gate used by leakage plans."""

    qubit: int | None = None


@dataclass(frozen=True)
class Selective:
    """State-selective transfer between two hyperfine sublevels, given as (F, m_F) pairs."""

    source: tuple[int, int]
    dest: tuple[int, int]


Operation = Union[Gate, Measure, MeasureSignature, Selective]


@dataclass(frozen=True)
class Circuit:
    """An ordered, immutable list of operations."""

    ops: tuple[Operation, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))

    def __iter__(self) -> Iterator[Operation]:
        return iter(self.ops)

    def __len__(self) -> int:
        return len(self.ops)

    def __getitem__(self, i):
        return self.ops[i]

    def __add__(self, other: "Circuit") -> "Circuit":
        return Circuit(self.ops + tuple(other.ops))

    @property
    def gates(self) -> tuple[Gate, ...]:
        return tuple(op for op in self.ops if isinstance(op, Gate))

    def inverse(self) -> "Circuit":
        if len(self.gates) != len(self.ops):
            raise ValidationError("only purely unitary circuits can be inverted")
        return Circuit(tuple(g.inverse() for g in reversed(self.ops)))

    def unitary(self, n_qubits: int | None = None) -> np.ndarray:
        """Dense matrix of the whole circuit (later gates multiply on the left)."""
        if len(self.gates) != len(self.ops):
            raise ValidationError("circuit contains non-unitary operations")
        if n_qubits is None:
            n_qubits = max((max(g.targets) for g in self.ops), default=0)
        u = np.eye(2**n_qubits, dtype=complex)
        for g in self.ops:
            u = embed(g, n_qubits) @ u
        return u

    def to_text(self) -> str:
        return "".join(format_op(op) + "\n" for op in self.ops)


def embed(gate: Gate, n_qubits: int) -> np.ndarray:
    """Full 2^n x 2^n matrix of ``gate`` acting inside an n-qubit register."""
    if max(gate.targets) > n_qubits:
        raise DomainError(f"gate targets {gate.targets} exceed {n_qubits} qubits")
    k = len(gate.targets)
    rest = [q for q in range(1, n_qubits + 1) if q not in gate.targets]
    # gate qubits first, then the rest; undo the reordering afterwards
    order = list(gate.targets) + rest
    big = np.kron(gate.matrix, np.eye(2 ** (n_qubits - k)))
    p = permutation_matrix(order)
    return p.T @ big @ p


def _fmt_level(level: tuple[int, int]) -> str:
    f, m = level
    return f"{f},{m:+d}" if m else f"{f},0"


def format_op(op: Operation) -> str:
    if isinstance(op, Gate):
        if op.kind in ("CUSTOM", "PERMUTE"):
            raise ValidationError(f"{op.kind} gates have no text form")
        if op.kind == "RZ":
            return f"RZ {op.targets[0]} {op.param!r}"
        return " ".join([op.kind, *map(str, op.targets)])
    if isinstance(op, Measure):
        return f"MEASURE {op.qubit}"
    if isinstance(op, MeasureSignature):
        return "MEASIG" if op.qubit is None else f"MEASIG {op.qubit}"
    if isinstance(op, Selective):
        return f"SEL {_fmt_level(op.source)} -> {_fmt_level(op.dest)}"
    raise TypeError(f"cannot format {op!r}")


def _parse_level(text: str) -> tuple[int, int]:
    try:
        f, m = text.split(",")
        return int(f), int(m)
    except ValueError:
        raise ValidationError(f"bad level {text!r}, expected F,m") from None


_ONE_QUBIT = {"H": H, "X": X, "Y": Y, "Z": Z}
_TWO_QUBIT = {"CNOT": CNOT, "SWAP": SWAP}


def parse_op(line: str) -> Operation:
    head, _, rest = line.strip().partition(" ")
    head = head.upper()
    args = rest.split()
    try:
        if head in _ONE_QUBIT and len(args) == 1:
            return _ONE_QUBIT[head](int(args[0]))
        if head in _TWO_QUBIT and len(args) == 2:
            return _TWO_QUBIT[head](int(args[0]), int(args[1]))
        if head == "RZ" and len(args) == 2:
            return RZ(int(args[0]), float(args[1]))
        if head == "MEASURE" and len(args) == 1:
            return Measure(int(args[0]))
        if head == "MEASIG" and len(args) <= 1:
            return MeasureSignature(int(args[0]) if args else None)
    except ValueError:
        raise ValidationError(f"cannot parse circuit line {line!r}") from None
    if head == "SEL":
        src, arrow, dst = rest.partition("->")
        if arrow:
            return Selective(_parse_level(src.strip()), _parse_level(dst.strip()))
    raise ValidationError(f"cannot parse circuit line {line!r}")


def parse_circuit(text: str | Iterable[str]) -> Circuit:
    lines = text.splitlines() if isinstance(text, str) else text
    ops = []
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if line:
            ops.append(parse_op(line))
    return Circuit(tuple(ops))
