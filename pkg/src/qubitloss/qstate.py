"""Dense pure and mixed states of a few qubits.

Conventions used throughout the package:

* qubits are numbered from 1; qubit 1 is the leftmost character of a ket label
  and the most significant bit of the amplitude index, so ``|0111>`` is
  index 7 of a 4-qubit register;
* states are immutable values, every operation returns a new object;
* algebraic identities are checked at ``ATOL`` (1e-12), spectra at
  ``PSD_FLOOR`` (1e-10).

A :class:`DensityMatrix` can optionally carry ``sites``: the physical lattice
sites held by each qubit of the register. This lets the loss/reinsertion
functions tell a vacant site from an occupied one. Plain states leave it as
``None``.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .circuit import Circuit, Gate, Measure
from .errors import (
    CapacityError,
    DomainError,
    ImpossibleOutcomeError,
    ValidationError,
)

ATOL = 1e-12
PSD_FLOOR = 1e-10
MAX_QUBITS = 12
# registers up to this size apply gates as cached full matrices
SMALL_REGISTER = 6


def _n_from_dim(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 2**n != dim:
        raise ValidationError(f"dimension {dim} is not a power of two")
    return n


def _axis(qubit: int, n_qubits: int) -> int:
    if not 1 <= qubit <= n_qubits:
        raise DomainError(f"qubit {qubit} out of range 1..{n_qubits}")
    return qubit - 1


def basis_index(label: str) -> int:
    """Amplitude index of a ket label such as ``"0111"``."""
    if not label or set(label) - {"0", "1"}:
        raise ValidationError(f"bad basis label {label!r}")
    return int(label, 2)


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        n = _n_from_dim(amps.size)
        if n > MAX_QUBITS:
            raise CapacityError(f"{n} qubits exceeds the maximum of {MAX_QUBITS}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > ATOL:
            raise ValidationError(f"state is not normalized (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return _n_from_dim(self.amplitudes.size)

    @classmethod
    def basis(cls, label: str) -> "PureState":
        amps = np.zeros(2 ** len(label), dtype=complex)
        amps[basis_index(label)] = 1
        return cls(amps)

    @classmethod
    def from_labels(cls, terms: dict[str, complex]) -> "PureState":
        """Build ``sum(c |label>)`` from a mapping; labels must share one length."""
        sizes = {len(k) for k in terms}
        if len(sizes) != 1:
            raise ValidationError("labels must all have the same length")
        amps = np.zeros(2 ** sizes.pop(), dtype=complex)
        for label, c in terms.items():
            amps[basis_index(label)] += c
        return cls(amps)

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def inner(self, other: "PureState") -> complex:
        """<self|other>."""
        if self.amplitudes.size != other.amplitudes.size:
            raise DomainError("dimension mismatch")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes],
        }


def check_density_matrix(matrix: np.ndarray) -> None:
    """Raise ValidationError unless ``matrix`` is Hermitian, unit-trace and PSD."""
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValidationError(f"density matrix must be square, got {matrix.shape}")
    herm = np.abs(matrix - matrix.conj().T).max()
    if herm > ATOL:
        raise ValidationError(f"matrix is not Hermitian (max deviation {herm:.3g})")
    tr = np.trace(matrix)
    if abs(tr - 1) > ATOL:
        raise ValidationError(f"trace is {tr:.15g}, expected 1")
    lo = np.linalg.eigvalsh(matrix).min()
    if lo < -PSD_FLOOR:
        raise ValidationError(f"matrix is not positive semidefinite (eigenvalue {lo:.3g})")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray = field(repr=False)
    sites: tuple[int, ...] | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"density matrix must be square, got {m.shape}")
        n = _n_from_dim(m.shape[0])
        if n > MAX_QUBITS:
            raise CapacityError(f"{n} qubits exceeds the maximum of {MAX_QUBITS}")
        check_density_matrix(m)
        if self.sites is not None:
            sites = tuple(int(s) for s in self.sites)
            if len(sites) != n or len(set(sites)) != n or list(sites) != sorted(sites):
                raise ValidationError(f"sites {sites} do not label {n} qubits in order")
            object.__setattr__(self, "sites", sites)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n_qubits(self) -> int:
        return _n_from_dim(self.matrix.shape[0])

    @classmethod
    def basis(cls, label: str) -> "DensityMatrix":
        return PureState.basis(label).density()

    @classmethod
    def maximally_mixed(cls, n_qubits: int = 1) -> "DensityMatrix":
        dim = 2**n_qubits
        return cls(np.eye(dim) / dim)

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def allclose(self, other: "DensityMatrix", atol: float = ATOL) -> bool:
        return self.matrix.shape == other.matrix.shape and bool(
            np.abs(self.matrix - other.matrix).max() <= atol
        )

    def with_sites(self, sites: Sequence[int] | None) -> "DensityMatrix":
        """Same matrix with new site labels (the matrix is not re-validated)."""
        if sites is not None:
            sites = tuple(int(s) for s in sites)
            n = self.n_qubits
            if len(sites) != n or len(set(sites)) != n or list(sites) != sorted(sites):
                raise ValidationError(f"sites {sites} do not label {n} qubits in order")
        out = object.__new__(DensityMatrix)
        object.__setattr__(out, "matrix", self.matrix)
        object.__setattr__(out, "sites", sites)
        return out

    def to_dict(self) -> dict:
        out = {
            "n_qubits": self.n_qubits,
            "matrix": [[float(z.real), float(z.imag)] for z in self.matrix.reshape(-1)],
        }
        if self.sites is not None:
            out["sites"] = list(self.sites)
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "DensityMatrix":
        n = int(doc["n_qubits"])
        dim = 2**n
        flat = np.asarray(doc["matrix"], dtype=float)
        if flat.shape != (dim * dim, 2):
            raise ValidationError(
                f"expected {dim * dim} [re, im] pairs for {n} qubits, got shape {flat.shape}"
            )
        m = (flat[:, 0] + 1j * flat[:, 1]).reshape(dim, dim)
        return cls(m, doc.get("sites"))

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "DensityMatrix":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Ensemble:
    """Mixture ``{(phi_1, p_1), ..., (phi_m, p_m)}`` of pure states."""

    branches: tuple[tuple[PureState, float], ...]

    def __post_init__(self):
        branches = tuple((s, float(p)) for s, p in self.branches)
        if not branches:
            raise ValidationError("an ensemble needs at least one branch")
        if len({s.n_qubits for s, _ in branches}) != 1:
            raise ValidationError("all branches must have the same number of qubits")
        if any(p < 0 or p > 1 for _, p in branches):
            raise ValidationError("branch probabilities must lie in [0, 1]")
        total = sum(p for _, p in branches)
        if abs(total - 1) > ATOL:
            raise ValidationError(f"branch probabilities sum to {total!r}")
        object.__setattr__(self, "branches", branches)

    def densify(self) -> DensityMatrix:
        dim = self.branches[0][0].amplitudes.size
        m = np.zeros((dim, dim), dtype=complex)
        for state, p in self.branches:
            a = state.amplitudes
            m += p * np.outer(a, a.conj())
        return DensityMatrix(m)


def as_density(state: PureState | DensityMatrix) -> DensityMatrix:
    return state.density() if isinstance(state, PureState) else state


def tensor(a, b, max_qubits: int | None = None):
    """Kronecker product with ``a`` occupying the leading (most significant) qubits."""
    limit = MAX_QUBITS if max_qubits is None else max_qubits
    if a.n_qubits + b.n_qubits > limit:
        raise CapacityError(
            f"{a.n_qubits} + {b.n_qubits} qubits exceeds the maximum of {limit}"
        )
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(np.kron(a.matrix, b.matrix))
    raise TypeError("tensor() needs two PureStates or two DensityMatrices")


def _apply_on_axes(t: np.ndarray, u: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    k = len(axes)
    ut = u.reshape((2,) * (2 * k))
    t = np.tensordot(ut, t, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(t, list(range(k)), list(axes))


@functools.lru_cache(maxsize=256)
def _embedded(u_bytes: bytes, targets: tuple[int, ...], n: int) -> np.ndarray:
    k = len(targets)
    u = np.frombuffer(u_bytes, dtype=complex).reshape(2**k, 2**k)
    full = np.eye(2**n, dtype=complex).reshape((2,) * (2 * n))
    full = _apply_on_axes(full, u, [q - 1 for q in targets])
    return full.reshape(2**n, 2**n)


def apply_unitary(
    state: DensityMatrix, u: np.ndarray, targets: Sequence[int]
) -> DensityMatrix:
    """rho -> U rho U^dagger with ``u`` acting on the 1-based ``targets``."""
    n = state.n_qubits
    axes = [_axis(q, n) for q in targets]
    dim = 2**n
    if n <= SMALL_REGISTER:
        full = _embedded(np.ascontiguousarray(u, dtype=complex).tobytes(), tuple(targets), n)
        m = full @ state.matrix @ full.conj().T
    else:
        t = state.matrix.reshape((2,) * (2 * n))
        t = _apply_on_axes(t, u, axes)
        t = _apply_on_axes(t, u.conj(), [a + n for a in axes])
        m = t.reshape(dim, dim)
    # re-symmetrize so rounding never accumulates into a Hermiticity violation
    return DensityMatrix(0.5 * (m + m.conj().T), state.sites)


def apply_gate(state: DensityMatrix, g: Gate) -> DensityMatrix:
    if not isinstance(g, Gate):
        raise TypeError(f"expected a Gate, got {type(g).__name__}")
    return apply_unitary(state, g.matrix, g.targets)


def apply_circuit(state: DensityMatrix, circuit: Circuit) -> DensityMatrix:
    """Apply every gate of ``circuit`` in order. Measurement records are rejected."""
    for op in circuit:
        if isinstance(op, Measure) or not isinstance(op, Gate):
            raise ValidationError(f"apply_circuit only runs unitary gates, got {op!r}")
        state = apply_gate(state, op)
    return state


def permute_qubits(state: DensityMatrix, order: Sequence[int]) -> DensityMatrix:
    """Reorder qubits: new qubit ``k`` is old qubit ``order[k-1]``. Drops site labels."""
    n = state.n_qubits
    if sorted(order) != list(range(1, n + 1)):
        raise ValidationError(f"{order} is not a permutation of 1..{n}")
    axes = [q - 1 for q in order]
    t = state.matrix.reshape((2,) * (2 * n)).transpose(axes + [a + n for a in axes])
    return DensityMatrix(t.reshape(2**n, 2**n))


def partial_trace(state: DensityMatrix, qubit: int) -> DensityMatrix:
    """Trace out one qubit (1-based register position)."""
    n = state.n_qubits
    if n < 2:
        raise DomainError("cannot trace out the only qubit of a register")
    ax = _axis(qubit, n)
    t = state.matrix.reshape((2,) * (2 * n))
    reduced = np.trace(t, axis1=ax, axis2=ax + n)
    sites = None
    if state.sites is not None:
        sites = state.sites[:ax] + state.sites[ax + 1 :]
    dim = 2 ** (n - 1)
    return DensityMatrix(reduced.reshape(dim, dim), sites)


class MeasurementResult(NamedTuple):
    outcome: int
    probability: float
    collapsed: DensityMatrix


def outcome_probabilities(state: DensityMatrix, qubit: int) -> tuple[float, float]:
    n = state.n_qubits
    ax = _axis(qubit, n)
    diag = np.real(np.diag(state.matrix)).reshape((2,) * n)
    p1 = float(np.take(diag, 1, axis=ax).sum())
    return 1.0 - p1, p1


def project(state: DensityMatrix, qubit: int, outcome: int) -> np.ndarray:
    """Unnormalized P_b rho P_b as a plain array."""
    n = state.n_qubits
    ax = _axis(qubit, n)
    t = np.array(state.matrix.reshape((2,) * (2 * n)))
    idx = [slice(None)] * (2 * n)
    idx[ax] = 1 - outcome
    t[tuple(idx)] = 0
    idx[ax] = slice(None)
    idx[ax + n] = 1 - outcome
    t[tuple(idx)] = 0
    return t.reshape(state.matrix.shape)


def measure_qubit(
    state: DensityMatrix,
    qubit: int,
    basis: str = "Z",
    forced: int | None = None,
    rng: np.random.Generator | None = None,
) -> MeasurementResult:
    """Projective measurement of one qubit.

    Exactly one of ``forced`` (the outcome to post-select) or ``rng`` (a seeded
    generator used to sample the outcome) must be given.
    """
    if basis != "Z":
        raise DomainError(f"only Z-basis measurement is supported, got {basis!r}")
    probs = outcome_probabilities(state, qubit)
    if forced is not None:
        if forced not in (0, 1):
            raise DomainError(f"forced outcome must be 0 or 1, got {forced!r}")
        if probs[forced] <= ATOL:
            raise ImpossibleOutcomeError(
                f"outcome {forced} on qubit {qubit} has probability {probs[forced]:.3g}"
            )
        outcome = forced
    elif rng is not None:
        outcome = int(rng.random() >= probs[0])
    else:
        raise ValueError("measure_qubit needs either a forced outcome or an rng")
    p = probs[outcome]
    m = project(state, qubit, outcome) / p
    return MeasurementResult(outcome, p, DensityMatrix(m, state.sites))


def fidelity(rho: DensityMatrix, psi: PureState) -> float:
    """<psi|rho|psi>, clipped into [0, 1]."""
    a = psi.amplitudes
    if rho.matrix.shape[0] != a.size:
        raise DomainError(
            f"dimension mismatch: {rho.n_qubits}-qubit state vs {psi.n_qubits}-qubit reference"
        )
    f = float(np.vdot(a, rho.matrix @ a).real)
    return min(1.0, max(0.0, f))


# --- channels -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    """Unnormalized Choi matrix ``J = sum_ij |i><j| (x) E(|i><j|)``, input factor first.

    With this convention the identity channel maps to ``|Omega><Omega|`` where
    ``|Omega> = sum_i |ii>`` (= d |Phi+><Phi+|), a trace-preserving channel has
    ``Tr_out J = I`` and ``J / dim_in`` is a density matrix.
    """

    matrix: np.ndarray = field(repr=False)
    dim_in: int
    dim_out: int

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        d = self.dim_in * self.dim_out
        if m.shape != (d, d):
            raise ValidationError(f"Choi matrix must be {d}x{d}, got {m.shape}")
        if np.abs(m - m.conj().T).max() > PSD_FLOOR:
            raise ValidationError("Choi matrix is not Hermitian")
        lo = np.linalg.eigvalsh(m).min()
        if lo < -PSD_FLOOR:
            raise ValidationError(f"Choi matrix is not PSD (eigenvalue {lo:.3g})")
        if np.abs(self.output_marginal(m) - np.eye(self.dim_in)).max() > PSD_FLOOR:
            raise ValidationError("channel is not trace preserving")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def output_marginal(self, m: np.ndarray | None = None) -> np.ndarray:
        """Tr_out J (the identity for trace-preserving channels)."""
        m = self.matrix if m is None else m
        t = m.reshape(self.dim_in, self.dim_out, self.dim_in, self.dim_out)
        return np.einsum("ajbj->ab", t)

    def normalized(self) -> np.ndarray:
        return self.matrix / self.dim_in

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """E(rho) = Tr_in[(rho^T (x) I) J]."""
        t = self.matrix.reshape(self.dim_in, self.dim_out, self.dim_in, self.dim_out)
        return np.einsum("ab,ajbk->jk", np.asarray(rho), t)


def choi_from_kraus(kraus: Sequence[np.ndarray]) -> ChoiMatrix:
    """``J = sum_k |K_k>><<K_k|`` with ``|K>> = (I (x) K) sum_i |ii>``."""
    ops = [np.asarray(k, dtype=complex) for k in kraus]
    d_out, d_in = ops[0].shape
    omega = np.eye(d_in).reshape(-1)
    j = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for k in ops:
        v = np.kron(np.eye(d_in), k) @ omega
        j += np.outer(v, v.conj())
    return ChoiMatrix(j, d_in, d_out)


def _probe_states(dim: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pure states spanning the operator space, each paired with its projector."""
    eye = np.eye(dim, dtype=complex)
    probes = [eye[i] for i in range(dim)]
    for i in range(dim):
        for j in range(i + 1, dim):
            probes.append((eye[i] + eye[j]) / np.sqrt(2))
            probes.append((eye[i] + 1j * eye[j]) / np.sqrt(2))
    return [(v, np.outer(v, v.conj())) for v in probes]


def _run_channel(channel: Callable, matrix: np.ndarray) -> np.ndarray:
    out = channel(DensityMatrix(matrix))
    out = out.matrix if isinstance(out, DensityMatrix) else np.asarray(out, dtype=complex)
    tr = np.trace(out)
    if abs(tr - 1) > PSD_FLOOR:
        raise ValidationError(f"channel is not trace preserving (output trace {tr:.12g})")
    return out


def choi_of(channel: Callable, dim_in: int = 2, n_checks: int = 4, seed: int = 0) -> ChoiMatrix:
    """Choi matrix of ``channel`` (a map from DensityMatrix to DensityMatrix).

    The channel only ever sees valid density matrices: the action on the
    off-diagonal units ``|i><j|`` is reconstructed by linearity from the
    projectors onto ``|i>``, ``|i>+|j>`` and ``|i>+i|j>``. Linearity itself is
    checked on ``n_checks`` random convex mixtures of those probes.
    """
    _n_from_dim(dim_in)
    probes = _probe_states(dim_in)
    images = [_run_channel(channel, p) for _, p in probes]
    diag = {i: images[i] for i in range(dim_in)}
    units = {}
    pos = dim_in
    for i in range(dim_in):
        units[i, i] = diag[i]
        for j in range(i + 1, dim_in):
            plus, plus_i = images[pos], images[pos + 1]
            pos += 2
            base = diag[i] + diag[j]
            sym = 2 * plus - base  # E(|i><j| + |j><i|)
            asym = 1j * (2 * plus_i - base)  # E(|i><j| - |j><i|)
            units[i, j] = 0.5 * (sym + asym)
            units[j, i] = 0.5 * (sym - asym)
    dim_out = diag[0].shape[0]
    j_mat = np.zeros((dim_in * dim_out, dim_in * dim_out), dtype=complex)
    for (i, k), block in units.items():
        j_mat[i * dim_out : (i + 1) * dim_out, k * dim_out : (k + 1) * dim_out] = block

    rng = np.random.default_rng(seed)
    for _ in range(n_checks):
        w = rng.dirichlet(np.ones(len(probes)))
        mix = sum(wk * p for wk, (_, p) in zip(w, probes))
        expected = sum(wk * img for wk, img in zip(w, images))
        got = _run_channel(channel, mix)
        if np.abs(got - expected).max() > PSD_FLOOR:
            raise ValidationError("channel is not linear on mixtures of basis states")
    return ChoiMatrix(j_mat, dim_in, dim_out)


def kraus_channel(kraus: Sequence[np.ndarray]) -> Callable[[DensityMatrix], DensityMatrix]:
    ops = [np.asarray(k, dtype=complex) for k in kraus]

    def channel(rho: DensityMatrix) -> DensityMatrix:
        return DensityMatrix(sum(k @ rho.matrix @ k.conj().T for k in ops))

    return channel


def random_density_matrix(
    n_qubits: int, rng: np.random.Generator, rank: int | None = None
) -> DensityMatrix:
    """Ginibre-distributed mixed state; full rank unless ``rank`` is given."""
    dim = 2**n_qubits
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    m /= np.trace(m)
    return DensityMatrix(0.5 * (m + m.conj().T))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
