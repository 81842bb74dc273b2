import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qubitloss import circuit as C
from qubitloss.errors import (
    CapacityError,
    DomainError,
    ImpossibleOutcomeError,
    ValidationError,
)
from qubitloss.qstate import (
    ChoiMatrix,
    DensityMatrix,
    Ensemble,
    PureState,
    apply_gate,
    choi_from_kraus,
    choi_of,
    fidelity,
    kraus_channel,
    measure_qubit,
    partial_trace,
    permute_qubits,
    random_density_matrix,
    random_unitary,
    tensor,
)

SQ2 = 1 / np.sqrt(2)


def bell():
    return PureState.from_labels({"00": SQ2, "11": SQ2})


def plus():
    return PureState([SQ2, SQ2])


# --- tensor -------------------------------------------------------------------


def test_tensor_basis_states():
    out = tensor(PureState.basis("0"), PureState.basis("0"))
    np.testing.assert_array_equal(out.amplitudes, [1, 0, 0, 0])


def test_tensor_ordering_first_factor_is_most_significant():
    out = tensor(PureState.basis("1"), PureState.basis("0"))
    np.testing.assert_array_equal(out.amplitudes, [0, 0, 1, 0])


def test_tensor_bell_with_zero():
    out = tensor(bell(), PureState.basis("0"))
    # index arithmetic: |b1 b2 b3> -> 4 b1 + 2 b2 + b3
    expected = np.zeros(8, dtype=complex)
    expected[4 * 0 + 2 * 0 + 0] = SQ2
    expected[4 * 1 + 2 * 1 + 0] = SQ2
    assert np.abs(out.amplitudes - expected).max() < 1e-15
    assert out.n_qubits == 3


def test_tensor_density_matches_pure():
    a, b = bell(), plus()
    assert tensor(a.density(), b.density()).allclose(tensor(a, b).density())


def test_tensor_capacity():
    big = DensityMatrix.basis("0" * 6)
    with pytest.raises(CapacityError):
        tensor(big, DensityMatrix.basis("0" * 7))
    with pytest.raises(CapacityError):
        tensor(DensityMatrix.basis("0"), DensityMatrix.basis("0"), max_qubits=1)


# --- validation ---------------------------------------------------------------


def test_pure_state_must_be_normalized():
    with pytest.raises(ValidationError):
        PureState([1, 1])


def test_pure_state_length_power_of_two():
    with pytest.raises(ValidationError):
        PureState([1, 0, 0])


@pytest.mark.parametrize(
    "matrix",
    [
        np.array([[1, 1], [0, 0]]),  # not Hermitian
        np.eye(2),  # trace 2
        np.array([[1.5, 0], [0, -0.5]]),  # negative eigenvalue
    ],
)
def test_density_matrix_rejects_invalid(matrix):
    with pytest.raises(ValidationError):
        DensityMatrix(matrix)


def test_states_are_read_only():
    rho = DensityMatrix.basis("01")
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 1


# --- gates --------------------------------------------------------------------


def test_x_on_zero():
    out = apply_gate(DensityMatrix.basis("0"), C.X(1))
    assert out.allclose(DensityMatrix.basis("1"))


def test_h_on_zero_is_uniform():
    out = apply_gate(DensityMatrix.basis("0"), C.H(1))
    assert np.abs(out.matrix - 0.5).max() < 1e-15


def test_cnot_on_10():
    out = apply_gate(DensityMatrix.basis("10"), C.CNOT(1, 2))
    assert out.allclose(DensityMatrix.basis("11"))


def test_cnot_reversed_control():
    out = apply_gate(DensityMatrix.basis("01"), C.CNOT(2, 1))
    assert out.allclose(DensityMatrix.basis("11"))


def test_gate_on_wide_register_matches_kron():
    # exercises the tensordot path (more than SMALL_REGISTER qubits)
    rng = np.random.default_rng(5)
    rho = random_density_matrix(7, rng)
    u = random_unitary(4, rng)
    out = apply_gate(rho, C.custom(u, (3, 4)))
    full = np.kron(np.kron(np.eye(4), u), np.eye(8))
    assert np.abs(out.matrix - full @ rho.matrix @ full.conj().T).max() < 1e-12


def test_gate_target_out_of_range():
    with pytest.raises(DomainError):
        apply_gate(DensityMatrix.basis("0"), C.X(2))


@given(seed=st.integers(0, 2**32 - 1), q=st.integers(1, 3))
@settings(max_examples=60, deadline=None)
def test_gate_preserves_trace_and_hermiticity(seed, q):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(3, rng)
    for g in (C.custom(random_unitary(2, rng), (q,)), C.CNOT(q, q % 3 + 1)):
        out = apply_gate(rho, g)
        assert abs(np.trace(out.matrix) - 1) < 1e-12
        assert np.abs(out.matrix - out.matrix.conj().T).max() < 1e-12


def test_permute_qubits_reverses_label():
    out = permute_qubits(DensityMatrix.basis("011"), [3, 2, 1])
    assert out.allclose(DensityMatrix.basis("110"))


# --- partial trace ------------------------------------------------------------


def test_partial_trace_bell_is_maximally_mixed():
    out = partial_trace(bell().density(), 1)
    assert np.abs(out.matrix - np.eye(2) / 2).max() < 1e-15


def test_partial_trace_product():
    out = partial_trace(DensityMatrix.basis("01"), 2)
    assert out.allclose(DensityMatrix.basis("0"))


def test_partial_trace_single_qubit_is_domain_error():
    with pytest.raises(DomainError):
        partial_trace(DensityMatrix.basis("0"), 1)


def test_partial_trace_against_explicit_sum():
    rng = np.random.default_rng(11)
    rho = random_density_matrix(3, rng)
    t = rho.matrix.reshape(2, 2, 2, 2, 2, 2)
    expected = sum(t[:, k, :, :, k, :] for k in range(2)).reshape(4, 4)
    assert np.abs(partial_trace(rho, 2).matrix - expected).max() < 1e-15


@given(seed=st.integers(0, 2**32 - 1), q=st.integers(1, 3), alpha=st.floats(0, 1))
@settings(max_examples=60, deadline=None)
def test_partial_trace_is_linear(seed, q, alpha):
    rng = np.random.default_rng(seed)
    r1, r2 = random_density_matrix(3, rng), random_density_matrix(3, rng)
    mix = DensityMatrix(alpha * r1.matrix + (1 - alpha) * r2.matrix)
    lhs = partial_trace(mix, q).matrix
    rhs = alpha * partial_trace(r1, q).matrix + (1 - alpha) * partial_trace(r2, q).matrix
    assert np.abs(lhs - rhs).max() < 1e-12


# --- measurement --------------------------------------------------------------


def test_measure_plus_each_outcome_half():
    rho = plus().density()
    for b in (0, 1):
        res = measure_qubit(rho, 1, forced=b)
        assert res.outcome == b
        assert abs(res.probability - 0.5) < 1e-15
        assert res.collapsed.allclose(DensityMatrix.basis(str(b)))


def test_forcing_impossible_outcome():
    with pytest.raises(ImpossibleOutcomeError):
        measure_qubit(DensityMatrix.basis("0"), 1, forced=1)


def test_measure_needs_rng_or_forced():
    with pytest.raises(ValueError):
        measure_qubit(DensityMatrix.basis("0"), 1)


def test_measure_only_z_basis():
    with pytest.raises(DomainError):
        measure_qubit(DensityMatrix.basis("0"), 1, basis="X", forced=0)


def test_sampled_measurement_is_seeded():
    rho = plus().density()
    a = [measure_qubit(rho, 1, rng=np.random.default_rng(3)).outcome for _ in range(5)]
    b = [measure_qubit(rho, 1, rng=np.random.default_rng(3)).outcome for _ in range(5)]
    assert a == b


def test_sampled_frequencies():
    rng = np.random.default_rng(2024)
    rho = PureState([np.sqrt(0.3), np.sqrt(0.7)]).density()
    ones = sum(measure_qubit(rho, 1, rng=rng).outcome for _ in range(20000))
    # 0.7 +- 4 sigma
    assert abs(ones / 20000 - 0.7) < 4 * np.sqrt(0.21 / 20000)


@given(seed=st.integers(0, 2**32 - 1), q=st.integers(1, 3))
@settings(max_examples=60, deadline=None)
def test_measurement_branches_recombine_to_dephased_state(seed, q):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(3, rng)
    total = np.zeros_like(rho.matrix)
    probs = 0.0
    for b in (0, 1):
        res = measure_qubit(rho, q, forced=b)
        probs += res.probability
        total = total + res.probability * res.collapsed.matrix
    assert abs(probs - 1) < 1e-12
    # oracle: (rho + Z_q rho Z_q) / 2
    z = C.embed(C.Z(q), 3)
    dephased = 0.5 * (rho.matrix + z @ rho.matrix @ z)
    assert np.abs(total - dephased).max() < 1e-12


# --- fidelity -----------------------------------------------------------------


def test_fidelity_values():
    zero, one = PureState.basis("0"), PureState.basis("1")
    assert fidelity(zero.density(), zero) == 1
    assert fidelity(zero.density(), one) == 0
    assert abs(fidelity(DensityMatrix.maximally_mixed(1), zero) - 0.5) < 1e-15


def test_fidelity_dimension_mismatch():
    with pytest.raises(DomainError):
        fidelity(DensityMatrix.basis("00"), PureState.basis("0"))


# --- ensembles ----------------------------------------------------------------


def test_ensemble_probabilities_must_sum_to_one():
    with pytest.raises(ValidationError):
        Ensemble(((PureState.basis("0"), 0.5), (PureState.basis("1"), 0.4)))


@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 5))
@settings(max_examples=40, deadline=None)
def test_densified_ensemble_is_valid(seed, m):
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(m))
    w[-1] = 1 - w[:-1].sum()
    branches = []
    for p in w:
        v = rng.normal(size=8) + 1j * rng.normal(size=8)
        branches.append((PureState(v / np.linalg.norm(v)), p))
    rho = Ensemble(tuple(branches)).densify()
    assert abs(np.trace(rho.matrix) - 1) < 1e-12
    assert np.linalg.eigvalsh(rho.matrix).min() > -1e-10


# --- Choi matrices ------------------------------------------------------------


def test_choi_identity_channel():
    j = choi_of(lambda rho: rho)
    phi_plus = bell().density().matrix
    # unnormalized convention: J = 2 |Phi+><Phi+|
    assert np.abs(j.matrix - 2 * phi_plus).max() < 1e-12
    assert np.abs(j.normalized() - phi_plus).max() < 1e-12


def test_choi_full_depolarizing():
    j = choi_of(lambda rho: DensityMatrix.maximally_mixed(1))
    assert np.abs(j.matrix - np.eye(4) / 2).max() < 1e-12


def test_choi_reset_kraus_explicit():
    # J = sum_ij |i><j| (x) E(|i><j|), E(|i><j|) = delta_ij |0><0|  =>  diag(1, 0, 1, 0)
    kraus = [np.array([[1, 0], [0, 0]]), np.array([[0, 1], [0, 0]])]
    expected = np.diag([1, 0, 1, 0]).astype(complex)
    assert np.abs(choi_from_kraus(kraus).matrix - expected).max() < 1e-15
    assert np.abs(choi_of(kraus_channel(kraus)).matrix - expected).max() < 1e-12


def test_choi_rejects_trace_decreasing_channel():
    with pytest.raises(ValidationError):
        choi_of(lambda rho: 0.5 * rho.matrix)


def test_choi_rejects_nonlinear_channel():
    def squash(rho):
        m = rho.matrix @ rho.matrix
        return m / np.trace(m)

    with pytest.raises(ValidationError):
        choi_of(squash)


def test_choi_apply_roundtrip():
    rng = np.random.default_rng(8)
    u = random_unitary(2, rng)
    kraus = [np.sqrt(0.3) * u, np.sqrt(0.7) * np.eye(2)]
    j = choi_from_kraus(kraus)
    rho = random_density_matrix(1, rng).matrix
    direct = sum(k @ rho @ k.conj().T for k in kraus)
    assert np.abs(j.apply(rho) - direct).max() < 1e-12


def test_choi_matrix_rejects_non_trace_preserving():
    with pytest.raises(ValidationError):
        ChoiMatrix(np.eye(4), 2, 2)


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_choi_of_unitary_channel_is_rank_one(seed):
    u = random_unitary(2, np.random.default_rng(seed))
    j = choi_of(lambda rho: DensityMatrix(u @ rho.matrix @ u.conj().T))
    ev = np.sort(j.eigenvalues())
    assert abs(ev[-1] - 2) < 1e-10
    assert np.abs(ev[:-1]).max() < 1e-10
    assert np.abs(j.output_marginal() - np.eye(2)).max() < 1e-10


def test_choi_two_qubit_input():
    j = choi_of(lambda rho: apply_gate(rho, C.CNOT(1, 2)), dim_in=4)
    u = C.embed(C.CNOT(1, 2), 2)
    assert np.abs(j.matrix - choi_from_kraus([u]).matrix).max() < 1e-12


# --- serialization ------------------------------------------------------------


def test_fixture_roundtrip():
    rng = np.random.default_rng(1)
    rho = random_density_matrix(2, rng)
    doc = json.loads(rho.to_json())
    assert doc["n_qubits"] == 2
    assert len(doc["matrix"]) == 16 and len(doc["matrix"][0]) == 2
    assert doc["matrix"][1] == [rho.matrix[0, 1].real, rho.matrix[0, 1].imag]
    back = DensityMatrix.from_json(rho.to_json())
    assert np.array_equal(back.matrix, rho.matrix)


def test_fixture_rejects_wrong_length():
    with pytest.raises(ValidationError):
        DensityMatrix.from_dict({"n_qubits": 2, "matrix": [[1, 0]] * 4})
