import numpy as np
import pytest

from qubitloss import circuit as C
from qubitloss.errors import DomainError, ValidationError


def test_text_roundtrip_all_kinds():
    circ = C.Circuit((
        C.H(1), C.X(2), C.Y(3), C.Z(4), C.RZ(2, 0.125), C.CNOT(1, 3), C.SWAP(2, 4),
        C.Measure(2), C.MeasureSignature(), C.Selective((1, 1), (2, 0)), C.Selective((2, -2), (1, -1)),
    ))
    text = circ.to_text()
    assert "SEL 1,+1 -> 2,0" in text
    assert "SEL 2,-2 -> 1,-1" in text
    back = C.parse_circuit(text)
    assert back.to_text() == text
    assert np.abs(back[4].matrix - circ[4].matrix).max() == 0


def test_parser_ignores_comments_and_blank_lines():
    circ = C.parse_circuit("# header\n\nh 1   # lower case is fine\nCNOT 1 2\n")
    assert [op.kind for op in circ] == ["H", "CNOT"]


@pytest.mark.parametrize("line", ["FOO 1", "H", "H one", "CNOT 1", "SEL 1,1 2,0", "SEL x -> 2,0", "CNOT 1 1"])
def test_parser_rejects(line):
    with pytest.raises(ValidationError):
        C.parse_circuit(line)


def test_custom_gate_has_no_text_form():
    with pytest.raises(ValidationError):
        C.Circuit((C.custom(np.eye(2), (1,)),)).to_text()


def test_non_unitary_rejected():
    with pytest.raises(ValidationError):
        C.custom(np.array([[1, 0], [0, 0.5]]), (1,))


def test_cnot_matrix_control_is_first_target():
    u = C.Circuit((C.CNOT(1, 2),)).unitary(2)
    # |10> -> |11>
    assert u[3, 2] == 1 and u[2, 3] == 1 and u[0, 0] == 1


def test_embed_matches_kron():
    u = C.embed(C.X(2), 3)
    x = np.array([[0, 1], [1, 0]])
    assert np.abs(u - np.kron(np.kron(np.eye(2), x), np.eye(2))).max() == 0


def test_embed_rejects_out_of_range():
    with pytest.raises(DomainError):
        C.embed(C.X(4), 3)


def test_inverse_undoes_circuit():
    circ = C.Circuit((C.H(1), C.RZ(2, 0.3), C.CNOT(1, 2), C.SWAP(1, 2)))
    u = (circ + circ.inverse()).unitary(2)
    assert np.abs(u - np.eye(4)).max() < 1e-12


def test_measurement_circuit_cannot_be_inverted():
    with pytest.raises(ValidationError):
        C.Circuit((C.Measure(1),)).inverse()


def test_permutation_matrix_relabels():
    # new qubit k is old qubit order[k-1]: |abc> -> |cab> for order (3,1,2)
    p = C.permutation_matrix((3, 1, 2))
    src = int("110", 2)
    assert p[int("011", 2), src] == 1
