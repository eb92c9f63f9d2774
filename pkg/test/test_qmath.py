import numpy as np
import pytest

from errors import BranchAmbiguityError, DimensionError, HermiticityError, UnitarityError
from qmath import (
    Generator,
    PauliString,
    commutator,
    generator_phases,
    is_anti_hermitian,
    is_unitary,
    mat_exp,
    op_norm,
    pauli_compose,
    pauli_decompose,
    pauli_matrix,
    principal_log,
    random_anti_hermitian,
    random_su,
    su_normalize,
)


def test_mat_exp_zero_is_identity():
    assert np.allclose(mat_exp(np.zeros((4, 4))), np.eye(4))


def test_mat_exp_pauli_rotation():
    theta = 0.7
    U = mat_exp(-1j * theta / 2 * pauli_matrix("X"))
    expected = np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * pauli_matrix("X")
    assert np.allclose(U, expected, atol=1e-14)


def test_mat_exp_rejects_non_square():
    with pytest.raises(DimensionError):
        mat_exp(np.zeros((2, 3)))


@pytest.mark.parametrize("dim", [2, 4])
def test_exp_log_round_trip(rng, dim):
    for _ in range(50):
        U = random_su(dim, rng)
        if np.max(np.abs(np.angle(np.linalg.eigvals(U)))) > np.pi - 1e-3:
            continue
        X = principal_log(U)
        assert is_anti_hermitian(X)
        winding = np.trace(X).imag / (2 * np.pi)
        assert abs(np.trace(X).real) < 1e-10
        assert abs(winding - round(winding)) < 1e-10
        assert op_norm(mat_exp(X) - U) <= 1e-10


def test_principal_log_trace_winds_in_su4():
    b = -7.5 + 2 * np.pi
    U = np.diag(np.exp(1j * np.array([2.5, 2.5, 2.5, b])))
    X = principal_log(U)
    assert np.trace(X) == pytest.approx(2j * np.pi)
    assert op_norm(mat_exp(X) - U) <= 1e-10
    G = Generator.from_matrix((0, 1), X)
    assert abs(np.trace(G.matrix)) < 1e-10
    assert op_norm(mat_exp(G.matrix) - (-1j) * U) <= 1e-10


def test_principal_log_of_rotation():
    theta = 1.1
    U = mat_exp(-1j * theta / 2 * pauli_matrix("Z"))
    assert np.allclose(principal_log(U), -1j * theta / 2 * pauli_matrix("Z"), atol=1e-12)


def test_principal_log_identity_is_zero():
    assert np.allclose(principal_log(np.eye(4)), 0.0)


def test_principal_log_discards_global_phase():
    U = np.exp(0.4j) * mat_exp(-0.3j * pauli_matrix("Y"))
    X = principal_log(U)
    assert np.allclose(X, -0.3j * pauli_matrix("Y"), atol=1e-12)


def test_principal_log_pauli_x_after_normalization():
    X = principal_log(pauli_matrix("X"))
    assert np.allclose(np.sort(np.abs(generator_phases(X))), [np.pi / 2, np.pi / 2])
    assert np.allclose(mat_exp(X), su_normalize(pauli_matrix("X")))


def test_principal_log_branch_cut():
    with pytest.raises(BranchAmbiguityError) as info:
        principal_log(-np.eye(2))
    assert "Eigenphase" in str(info.value)


def test_principal_log_rejects_non_unitary():
    with pytest.raises(UnitarityError):
        principal_log(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_su_normalize_unit_determinant(rng):
    U = np.exp(1.3j) * random_su(4, rng)
    assert abs(np.linalg.det(su_normalize(U)) - 1.0) < 1e-12


def test_random_su_is_special_unitary(rng):
    U = random_su(4, rng)
    assert is_unitary(U)
    assert abs(np.linalg.det(U) - 1.0) < 1e-10


def test_random_anti_hermitian_scale(rng):
    A = random_anti_hermitian(4, rng, scale=0.3)
    assert is_anti_hermitian(A)
    assert abs(op_norm(A) - 0.3) < 1e-12


def test_op_norm_pauli():
    assert op_norm(pauli_matrix("XZ")) == pytest.approx(1.0)
    assert op_norm(np.diag([3.0, -5.0])) == pytest.approx(5.0)


def test_commutator_of_paulis():
    assert np.allclose(commutator(pauli_matrix("X"), pauli_matrix("Y")), 2j * pauli_matrix("Z"))
    assert np.allclose(commutator(pauli_matrix("ZI"), pauli_matrix("IX")), 0.0)


def test_commutator_shape_mismatch():
    with pytest.raises(DimensionError):
        commutator(np.eye(2), np.eye(4))


def test_pauli_decompose_two_qubit():
    H = 0.5 * pauli_matrix("XZ") - 0.25 * pauli_matrix("YY") + 0.1 * pauli_matrix("II")
    terms = pauli_decompose(H)
    assert [t.letters for t in terms] == ["II", "XZ", "YY"]
    assert [t.coeff for t in terms] == pytest.approx([0.1, 0.5, -0.25])


def test_pauli_decompose_rebuilds(rng):
    H = 1j * random_anti_hermitian(8, rng, traceless=False)
    assert np.allclose(pauli_compose(pauli_decompose(H), 3), H, atol=1e-12)


def test_pauli_decompose_rejects_non_hermitian():
    with pytest.raises(HermiticityError):
        pauli_decompose(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_pauli_decompose_rejects_large():
    with pytest.raises(DimensionError):
        pauli_decompose(np.eye(32))


def test_pauli_string_validation():
    with pytest.raises(ValueError):
        PauliString("XA")
    assert PauliString("II").is_identity


def test_generator_from_matrix_drops_identity():
    gen = Generator.from_matrix((0,), -1j * (0.2 * pauli_matrix("X") + 0.7 * np.eye(2)))
    assert gen.coeff_map == pytest.approx({"X": 0.2})
    assert gen.signature == ("X",)


def test_generator_rejects_hermitian_matrix():
    with pytest.raises(HermiticityError):
        Generator((0,), pauli_matrix("X"))


def test_generator_combine_adds_coefficients():
    a = Generator.from_coeff_map((0,), {"Z": 0.15})
    b = Generator.from_coeff_map((3,), {"Z": 0.15})
    merged = Generator.combine((0,), [(1.0, a), (0.5, b)])
    assert merged.coeff_map["Z"] == pytest.approx(0.225)
    assert merged.support == (0,)


def test_generator_unitary_matches_rotation():
    gen = Generator.from_coeff_map((1,), {"Y": 0.4})
    assert np.allclose(gen.unitary(), mat_exp(-0.4j * pauli_matrix("Y")))
    assert gen.coeff_norm == pytest.approx(0.4)
