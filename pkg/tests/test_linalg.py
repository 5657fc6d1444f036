import numpy as np
import pytest

from ncchoquet.linalg import (
    ComplexMatrix,
    HermitianMatrix,
    herm_basis,
    herm_indices_in_block,
    hermitian_eig,
    kron,
    matrix_from_json,
    matrix_to_json,
    operator_norm,
    pack_hermitian,
    psd_check,
    random_complex,
    random_hermitian,
    unpack_hermitian,
)
from ncchoquet.tolerance import DEFAULT_TOL, Tolerance


def test_tolerance_validation():
    with pytest.raises(ValueError):
        Tolerance(eq_tol=-1.0)
    with pytest.raises(ValueError):
        Tolerance(eq_tol=1e-20)
    assert DEFAULT_TOL.eq_tol == 1e-9


def test_complex_matrix_invariants():
    with pytest.raises(ValueError):
        ComplexMatrix([[np.nan, 0], [0, 0]])
    with pytest.raises(ValueError):
        ComplexMatrix(np.zeros((0, 2)))
    m = ComplexMatrix([[1, 2j], [0, 1]])
    assert m.rows == 2 and m.cols == 2


def test_hermitian_matrix_symmetrizes():
    h = HermitianMatrix([[1, 2 + 2j], [0, 3]])
    assert np.allclose(h.a, h.a.conj().T)
    assert h.a[0, 1] == pytest.approx(1 + 1j)
    with pytest.raises(ValueError):
        HermitianMatrix(np.zeros((2, 3)))


def test_hermitian_eig_diagonal():
    w, u = hermitian_eig(np.diag([2.0, 1.0]))
    assert np.allclose(w, [1.0, 2.0])
    assert np.allclose(np.abs(u), [[0, 1], [1, 0]])


def test_hermitian_eig_symmetry_forces_pm_one():
    w, _ = hermitian_eig(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(w, [-1.0, 1.0])


def test_hermitian_eig_reconstruction_random():
    rng = np.random.default_rng(5)
    m = random_hermitian(rng, 5)
    w, u = hermitian_eig(m)
    assert np.linalg.norm(u @ np.diag(w) @ u.conj().T - m) <= 5 * DEFAULT_TOL.eq_tol
    assert np.linalg.norm(u.conj().T @ u - np.eye(5)) <= 5 * DEFAULT_TOL.eq_tol
    assert np.all(np.diff(w) >= 0)
    with pytest.raises(ValueError):
        hermitian_eig(np.zeros((2, 3)))


def test_operator_norm_examples():
    e12 = np.zeros((2, 2)            , dtype=complex)
    e12[0, 1] = 1.0
    assert operator_norm(e12) == pytest.approx(1.0)
    assert operator_norm(np.array([[0.0, 2.0], [0.0, 0.0]])) == pytest.approx(2.0)
    assert operator_norm(np.diag([0.0, 1.0, 1j])) == pytest.approx(1.0)


def test_operator_norm_matches_sup_over_unit_vectors():
    rng = np.random.default_rng(7)
    m = random_complex(rng, 4)
    nrm = operator_norm(m)
    for _ in range(500):
        xi = random_complex(rng, 4, 1).ravel()
        xi = xi / np.linalg.norm(xi)
        assert np.linalg.norm(m @ xi) <= nrm + 1e-12
    # attained at the top right-singular vector
    _, _, vh = np.linalg.svd(m)
    assert np.linalg.norm(m @ vh[0].conj()) == pytest.approx(nrm, abs=1e-12)


def test_psd_check_examples():
    assert psd_check(np.eye(3))
    assert not psd_check(np.diag([1.0, -1.0]))
    # Choi matrix of the transpose map on M_2 (the swap) has a -1 eigenvalue
    swap = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            swap[2 * i + j, 2 * j + i] = 1.0
    assert sorted(np.linalg.eigvalsh(swap))[0] == pytest.approx(-1.0)
    assert not psd_check(swap)


def test_psd_check_unitary_invariance():
    rng = np.random.default_rng(11)
    m = random_hermitian(rng, 4)
    q, _ = np.linalg.qr(random_complex(rng, 4))
    assert psd_check(m) == psd_check(q @ m @ q.conj().T)


def test_kron_examples():
    assert np.array_equal(kron(np.eye(2), np.eye(3)), np.eye(6))
    e11 = np.zeros((2, 2))
    e11[0, 0] = 1.0
    k = kron(e11, e11)
    expected = np.zeros((4, 4))
    expected[0, 0] = 1.0
    assert np.array_equal(k, expected)


def test_kron_mixed_product():
    rng = np.random.default_rng(13)
    a, b, c, d = (random_complex(rng, 3) for _ in range(4))
    lhs = kron(a, b) @ kron(c, d)
    rhs = kron(a @ c, b @ d)
    assert np.abs(lhs - rhs).max() <= DEFAULT_TOL.eq_tol * np.abs(rhs).max()


def test_kron_associative_exactly():
    rng = np.random.default_rng(17)
    a, b, c = (random_complex(rng, 2) for _ in range(3))
    assert np.array_equal(kron(kron(a, b), c), kron(a, kron(b, c)))


def test_norm_agrees_with_eigenvalues_for_hermitian():
    rng = np.random.default_rng(19)
    m = random_hermitian(rng, 6)
    w, _ = hermitian_eig(m)
    assert operator_norm(m) == pytest.approx(max(abs(w[0]), abs(w[-1])), abs=1e-12)


def test_herm_basis_orthonormal_and_pack_roundtrip():
    for n in (1, 2, 3, 4):
        basis = herm_basis(n)
        gram = np.einsum("pij,qji->pq", basis, basis).real
        assert np.abs(gram - np.eye(n * n)).max() < 1e-14
        rng = np.random.default_rng(n)
        m = random_hermitian(rng, n)
        v = pack_hermitian(m)
        assert np.abs(unpack_hermitian(v, n) - m).max() < 1e-14
        # pack is isometric for the trace inner product
        m2 = random_hermitian(rng, n)
        assert np.vdot(pack_hermitian(m2), v) == pytest.approx(
            np.trace(m2 @ m).real, abs=1e-12
        )


def test_herm_indices_in_block():
    idx = herm_indices_in_block(3, [0, 1])
    basis = herm_basis(3)[idx]
    assert len(idx) == 4
    assert np.abs(basis[:, 2, :]).max() == 0.0
    assert np.abs(basis[:, :, 2]).max() == 0.0


def test_matrix_json_roundtrip():
    rng = np.random.default_rng(23)
    m = random_complex(rng, 3, 2)
    obj = matrix_to_json(m)
    assert obj["rows"] == 3 and obj["cols"] == 2
    back = matrix_from_json(obj)
    assert np.abs(back - m).max() < 1e-15
    with pytest.raises(ValueError):
        matrix_from_json({"rows": 2, "cols": 2, "data": [[[0, 0]]]})
