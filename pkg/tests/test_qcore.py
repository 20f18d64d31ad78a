import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from darkqubit import qcore


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_jacobi_matches_lapack(n, seed):
    a = random_hermitian(np.random.default_rng(seed), n)
    w, v = qcore.eigh(a, method="jacobi")
    np.testing.assert_allclose(w, scipy.linalg.eigvalsh(a), atol=1e-11 * max(1, abs(w).max()))
    np.testing.assert_allclose(a @ v, v * w, atol=1e-10 * max(1, abs(w).max()))
    np.testing.assert_allclose(v.conj().T @ v, np.eye(n), atol=1e-12)


def test_eigh_phase_convention():
    a = random_hermitian(np.random.default_rng(3), 6)
    _, v = qcore.eigh(a)
    for k in range(6):
        lead = v[np.argmax(np.abs(v[:, k])), k]
        assert abs(lead.imag) < 1e-14 and lead.real > 0


def test_eigh_rejects_non_hermitian():
    with pytest.raises(qcore.NotHermitianError):
        qcore.eigh(np.array([[0, 1], [0, 0]]))


def test_dimension_errors():
    with pytest.raises(qcore.DimensionError):
        qcore.eigh(np.ones((2, 3)))
    with pytest.raises(qcore.DimensionError):
        qcore.commutator(np.eye(2), np.eye(3))
    with pytest.raises(qcore.DimensionError):
        qcore.expectation(np.ones(3), np.eye(2))


@pytest.mark.parametrize("j", [0.5, 1, 1.5, 2, 2.5])
def test_angular_momentum_algebra(j):
    jx, jy, jz = (qcore.angular_momentum(j, a) for a in "xyz")
    np.testing.assert_allclose(qcore.commutator(jx, jy), 1j * jz, atol=1e-13)
    np.testing.assert_allclose(qcore.commutator(jy, jz), 1j * jx, atol=1e-13)
    j2 = jx @ jx + jy @ jy + jz @ jz
    np.testing.assert_allclose(j2, j * (j + 1) * np.eye(int(2 * j + 1)), atol=1e-12)
    np.testing.assert_allclose(np.diag(jz).real, qcore.magnetic_numbers(j))


def test_expm_against_scipy_and_unitarity():
    a = random_hermitian(np.random.default_rng(0), 7)
    u = qcore.expm(-1j * a)
    np.testing.assert_allclose(u, scipy.linalg.expm(-1j * a), atol=1e-13)
    assert qcore.is_unitary(u)
    np.testing.assert_array_equal(qcore.expm(np.zeros((3, 3))), np.eye(3))


def test_kernel_finds_null_space():
    rng = np.random.default_rng(5)
    b = rng.normal(size=(6, 3)) + 1j * rng.normal(size=(6, 3))
    a = b @ b.conj().T  # rank 3
    k = qcore.kernel(a)
    assert k.shape == (6, 3)
    np.testing.assert_allclose(a @ k, 0, atol=1e-10)
    with pytest.raises(ValueError):
        qcore.kernel(a, tol=0)


@settings(max_examples=40, deadline=None)
@given(hnp.arrays(np.complex128, 4, elements=st.complex_numbers(max_magnitude=10, allow_nan=False,
                                                                 allow_infinity=False)))
def test_density_matrix_is_valid(psi):
    if np.linalg.norm(psi) < 1e-3:
        return
    rho = qcore.density_matrix(qcore.normalize(psi))
    qcore.check_density_matrix(rho)
    np.testing.assert_allclose(rho @ rho, rho, atol=1e-12)


def test_embed_and_kron():
    block = np.array([[1, 2], [3, 4]])
    out = qcore.embed(block, [1, 3], 4)
    assert out[1, 3] == 2 and out[3, 1] == 3 and out.sum() == 10
    np.testing.assert_array_equal(qcore.kron(np.eye(2), block), np.kron(np.eye(2), block))


def test_projector_and_expectation():
    v = np.array([[1, 0], [0, 1], [0, 0]], dtype=complex)
    p = qcore.projector(v)
    np.testing.assert_allclose(p @ p, p)
    psi = np.array([0.6, 0.8j, 0])
    assert qcore.expectation(psi, p) == pytest.approx(1.0)
    assert qcore.expectation(qcore.density_matrix(psi), p) == pytest.approx(1.0)
