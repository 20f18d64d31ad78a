"""Dense complex linear algebra and angular-momentum operators.

Operators are square ``complex128`` arrays, states are 1-d arrays and density
matrices are 2-d arrays. Nothing here mutates its inputs.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import scipy.linalg

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
KERNEL_TOL = 1e-9

# Cyclic Jacobi is used up to this dimension; LAPACK (zheevd) above it.
JACOBI_MAX_DIM = 16


class DimensionError(ValueError):
    pass


class NotHermitianError(ValueError):
    pass


def _as_operator(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


def _half_integer(j) -> Fraction:
    try:
        jf = Fraction(j).limit_denominator(2)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"invalid angular momentum j={j!r}") from exc
    if abs(float(jf) - float(j)) > 1e-12 or jf <= 0 or (2 * jf).denominator != 1:
        raise ValueError(f"j must be a positive half-integer, got {j!r}")
    return jf


def magnetic_numbers(j) -> np.ndarray:
    """m = -j, ..., +j as floats."""
    jf = _half_integer(j)
    n = int(2 * jf) + 1
    return -float(jf) + np.arange(n, dtype=float)


def angular_momentum(j, axis: str) -> np.ndarray:
    """Spin-j operator along ``axis`` in the |j,m> basis ordered m = -j .. +j."""
    m = magnetic_numbers(j)
    jj = float(_half_integer(j))
    # <m+1|J+|m> = sqrt(j(j+1) - m(m+1))
    up = np.sqrt(jj * (jj + 1) - m[:-1] * (m[:-1] + 1))
    jplus = np.diag(up, k=-1).astype(complex)
    if axis == "z":
        return np.diag(m).astype(complex)
    if axis == "+":
        return jplus
    if axis == "-":
        return jplus.conj().T
    if axis == "x":
        return 0.5 * (jplus + jplus.conj().T)
    if axis == "y":
        return -0.5j * (jplus - jplus.conj().T)
    raise ValueError(f"axis must be one of x, y, z, +, -; got {axis!r}")


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(a))


def hermiticity_error(a) -> float:
    a = _as_operator(a)
    return float(np.max(np.abs(a - dagger(a)), initial=0.0))


def is_hermitian(a, rtol: float = HERMITIAN_TOL) -> bool:
    a = _as_operator(a)
    scale = float(np.max(np.abs(a), initial=0.0))
    return hermiticity_error(a) <= rtol * max(scale, np.finfo(float).tiny)


def is_unitary(u, tol: float = UNITARY_TOL) -> bool:
    u = _as_operator(u)
    return float(np.max(np.abs(dagger(u) @ u - np.eye(len(u))))) <= tol


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive.

    Ties (within 1e-12 relative) go to the lowest index.
    """
    out = vecs.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        mags = np.abs(col)
        top = mags.max()
        if top == 0:
            continue
        idx = int(np.flatnonzero(mags >= top * (1 - 1e-12))[0])
        out[:, k] = col * (np.conj(col[idx]) / mags[idx])
        out[idx, k] = mags[idx]
    return out


def jacobi_eigh(a, tol: float = 1e-15, max_sweeps: int = 60):
    """Cyclic Jacobi diagonalization of a Hermitian matrix.

    Sweeps pairs (p, q) in row-major order. Returns unsorted eigenvalues and
    the accumulated unitary; ``eigh`` does the sorting and phase fixing.
    """
    a = _as_operator(a).copy()
    n = len(a)
    v = np.eye(n, dtype=complex)
    scale = max(float(np.max(np.abs(a), initial=0.0)), np.finfo(float).tiny)
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(a[offdiag]) ** 2))
        if off <= tol * scale * n:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= tol * scale * 1e-3:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                phase = apq / mag
                tau = (aqq - app) / (2.0 * mag)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # columns p, q of the rotation
                g = np.array([[c, s * phase], [-s * np.conj(phase), c]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = dagger(g) @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ g
    return np.real(np.diag(a)).copy(), v


def eigh(a, method: str = "auto"):
    """Eigen-decomposition of a Hermitian matrix.

    Eigenvalues ascend. Each eigenvector's largest-magnitude component is
    real positive, which makes the output reproducible for a given input.
    """
    a = _as_operator(a)
    if not is_hermitian(a, rtol=1e-10):
        raise NotHermitianError(
            f"eigh needs a Hermitian matrix (max|A-A^H| = {hermiticity_error(a):.3e})"
        )
    a = 0.5 * (a + dagger(a))
    if method == "auto":
        method = "jacobi" if len(a) <= JACOBI_MAX_DIM else "lapack"
    if method == "jacobi":
        w, v = jacobi_eigh(a)
        order = np.argsort(w, kind="stable")
        w, v = w[order], v[:, order]
    elif method == "lapack":
        w, v = np.linalg.eigh(a)
    else:
        raise ValueError(f"unknown eigh method {method!r}")
    return w, _fix_phases(v)


def kernel(a, tol: float = KERNEL_TOL) -> np.ndarray:
    """Orthonormal null-space basis, one vector per column.

    A singular value counts as zero when it is at most ``tol * max(1, max|A|)``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = _as_operator(a)
    n = len(a)
    thresh = tol * max(1.0, float(np.max(np.abs(a), initial=0.0)))
    _, s, vh = np.linalg.svd(a)
    null = vh[s <= thresh].conj().T
    if null.shape[1] == 0:
        return np.zeros((n, 0), dtype=complex)
    return _fix_phases(null)


def expm(a) -> np.ndarray:
    """Matrix exponential (scaling and squaring, Pade)."""
    a = _as_operator(a)
    if not a.any():
        return np.eye(len(a), dtype=complex)
    return scipy.linalg.expm(a)


def commutator(a, b) -> np.ndarray:
    a, b = _as_operator(a), _as_operator(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return a @ b - b @ a


def kron(*ops) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, _as_operator(op))
    return out


def expectation(state, a) -> complex:
    """<psi|A|psi> for a state vector, tr(rho A) for a density matrix."""
    a = _as_operator(a)
    state = np.asarray(state, dtype=complex)
    if state.shape[0] != a.shape[0]:
        raise DimensionError(f"state dim {state.shape[0]} vs operator dim {a.shape[0]}")
    if state.ndim == 1:
        return complex(np.vdot(state, a @ state))
    return complex(np.trace(state @ a))


def basis_vector(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def normalize(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    nrm = np.linalg.norm(psi)
    if nrm == 0:
        raise ValueError("cannot normalize the zero vector")
    return psi / nrm


def projector(vectors) -> np.ndarray:
    """Orthogonal projector onto the span of orthonormal columns."""
    v = np.asarray(vectors, dtype=complex)
    if v.ndim == 1:
        v = v[:, None]
    return v @ dagger(v)


def density_matrix(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def check_density_matrix(rho, herm_tol=1e-10, trace_tol=1e-8, pos_tol=1e-8) -> None:
    """Raise ``ValueError`` unless rho is Hermitian, unit trace and PSD."""
    rho = _as_operator(rho)
    if hermiticity_error(rho) > herm_tol:
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1) > trace_tol:
        raise ValueError(f"density matrix trace {tr.real:.12f} != 1")
    lo = float(np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))[0])
    if lo < -pos_tol:
        raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")


def embed(block, indices, dim: int) -> np.ndarray:
    """Place a small operator on the listed basis indices of a larger space."""
    block = _as_operator(block)
    out = np.zeros((dim, dim), dtype=complex)
    idx = np.asarray(indices)
    out[np.ix_(idx, idx)] = block
    return out
