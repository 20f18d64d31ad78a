"""Protected-subspace finder.

A protected subspace is spanned by kernel vectors of the drive Hamiltonian on
which J_z vanishes identically. It is constructed as the maximal isotropic
subspace of J_z compressed onto ker(H_d).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from darkqubit import qcore

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class HermitianForm:
    matrix: np.ndarray
    signature: tuple[int, int, int]  # (positive, negative, zero)


@dataclass(frozen=True)
class ProtectedSubspace:
    basis: np.ndarray  # columns
    residual_hd: float
    residual_jz: float
    gap: float

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def dark_basis(self) -> list[np.ndarray]:
        return [self.basis[:, k].copy() for k in range(self.dim)]

    @property
    def projector(self) -> np.ndarray:
        return qcore.projector(self.basis)


@dataclass(frozen=True)
class VerifyReport:
    residual_hd: float
    residual_jz: float
    passed: bool


def _columns(basis, dim=None) -> np.ndarray:
    if isinstance(basis, np.ndarray) and basis.ndim == 2:
        return basis.astype(complex)
    vecs = [np.asarray(v, dtype=complex) for v in basis]
    if not vecs:
        return np.zeros((dim or 0, 0), dtype=complex)
    return np.stack(vecs, axis=1)


def residuals(h_d, jz, basis) -> tuple[float, float]:
    h_d, jz = qcore._as_operator(h_d), qcore._as_operator(jz)
    v = _columns(basis, len(h_d))
    if v.shape[1] == 0:
        return 0.0, 0.0
    if v.shape[0] != len(h_d) or jz.shape != h_d.shape:
        raise qcore.DimensionError("basis, H_d and J_z dimensions disagree")
    res_hd = float(np.max(np.linalg.norm(h_d @ v, axis=0)))
    res_jz = float(np.max(np.abs(qcore.dagger(v) @ jz @ v)))
    return res_hd, res_jz


def verify_protected(h_d, jz, basis, tol: float = 1e-10) -> VerifyReport:
    v = _columns(basis, len(h_d))
    if v.shape[1] and not np.allclose(np.linalg.norm(v, axis=0), 1.0, atol=1e-10):
        raise ValueError("basis vectors must be normalized")
    res_hd, res_jz = residuals(h_d, jz, v)
    return VerifyReport(res_hd, res_jz, res_hd <= tol and res_jz <= tol)


def signature(a, tol: float = DEFAULT_TOL) -> HermitianForm:
    w, _ = qcore.eigh(a)
    scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    zero = np.abs(w) <= tol * scale
    return HermitianForm(qcore._as_operator(a), (int(np.sum((w > 0) & ~zero)),
                                                  int(np.sum((w < 0) & ~zero)),
                                                  int(np.sum(zero))))


def isotropic_basis(a, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal columns v with <v_a|A|v_b> = 0 for all a, b.

    Zero eigenvectors are kept as they are; each remaining positive eigenvector
    (eigenvalues descending) is paired with a negative one (magnitudes
    ascending) into (sqrt(-l_neg) u_pos + sqrt(l_pos) u_neg) / sqrt(l_pos - l_neg).
    The result has z + min(p, q) columns, the largest possible.
    """
    a = qcore._as_operator(a)
    n = len(a)
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    w, u = qcore.eigh(a)
    scale = max(1.0, float(np.max(np.abs(w))))
    zero = np.abs(w) <= tol * scale

    def first_nonzero(k):
        return int(np.flatnonzero(np.abs(u[:, k]) > 1e-12)[0])

    zeros = sorted(np.flatnonzero(zero), key=lambda k: (first_nonzero(k), k))
    pos = sorted(np.flatnonzero((w > 0) & ~zero), key=lambda k: (-w[k], first_nonzero(k)))
    neg = sorted(np.flatnonzero((w < 0) & ~zero), key=lambda k: (-w[k], first_nonzero(k)))
    cols = [u[:, k] for k in zeros]
    for kp, kn in zip(pos, neg):
        lp, ln = w[kp], w[kn]
        cols.append((np.sqrt(-ln) * u[:, kp] + np.sqrt(lp) * u[:, kn]) / np.sqrt(lp - ln))
    if not cols:
        return np.zeros((n, 0), dtype=complex)
    return np.stack(cols, axis=1)


def canonical_span(v: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Basis-independent orthonormal basis of span(v).

    Reduced row echelon form of v^T fixes the subspace representation, then
    Gram-Schmidt in pivot order and the first nonzero entry of every vector is
    made real positive.
    """
    k = v.shape[1]
    if k == 0:
        return v.copy()
    r = v.T.copy()
    pivots = []
    row = 0
    for col in range(r.shape[1]):
        if row == k:
            break
        piv = row + int(np.argmax(np.abs(r[row:, col])))
        if abs(r[piv, col]) <= tol:
            continue
        r[[row, piv]] = r[[piv, row]]
        r[row] /= r[row, col]
        for other in range(k):
            if other != row:
                r[other] -= r[other, col] * r[row]
        pivots.append(col)
        row += 1
    out = []
    for vec in r[:row]:
        for q in out:
            vec = vec - np.vdot(q, vec) * q
        vec = vec / np.linalg.norm(vec)
        lead = vec[np.flatnonzero(np.abs(vec) > tol)[0]]
        out.append(vec * np.conj(lead) / abs(lead))
    return np.stack(out, axis=1)


def compress(a, basis) -> np.ndarray:
    v = _columns(basis)
    return qcore.dagger(v) @ qcore._as_operator(a) @ v


def find_protected(h_d, jz, tol: float = DEFAULT_TOL) -> ProtectedSubspace:
    """Maximal subspace of ker(H_d) on which J_z vanishes."""
    h_d, jz = qcore._as_operator(h_d), qcore._as_operator(jz)
    if not qcore.is_hermitian(h_d, rtol=1e-10):
        raise qcore.NotHermitianError("H_d must be Hermitian")
    if jz.shape != h_d.shape:
        raise qcore.DimensionError("H_d and J_z shapes differ")
    n = len(h_d)
    w = np.linalg.eigvalsh(0.5 * (h_d + qcore.dagger(h_d)))
    scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    nonzero = np.abs(w)[np.abs(w) > tol * scale]
    gap = float(nonzero.min()) if nonzero.size else 0.0

    ker = qcore.kernel(h_d, tol)
    if ker.shape[1] == 0:
        return ProtectedSubspace(np.zeros((n, 0), dtype=complex), 0.0, 0.0, gap)
    small = compress(jz, ker)
    small = 0.5 * (small + qcore.dagger(small))
    iso = isotropic_basis(small, tol)
    if iso.shape[1] == 0:
        return ProtectedSubspace(np.zeros((n, 0), dtype=complex), 0.0, 0.0, gap)
    basis = canonical_span(ker @ iso)
    res_hd, res_jz = residuals(h_d, jz, basis)
    return ProtectedSubspace(basis, res_hd, res_jz, gap)


@dataclass(frozen=True)
class TransitionReport:
    jy_intra: float
    jx_intra: float
    commutator_jy: float
    commutator_jx: float
    jz_out: float  # min over dark vectors of |P_perp J_z |D>|


def transition_structure(h_d, jx, jy, jz, subspace: ProtectedSubspace) -> TransitionReport:
    """Which of J_x, J_y acts inside the protected subspace."""
    if subspace.dim == 0:
        return TransitionReport(0.0, 0.0, 0.0, 0.0, 0.0)
    v = subspace.basis
    p_perp = np.eye(len(v)) - qcore.projector(v)

    def norm2(a):
        return float(np.linalg.norm(a, 2))

    return TransitionReport(
        jy_intra=norm2(compress(jy, v)),
        jx_intra=norm2(compress(jx, v)),
        commutator_jy=float(np.max(np.linalg.norm(qcore.commutator(h_d, jy) @ v, axis=0))),
        commutator_jx=float(np.max(np.linalg.norm(qcore.commutator(h_d, jx) @ v, axis=0))),
        jz_out=float(np.min(np.linalg.norm(p_perp @ jz @ v, axis=0))),
    )
