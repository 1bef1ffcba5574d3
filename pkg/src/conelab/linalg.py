"""Dense Hermitian eigensolver built on cyclic Jacobi rotations.

The matrices in this package are small (n <= 32), so a vectorised Jacobi
scheme is both fast enough and fully deterministic: given the same input
bytes it produces the same output bytes, independent of batch composition
or thread count.  Each matrix in a batch follows its own rotation
trajectory (rotations are gated per matrix), which is what makes chunked
parallel evaluation reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError

#: convergence: off-diagonal Frobenius norm below this times the input norm
OFFDIAG_TOL = 1e-13
#: inputs must be Hermitian to this relative tolerance
HERMITICITY_TOL = 1e-10
#: eigenvalues closer than this (relative) are treated as one degenerate cluster
DEGENERACY_TOL = 1e-9

_MAX_SWEEPS = 100
_ROTATION_SKIP = 1e-18   # relative size below which a pivot is not worth rotating


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition of a Hermitian matrix.

    eigenvalues are sorted ascending; column j of eigenvectors pairs with
    eigenvalues[j].  Within a degenerate cluster the individual columns are
    an arbitrary orthonormal basis: downstream code must use projectors,
    not single vectors, when |E_i - E_j| < DEGENERACY_TOL * ||H||.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def residual(self, matrix: np.ndarray) -> float:
        """Max column norm of H v - E v."""
        defect = matrix @ self.eigenvectors - self.eigenvectors * self.eigenvalues
        return float(np.sqrt((np.abs(defect) ** 2).sum(axis=0)).max())


def _frobenius(a: np.ndarray) -> np.ndarray:
    return np.sqrt((np.abs(a) ** 2).sum(axis=(-2, -1)))


def _offdiag_norm(a: np.ndarray) -> np.ndarray:
    off = np.abs(a) ** 2
    idx = np.arange(a.shape[-1])
    off[..., idx, idx] = 0.0
    return np.sqrt(off.sum(axis=(-2, -1)))


def _check_hermitian(a: np.ndarray, scale: np.ndarray) -> None:
    defect = _frobenius(a - np.conj(np.swapaxes(a, -2, -1)))
    bad = defect > HERMITICITY_TOL * np.maximum(scale, 1e-300)
    if bad.any():
        worst = float((defect / np.maximum(scale, 1e-300)).max())
        raise ContractError(
            f"matrix is not Hermitian: relative defect {worst:.3e} exceeds "
            f"{HERMITICITY_TOL:.1e}"
        )


def _jacobi_rotate(a: np.ndarray, v: np.ndarray | None, scale: np.ndarray) -> None:
    """Run cyclic Jacobi sweeps in place on a batch of Hermitian matrices."""
    b, n = a.shape[0], a.shape[-1]
    if n == 1:
        return
    for _ in range(_MAX_SWEEPS):
        active = _offdiag_norm(a) > OFFDIAG_TOL * scale
        if not active.any():
            return
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[:, p, q]
                r = np.abs(apq)
                rot = active & (r > _ROTATION_SKIP * scale)
                if not rot.any():
                    continue
                safe_r = np.where(rot, r, 1.0)
                phase = np.where(rot, apq / safe_r, 1.0)
                tau = (a[:, q, q].real - a[:, p, p].real) / (2.0 * safe_r)
                sign = np.where(tau >= 0.0, 1.0, -1.0)
                t = np.where(rot, sign / (np.abs(tau) + np.hypot(1.0, tau)), 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # unitary G acts on the (p, q) plane:
                #   col p -> c * col_p - s * conj(phase) * col_q
                #   col q -> s * col_p + c * conj(phase) * col_q
                cs = c[:, None]
                ss = s[:, None]
                ph = phase[:, None]
                gate = rot[:, None]
                cp = a[:, :, p].copy()
                cq = a[:, :, q].copy()
                a[:, :, p] = np.where(gate, cs * cp - ss * np.conj(ph) * cq, cp)
                a[:, :, q] = np.where(gate, ss * cp + cs * np.conj(ph) * cq, cq)
                rp = a[:, p, :].copy()
                rq = a[:, q, :].copy()
                a[:, p, :] = np.where(gate, cs * rp - ss * ph * rq, rp)
                a[:, q, :] = np.where(gate, ss * rp + cs * ph * rq, rq)
                if v is not None:
                    vp = v[:, :, p].copy()
                    vq = v[:, :, q].copy()
                    v[:, :, p] = np.where(gate, cs * vp - ss * np.conj(ph) * vq, vp)
                    v[:, :, q] = np.where(gate, ss * vp + cs * np.conj(ph) * vq, vq)
    raise ContractError(f"Jacobi sweep did not converge in {_MAX_SWEEPS} sweeps")


def eigh_batch(matrices: np.ndarray, need_vectors: bool = True):
    """Diagonalise a batch of Hermitian matrices.

    Parameters
    ----------
    matrices : array (..., n, n), complex or real
    need_vectors : skip the eigenvector accumulation when False.

    Returns
    -------
    (eigenvalues, eigenvectors): shapes (..., n) and (..., n, n); the
    eigenvector entry is None when need_vectors is False.
    """
    matrices = np.asarray(matrices)
    lead = matrices.shape[:-2]
    n = matrices.shape[-1]
    if matrices.shape[-2] != n:
        raise ContractError(f"expected square matrices, got {matrices.shape}")
    a = matrices.reshape(-1, n, n).astype(np.complex128, copy=True)
    scale = np.maximum(_frobenius(a), 1e-300)
    _check_hermitian(a, scale)
    a = 0.5 * (a + np.conj(np.swapaxes(a, -2, -1)))
    v = None
    if need_vectors:
        v = np.zeros_like(a)
        v[:, np.arange(n), np.arange(n)] = 1.0
    _jacobi_rotate(a, v, scale)
    vals = np.diagonal(a, axis1=-2, axis2=-1).real.copy()
    order = np.argsort(vals, axis=-1, kind="stable")
    vals = np.take_along_axis(vals, order, axis=-1)
    if need_vectors:
        v = np.take_along_axis(v, order[:, None, :], axis=-1)
        return vals.reshape(*lead, n), v.reshape(*lead, n, n)
    return vals.reshape(*lead, n), None


def eigh(matrix: np.ndarray, need_vectors: bool = True) -> Spectrum:
    """Eigendecomposition of one Hermitian matrix, eigenvalues ascending."""
    vals, vecs = eigh_batch(np.asarray(matrix)[None, :, :], need_vectors)
    return Spectrum(vals[0], vecs[0] if vecs is not None else None)


def eigvalsh(matrix: np.ndarray) -> np.ndarray:
    """Eigenvalues only, sorted ascending."""
    return eigh(matrix, need_vectors=False).eigenvalues


def eigvalsh_batch(matrices: np.ndarray) -> np.ndarray:
    return eigh_batch(matrices, need_vectors=False)[0]
