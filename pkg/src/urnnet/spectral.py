"""Dense spectral analysis of I + A D^-1 and related model matrices.

Undirected graphs go through the symmetric similarity
D^-1/2 (D + A) D^-1/2, so eigenvalues are exactly real and the eigenvector
matrix is well conditioned. Directed graphs use the general eigensolver and
may produce complex spectra.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import EigenFailure

__all__ = ["SpectralData", "eigendecompose", "rank_with_tol", "nullspace", "ZERO_EIG_TOL"]

ZERO_EIG_TOL = 1e-8
COND_LIMIT = 1e10


@dataclass(frozen=True)
class SpectralData:
    """Eigensystem of I + A D^-1 with any zero eigenvalue sorted first.

    P holds right eigenvectors as columns and Pinv = P^-1, so rows of Pinv
    are left eigenvectors; the first row is the left null vector when a zero
    eigenvalue exists. theta is the smallest nonzero eigenvalue, defined only
    for (numerically) real spectra that contain a zero eigenvalue.
    """

    eigenvalues: np.ndarray
    P: np.ndarray
    Pinv: np.ndarray
    diagonalizable: bool
    theta: Optional[float] = None

    @property
    def has_zero_eigenvalue(self) -> bool:
        return bool(np.abs(self.eigenvalues[0]) < ZERO_EIG_TOL)

    def reconstruct(self) -> np.ndarray:
        """P diag(lambda) P^-1; should reproduce I + A D^-1."""
        return (self.P * self.eigenvalues) @ self.Pinv


def eigendecompose(A: np.ndarray, Ddiag: np.ndarray, directed: bool) -> SpectralData:
    """Eigendecomposition of M = I + A D^-1.

    Zero eigenvalues (|lambda| < 1e-8) sort first, the rest ascend by real
    part. A directed matrix whose eigenvector matrix has condition number
    above 1e10 is flagged diagonalizable=False.
    """
    if np.any(Ddiag <= 0):
        raise ValueError("degree vector must be strictly positive")
    n = A.shape[0]
    M = np.eye(n) + A / Ddiag[None, :]

    try:
        if not directed:
            # D^-1/2 (I + A D^-1) D^1/2 = I + D^-1/2 A D^-1/2 is symmetric
            droot = np.sqrt(Ddiag)
            sym = np.eye(n) + A / np.outer(droot, droot)
            w, V = np.linalg.eigh(sym)
            P = V * droot[:, None]
            Pinv = V.T / droot[None, :]
            eig = w.astype(float)
            diagonalizable = True
        else:
            eig, P = np.linalg.eig(M)
            cond = np.linalg.cond(P)
            diagonalizable = bool(np.isfinite(cond) and cond < COND_LIMIT)
            Pinv = np.linalg.inv(P)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc

    order = _zero_first_order(eig)
    eig = eig[order]
    P = P[:, order]
    Pinv = Pinv[order, :]

    if np.all(np.abs(np.imag(eig)) < 1e-10):
        eig = np.real(eig)
        if np.iscomplexobj(P) and np.all(np.abs(np.imag(P)) < 1e-10):
            P = np.real(P)
            Pinv = np.real(Pinv)

    theta = None
    if np.isrealobj(eig) and np.abs(eig[0]) < ZERO_EIG_TOL:
        nonzero = eig[np.abs(eig) >= ZERO_EIG_TOL]
        if nonzero.size:
            theta = float(nonzero.min())
    return SpectralData(eigenvalues=eig, P=P, Pinv=Pinv,
                        diagonalizable=diagonalizable, theta=theta)


def _zero_first_order(eig: np.ndarray) -> np.ndarray:
    zero = np.abs(eig) < ZERO_EIG_TOL
    keys = list(zip(~zero, np.real(eig), np.imag(eig)))
    return np.array(sorted(range(len(eig)), key=lambda i: keys[i]))


def default_rank_tol(M: np.ndarray) -> float:
    scale = np.max(np.abs(M)) if M.size else 0.0
    return 1e-9 * M.shape[0] * max(scale, 1e-300)


def rank_with_tol(M: np.ndarray, tol: Optional[float] = None) -> int:
    """Numerical rank from singular values; deterministic for fixed input."""
    if tol is None:
        tol = default_rank_tol(M)
    sv = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(sv > tol))


def nullspace(M: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """Orthonormal basis of the left null space {x : x M = 0}.

    Row-vector convention: returns an array of shape (n - rank, n) whose rows
    x satisfy x @ M ~ 0.
    """
    if tol is None:
        tol = default_rank_tol(M)
    U, sv, _ = np.linalg.svd(M)
    null_mask = np.concatenate([sv <= tol, np.ones(M.shape[0] - len(sv), bool)])
    return U[:, null_mask].T.conj()
