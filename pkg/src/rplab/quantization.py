"""One-particle Osterwalder-Schrader space from a reflection Gram matrix.

The positive-time span modulo the null space of the form is represented by
the eigenvectors of the (Hermitian part of the) Gram matrix with eigenvalue
above ``rank_tol``; scaling each by ``lambda^{-1/2}`` makes the quotient Gram
the identity.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import GramReport, hermitian_part

HERMITICITY_LIMIT = 1e-8


class ReflectionPositivityError(ValueError):
    """The Gram form has a clearly negative direction, so there is no quotient to take."""

    def __init__(self, eigenvalue: float, rank_tol: float):
        super().__init__(f"Gram matrix is not positive: eigenvalue {eigenvalue:.6e} < -rank_tol = {-rank_tol:.3e}")
        self.eigenvalue = eigenvalue
        self.rank_tol = rank_tol


@dataclass(frozen=True, eq=False)
class HilbertReport:
    basis: str
    spectrum: np.ndarray  # ascending
    rank_tol: float
    rank: int
    null_dim: int
    quotient_basis: np.ndarray  # (k, rank): Q with Q^dagger M Q = I
    null_basis: np.ndarray  # (k, null_dim), orthonormal
    projector: np.ndarray  # orthogonal projector onto the positive eigenspace

    @property
    def size(self) -> int:
        return self.rank + self.null_dim


def _as_matrix(gram) -> tuple:
    if isinstance(gram, GramReport):
        return gram.matrix, gram.basis
    M = np.asarray(gram)
    return M, f"{M.shape[0]}x{M.shape[0]} matrix"


def os_quotient(gram, rank_tol: Optional[float] = None) -> HilbertReport:
    """Split the Gram form into its positive part and its null space.

    ``rank_tol`` defaults to ``1e-10 * max(|lambda|)``.
    """
    M, label = _as_matrix(gram)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"Gram matrix must be square, got {M.shape}")
    k = M.shape[0]
    if k == 0:
        z = np.zeros((0, 0))
        return HilbertReport(label, np.zeros(0), 0.0, 0, 0, z, z, z)
    herm = float(np.max(np.abs(M - M.conj().T)))
    if herm > HERMITICITY_LIMIT:
        raise ValueError(f"Gram matrix is not Hermitian (residual {herm:.3e} > {HERMITICITY_LIMIT:g})")
    lam, V = np.linalg.eigh(hermitian_part(M))
    if rank_tol is None:
        rank_tol = 1e-10 * float(np.max(np.abs(lam)))
    if lam[0] < -rank_tol:
        raise ReflectionPositivityError(float(lam[0]), float(rank_tol))
    pos = lam > rank_tol
    Vp = V[:, pos]
    Q = Vp / np.sqrt(lam[pos])[None, :]
    return HilbertReport(
        basis=label,
        spectrum=lam,
        rank_tol=float(rank_tol),
        rank=int(pos.sum()),
        null_dim=int((~pos).sum()),
        quotient_basis=Q,
        null_basis=V[:, ~pos],
        projector=Vp @ Vp.conj().T,
    )


def quotient_gram(gram, report: HilbertReport) -> np.ndarray:
    """``Q^dagger M Q``; the identity when the quotient is well formed."""
    M, _ = _as_matrix(gram)
    Q = report.quotient_basis
    return Q.conj().T @ M @ Q


def one_particle_norm(gram, coeffs: np.ndarray) -> float:
    """``c^dagger M c`` for coefficients over the Gram basis."""
    M, _ = _as_matrix(gram)
    c = np.asarray(coeffs).reshape(-1)
    if c.size != M.shape[0]:
        raise ValueError(f"need {M.shape[0]} coefficients, got {c.size}")
    return float(np.real(np.vdot(c, M @ c)))
