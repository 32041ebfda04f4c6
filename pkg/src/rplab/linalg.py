"""Solver configuration, Krylov wrappers and Hermitian spectral certificates."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DENSE_EIG_LIMIT = 2000


class NonConvergenceError(RuntimeError):
    """An iterative solve ran out of iterations; ``residual`` is the last relative residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-12
    max_iter: Optional[int] = None  # None -> 10 * system size
    workers: int = 1

    def __post_init__(self):
        if not 0 < self.tolerance < 1:
            raise ValueError(f"tolerance must lie in (0, 1), got {self.tolerance}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @classmethod
    def from_env(cls, **kw) -> "SolverConfig":
        """Pick up ``RPLAB_NUM_THREADS`` for the column-parallel solves."""
        workers = int(os.environ.get("RPLAB_NUM_THREADS", "1") or 1)
        return cls(workers=max(1, workers), **kw)

    def iterations(self, n: int) -> int:
        return self.max_iter if self.max_iter is not None else 10 * n


def cg_solve(A, b: np.ndarray, cfg: SolverConfig, *, preconditioner=None, what: str = "CG solve"):
    """Conjugate gradients for a Hermitian positive definite ``A``.

    Returns ``(x, relative_residual)`` with ``||A x - b|| <= tol ||b||`` in the
    Euclidean norm.  A stalled recurrence is restarted from the current iterate
    a few times before giving up.
    """
    b = np.asarray(b)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros_like(b), 0.0
    maxiter = cfg.iterations(b.shape[0])
    x = None
    rel = np.inf
    for _ in range(4):
        x, _info = spla.cg(A, b, x0=x, rtol=cfg.tolerance, atol=0.0, maxiter=maxiter, M=preconditioner)
        rel = np.linalg.norm(b - A @ x) / bnorm
        if rel <= cfg.tolerance:
            return x, float(rel)
    raise NonConvergenceError(f"{what} did not reach tolerance {cfg.tolerance:g}", float(rel))


def jacobi(A) -> spla.LinearOperator:
    d = np.asarray(A.diagonal())
    inv = 1.0 / d
    return spla.LinearOperator(A.shape, matvec=lambda v: inv * v if v.ndim == 1 else inv[:, None] * v, dtype=A.dtype)


def map_columns(fn: Callable[[int], object], n: int, workers: int) -> list:
    """Evaluate ``fn(0..n-1)``; independent columns go to a thread pool when asked."""
    if workers <= 1 or n < 2:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n)))


def hermitian_part(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.conj().T)


def hermiticity_residual(M: np.ndarray) -> float:
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(M - M.conj().T)))


def hermitian_spectrum(M: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of the Hermitian part of ``M``."""
    if M.shape[0] == 0:
        return np.zeros(0)
    return la.eigvalsh(hermitian_part(M))


def min_eigenvalue(M, tol: float = 1e-10) -> float:
    """Smallest eigenvalue of the Hermitian part; Lanczos above ``DENSE_EIG_LIMIT``."""
    n = M.shape[0]
    if n == 0:
        return 0.0
    if n <= DENSE_EIG_LIMIT:
        return float(hermitian_spectrum(np.asarray(M))[0])
    H = hermitian_part(M) if not sp.issparse(M) else 0.5 * (M + M.conj().T)
    vals = spla.eigsh(H, k=1, which="SA", tol=tol, return_eigenvectors=False)
    return float(vals[0])


@dataclass
class GramReport:
    """Reflection Gram matrix ``M_ab = <theta e_a, K e_b>`` with its spectral certificate."""

    matrix: np.ndarray
    basis: str
    solver_residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    hermiticity: float = field(init=False)
    eigenvalues: np.ndarray = field(init=False, repr=False)
    min_eig: float = field(init=False)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix)
        self.hermiticity = hermiticity_residual(self.matrix)
        k = self.matrix.shape[0]
        if k <= DENSE_EIG_LIMIT:
            self.eigenvalues = hermitian_spectrum(self.matrix)
            self.min_eig = float(self.eigenvalues[0]) if k else 0.0
        else:
            self.eigenvalues = np.zeros(0)
            self.min_eig = min_eigenvalue(self.matrix)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def is_positive(self, tol: float = 1e-8) -> bool:
        return self.min_eig >= -tol
