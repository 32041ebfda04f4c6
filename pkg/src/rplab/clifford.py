"""Euclidean gamma matrices from a Pauli (Jordan-Wigner) chain.

On ``n`` qubits the chain gives ``2n`` Hermitian, mutually anticommuting
involutions

    gamma_{2k}   = Z x ... x Z x X x I x ... x I
    gamma_{2k+1} = Z x ... x Z x Y x I x ... x I

(``k`` factors of ``Z`` in front).  By default ``n = ceil(d/2)`` and the
first ``d`` generators are kept, so every ``d`` shares one construction.
``irreducible=True`` uses ``n = floor(d/2)`` and, for odd ``d``, closes the
set with the (Hermitian) product of the even ones.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)

MAX_DIM = 12


@dataclass(frozen=True, eq=False)
class CliffordRep:
    d: int
    gammas: tuple

    @property
    def spinor_dim(self) -> int:
        return self.gammas[0].shape[0]

    @property
    def gamma0(self) -> np.ndarray:
        return self.gammas[0]

    def eta(self) -> np.ndarray:
        """``eta_j = i gamma_0 gamma_j`` for the spatial directions, stacked ``(d-1, s, s)``."""
        g0 = self.gammas[0]
        if self.d == 1:
            return np.zeros((0, self.spinor_dim, self.spinor_dim), dtype=complex)
        return np.stack([1j * g0 @ g for g in self.gammas[1:]])

    def slash(self, p: Sequence[float]) -> np.ndarray:
        return sum(pi * g for pi, g in zip(p, self.gammas))


def _kron(*ms):
    return reduce(np.kron, ms, np.eye(1, dtype=complex))


def _chain(n: int) -> list:
    out = []
    for k in range(n):
        pre = [_Z] * k
        post = [_I] * (n - k - 1)
        out.append(_kron(*pre, _X, *post))
        out.append(_kron(*pre, _Y, *post))
    return out


def gamma_matrices(d: int, irreducible: bool = False) -> CliffordRep:
    if not 1 <= d <= MAX_DIM:
        raise ValueError(f"dimension must be in [1, {MAX_DIM}], got {d}")
    if not irreducible:
        gens = _chain((d + 1) // 2)[:d]
    else:
        n = d // 2
        gens = _chain(n)
        if d % 2:
            # i^n g_0 ... g_{2n-1} squares to I, is Hermitian and anticommutes with the rest
            prod = _kron(*([_Z] * n)) if n else np.eye(1, dtype=complex)
            gens.append(prod)
    return CliffordRep(d=d, gammas=tuple(g.copy() for g in gens))


def clifford_residual(rep: CliffordRep) -> float:
    """Largest entry of ``{g_i, g_j} - 2 delta_ij I`` or of ``g_i - g_i^dagger``."""
    I = np.eye(rep.spinor_dim)
    worst = 0.0
    for i, gi in enumerate(rep.gammas):
        worst = max(worst, float(np.max(np.abs(gi - gi.conj().T))))
        for j, gj in enumerate(rep.gammas[i:], start=i):
            target = 2 * I if i == j else 0
            worst = max(worst, float(np.max(np.abs(gi @ gj + gj @ gi - target))))
    return worst


@dataclass(frozen=True)
class AMatrixReport:
    omega: float
    matrix: np.ndarray
    eigenvalues: np.ndarray
    n_zero: int
    n_upper: int
    omega_sq_residual: float
    level_error: float  # max distance of the spectrum from {0, 2 omega}, relative to omega


def a_operator(rep: CliffordRep, p: Sequence[float], mass: float) -> np.ndarray:
    """``omega I + eta . p - mass gamma_0`` (any real ``mass``)."""
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size != rep.d - 1:
        raise ValueError(f"need {rep.d - 1} spatial momentum components, got {p.size}")
    omega = np.sqrt(p @ p + mass**2)
    Omega = np.tensordot(p, rep.eta(), axes=(0, 0)) - mass * rep.gamma0
    return omega * np.eye(rep.spinor_dim) + Omega


def a_matrix(rep: CliffordRep, p: Sequence[float], m: float) -> AMatrixReport:
    if not m > 0:
        raise ValueError(f"mass must be positive, got {m}")
    p = np.asarray(p, dtype=float).reshape(-1)
    omega = float(np.sqrt(p @ p + m**2))
    A = a_operator(rep, p, m)
    herm = float(np.max(np.abs(A - A.conj().T)))
    if herm > 1e-12 * max(1.0, omega):
        raise ValueError(f"A is not Hermitian (defect {herm:.2e}); the gamma matrices are broken")
    Omega = A - omega * np.eye(rep.spinor_dim)
    res = float(np.max(np.abs(Omega @ Omega - omega**2 * np.eye(rep.spinor_dim))))
    ev = np.linalg.eigvalsh(0.5 * (A + A.conj().T))
    upper = ev > omega
    err = max(float(np.max(np.abs(ev[~upper]), initial=0.0)),
              float(np.max(np.abs(ev[upper] - 2 * omega), initial=0.0))) / omega
    return AMatrixReport(omega=omega, matrix=A, eigenvalues=ev, n_zero=int((~upper).sum()),
                         n_upper=int(upper.sum()), omega_sq_residual=res, level_error=err)
