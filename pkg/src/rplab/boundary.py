"""Dirichlet and Neumann covariances on the half lattice ``0 <= t <= N0 h / 2``.

Two independent constructions are provided:

* image charges, ``C_D/N(x, y) = C(x, y) -/+ C(theta x, y)``, from torus solves;
* the symmetry quotient, i.e. ``L`` restricted to the ``U_theta``-odd / even
  subspaces, inverted directly.

Kernels are taken with respect to the half-region measure ``nu``: the cell
volume ``mu`` in the interior and ``mu / 2`` on the reflection planes, which
carry only half a cell inside the region.  With that measure the two
constructions coincide exactly.

Note on signs: ``C_D = (I - U)C`` and ``C_N = (I + U)C`` give
``U C = (C_N - C_D) / 2``, which is the sign used here.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .geometry import RegionPartition, ReflectionStructure, partition_regions
from .linalg import SolverConfig, hermitian_spectrum
from .scalar import ScalarOperator, covariance_columns


@dataclass(frozen=True, eq=False)
class HalfRegion:
    sites: np.ndarray  # sorted lattice indices: Omega_+ and both fixed planes
    boundary: np.ndarray  # bool mask over ``sites``
    nu: np.ndarray  # half-region cell volume per entry of ``sites``

    @property
    def size(self) -> int:
        return self.sites.size

    @property
    def interior(self) -> np.ndarray:
        return ~self.boundary


def half_region(op: ScalarOperator, refl: ReflectionStructure,
                partition: RegionPartition | None = None) -> HalfRegion:
    partition = partition or partition_regions(op.geometry, refl)
    sites = np.union1d(partition.omega_plus, partition.sigma)
    boundary = refl.perm[sites] == sites
    nu = op.mu[sites] * np.where(boundary, 0.5, 1.0)
    return HalfRegion(sites=sites, boundary=boundary, nu=nu)


@dataclass(frozen=True, eq=False)
class BoundaryCovariances:
    CD: np.ndarray
    CN: np.ndarray
    region: HalfRegion
    construction: str  # "image" | "quotient"


def image_covariances(op: ScalarOperator, refl: ReflectionStructure, region: HalfRegion,
                      cfg: SolverConfig = SolverConfig()) -> BoundaryCovariances:
    n = op.geometry.n_sites
    y = region.sites
    E = np.zeros((n, y.size))
    E[y, np.arange(y.size)] = 1.0 / op.mu[y]
    # column b holds the kernel C(., y_b)
    Ccols, _ = covariance_columns(op, E, cfg)
    direct = Ccols[y, :]
    mirrored = Ccols[refl.perm[y], :]
    CD = direct - mirrored
    CN = direct + mirrored
    # C(theta x, y) = C(x, theta y): the Dirichlet kernel also vanishes for y on the plane
    CD[:, region.boundary] = 0.0
    return BoundaryCovariances(CD=CD, CN=CN, region=region, construction="image")


def _embedding(op: ScalarOperator, refl: ReflectionStructure, region: HalfRegion, parity: int):
    """``P`` mapping functions on the half region to ``U_theta``-even (+1) or odd (-1) lattice functions."""
    n = op.geometry.n_sites
    pos = np.full(n, -1, dtype=np.int64)
    if parity > 0:
        cols = region.sites
    else:
        cols = region.sites[region.interior]
    pos[cols] = np.arange(cols.size)
    rows, cidx, vals = [], [], []
    inside = np.flatnonzero(pos >= 0)
    rows.append(inside)
    cidx.append(pos[inside])
    vals.append(np.ones(inside.size))
    mirror = refl.perm[cols]
    keep = mirror != cols
    rows.append(mirror[keep])
    cidx.append(pos[cols[keep]])
    vals.append(np.full(int(keep.sum()), float(parity)))
    rows, cidx, vals = map(np.concatenate, (rows, cidx, vals))
    return sp.csr_matrix((vals, (rows, cidx)), shape=(n, cols.size)), cols


def quotient_covariances(op: ScalarOperator, refl: ReflectionStructure, region: HalfRegion,
                         cfg: SolverConfig = SolverConfig()) -> BoundaryCovariances:
    """Invert ``L`` on the even (Neumann) and odd (Dirichlet) reflection subspaces."""
    L = op.matrix
    Ps, cols_s = _embedding(op, refl, region, +1)
    Pa, cols_a = _embedding(op, refl, region, -1)
    LN = (L @ Ps)[cols_s, :].toarray()
    LD = (L @ Pa)[cols_a, :].toarray()
    try:
        QN = np.linalg.inv(LN)
        QD = np.linalg.inv(LD) if cols_a.size else np.zeros((0, 0))
    except np.linalg.LinAlgError as exc:
        raise ValueError("restricted operator is singular; is V > 0?") from exc
    CN = QN / region.nu[None, :]
    inner = region.interior
    CD = np.zeros_like(CN)
    CD[np.ix_(inner, inner)] = QD / region.nu[inner][None, :]
    return BoundaryCovariances(CD=CD, CN=CN, region=region, construction="quotient")


@dataclass(frozen=True)
class MonotonicityReport:
    min_eig: float
    eigenvalues: np.ndarray
    tolerance: float
    passed: bool


def form_matrix(bc: BoundaryCovariances, kernel: np.ndarray) -> np.ndarray:
    """Quadratic-form matrix ``<e_x, K e_y>_nu`` of a kernel on the half region."""
    nu = bc.region.nu
    return nu[:, None] * kernel * nu[None, :]


def dn_monotonicity(bc: BoundaryCovariances, tol: float = 1e-8) -> MonotonicityReport:
    """Certify ``C_D <= C_N`` on ``L^2(half region, nu)``."""
    if bc.CD.shape != bc.CN.shape or bc.CD.shape[0] != bc.region.size:
        raise ValueError(f"dimension mismatch: CD {bc.CD.shape}, CN {bc.CN.shape}, region {bc.region.size}")
    ev = hermitian_spectrum(form_matrix(bc, bc.CN - bc.CD))
    lo = float(ev[0]) if ev.size else 0.0
    return MonotonicityReport(min_eig=lo, eigenvalues=ev, tolerance=tol, passed=lo >= -tol)


def reflected_kernel(op: ScalarOperator, refl: ReflectionStructure, region: HalfRegion,
                     cfg: SolverConfig = SolverConfig()) -> np.ndarray:
    """Kernel of ``U_theta C`` on the half region, ``C(theta x, y)``, from fresh solves."""
    n = op.geometry.n_sites
    y = region.sites
    E = np.zeros((n, y.size))
    E[y, np.arange(y.size)] = 1.0 / op.mu[y]
    Ccols, _ = covariance_columns(op, E, cfg)
    return Ccols[refl.perm[y], :]


def half_difference_residual(op: ScalarOperator, refl: ReflectionStructure, region: HalfRegion,
                             bc: BoundaryCovariances, cfg: SolverConfig = SolverConfig()) -> float:
    """``max |[U_theta C](x, y) - (C_N - C_D)(x, y) / 2|`` over the half region."""
    K = reflected_kernel(op, refl, region, cfg)
    return float(np.max(np.abs(K - 0.5 * (bc.CN - bc.CD))))
