"""Scalar covariance ``C = (-Delta_g + V)^{-1}`` on a reflection-symmetric lattice.

The operator is stored in factored form: ``L = mu^{-1} K + V`` where ``K`` is
the weighted graph Laplacian (symmetric, one weight per lattice edge) and
``mu`` the cell volume.  ``L`` is therefore self-adjoint for
``<u, v>_mu = sum conj(u) v mu``, and the symmetric matrix
``mu^{-1/2} K mu^{-1/2} + V`` is what conjugate gradients actually sees.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .geometry import (
    LatticeGeometry,
    MeasureField,
    RegionPartition,
    ReflectionStructure,
    StaticMetric,
    measure_weights,
)
from .linalg import GramReport, SolverConfig, cg_solve, jacobi, map_columns


@dataclass(frozen=True, eq=False)
class PotentialField:
    V: np.ndarray

    @classmethod
    def from_curvature(cls, geom: LatticeGeometry, mass: float, xi: float = 0.0,
                       R: Optional[np.ndarray] = None) -> "PotentialField":
        """``V = m^2 + xi R``.  ``R`` lives on the spatial grid (so it is even in t)."""
        if not mass > 0:
            raise ValueError(f"mass must be positive, got {mass}")
        if R is None:
            R_site = np.zeros(geom.n_sites)
        else:
            R = np.asarray(R, dtype=float)
            if R.shape == geom.spatial_shape:
                R_site = R.reshape(-1)[geom.spatial_index]
            elif R.shape == (geom.n_sites,):
                R_site = R
            else:
                raise ValueError(f"R has shape {R.shape}; expected {geom.spatial_shape} or ({geom.n_sites},)")
        V = mass**2 + xi * R_site
        if not np.all(V > 0):
            raise ValueError(f"curvature bound violated: min(m^2 + xi R) = {V.min():.3g} <= 0")
        return cls(V=V)


@dataclass(frozen=True, eq=False)
class ScalarOperator:
    geometry: LatticeGeometry
    measure: MeasureField
    stiffness: sp.csr_matrix  # K, symmetric
    V: np.ndarray
    edges: np.ndarray  # (n_edges, 2) site pairs
    edge_weights: np.ndarray

    @property
    def mu(self) -> np.ndarray:
        return self.measure.mu

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        """``L`` acting on point values."""
        return (sp.diags(1.0 / self.mu) @ self.stiffness + sp.diags(self.V)).tocsr()

    @cached_property
    def symmetric(self) -> sp.csr_matrix:
        s = sp.diags(1.0 / np.sqrt(self.mu))
        return (s @ self.stiffness @ s + sp.diags(self.V)).tocsr()

    @cached_property
    def _precond(self):
        return jacobi(self.symmetric)

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.matrix @ u

    def inner(self, u: np.ndarray, v: np.ndarray) -> complex:
        return np.sum(np.conj(u) * v * self.mu)

    def norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(np.sum(np.abs(u) ** 2 * self.mu)))

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def _assemble(geom: LatticeGeometry, mu: np.ndarray, inv_metric: np.ndarray, V: np.ndarray) -> ScalarOperator:
    """Stencil from per-site fields; ``inv_metric`` is ``(n_sites, d)`` with ``g^{jj}``."""
    h = geom.spacing
    n = geom.n_sites
    rows, cols, weights = [], [], []
    diag = np.zeros(n)
    for j in range(geom.dims):
        a = mu * inv_metric[:, j]
        # per-axis (forward + backward) sums keep the diagonal bit-exactly theta-even
        pair = np.zeros(n)
        for nb in (geom.forward[j], geom.backward[j]):
            ok = nb >= 0
            pair[ok] += 0.5 * (a[ok] + a[nb[ok]]) / h**2
        diag += pair
        s = np.arange(n)
        nb = geom.forward[j]
        ok = nb >= 0
        s, nb = s[ok], nb[ok]
        w = 0.5 * (a[s] + a[nb]) / h**2
        rows.append(s)
        cols.append(nb)
        weights.append(w)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    w = np.concatenate(weights)
    off = sp.coo_matrix((-w, (rows, cols)), shape=(n, n))
    K = (off + off.T + sp.diags(diag)).tocsr()
    K.sum_duplicates()
    return ScalarOperator(
        geometry=geom,
        measure=MeasureField(mu=np.asarray(mu, dtype=float)),
        stiffness=K,
        V=np.asarray(V, dtype=float),
        edges=np.stack([rows, cols], axis=1),
        edge_weights=w,
    )


def assemble_operator(geom: LatticeGeometry, metric: StaticMetric, potential: PotentialField) -> ScalarOperator:
    """``-Delta_g + V`` with edge weights ``mean(mu g^{jj}) / h^2``."""
    V = np.asarray(potential.V, dtype=float)
    if V.shape != (geom.n_sites,):
        raise ValueError(f"potential has shape {V.shape}, expected ({geom.n_sites},)")
    if not np.all(V > 0):
        raise ValueError("potential must be positive everywhere")
    measure = measure_weights(geom, metric)
    inv = np.empty((geom.n_sites, geom.dims))
    inv[:, 0] = 1.0 / metric.site_F(geom)
    if geom.dims > 1:
        inv[:, 1:] = 1.0 / metric.site_G(geom)
    return _assemble(geom, measure.mu, inv, V)


def covariance_apply(op: ScalarOperator, f: np.ndarray, cfg: SolverConfig = SolverConfig()) -> np.ndarray:
    """``u = C f`` with ``||L u - f||_mu <= tol ||f||_mu``."""
    u, _ = _solve(op, f, cfg)
    return u


def _solve(op: ScalarOperator, f: np.ndarray, cfg: SolverConfig):
    f = np.asarray(f)
    root = np.sqrt(op.mu)
    # mu-norm residual of L u = f equals the Euclidean residual of the symmetric system
    y, rel = cg_solve(op.symmetric, root * f, cfg, preconditioner=op._precond, what="covariance solve")
    return y / root, rel


def covariance_columns(op: ScalarOperator, sources: np.ndarray, cfg: SolverConfig) -> tuple:
    """Solve ``L u_b = sources[:, b]`` column by column; returns ``(U, residuals)``."""
    sources = np.asarray(sources)
    out = map_columns(lambda b: _solve(op, sources[:, b], cfg), sources.shape[1], cfg.workers)
    U = np.stack([u for u, _ in out], axis=1) if out else np.zeros((op.geometry.n_sites, 0))
    return U, np.array([r for _, r in out])


def reflection_commutation_residual(op: ScalarOperator, refl: ReflectionStructure) -> float:
    """``max |U_theta L - L U_theta|`` over the delta basis (i.e. entrywise)."""
    U = refl.matrix()
    D = (U @ op.matrix - op.matrix @ U).tocoo()
    return float(np.max(np.abs(D.data))) if D.nnz else 0.0


def _check_positive_support(sites: np.ndarray, partition: RegionPartition) -> None:
    bad = np.setdiff1d(sites, partition.omega_plus)
    if bad.size:
        raise ValueError(f"basis sites {bad[:5].tolist()} are not in Omega_+ (need 0 < t < N0 h / 2)")


def rp_gram(op: ScalarOperator, refl: ReflectionStructure, basis_sites: Sequence[int],
            cfg: SolverConfig = SolverConfig(), partition: Optional[RegionPartition] = None) -> GramReport:
    """``M_ab = <U_theta e_a, C e_b>_mu`` for point deltas ``e_a`` at sites in Omega_+."""
    from .geometry import partition_regions

    sites = np.asarray(basis_sites, dtype=np.int64)
    partition = partition or partition_regions(op.geometry, refl)
    _check_positive_support(sites, partition)
    n = op.geometry.n_sites
    E = np.zeros((n, sites.size))
    E[sites, np.arange(sites.size)] = 1.0
    U, res = covariance_columns(op, E, cfg)
    # <U_theta e_a, u>_mu = mu(theta a) u(theta a)
    ta = refl.perm[sites]
    M = op.mu[ta][:, None] * U[ta, :]
    return GramReport(matrix=M, basis=f"scalar deltas at {sites.size} sites in Omega_+", solver_residuals=res)


def positive_time_sites(partition: RegionPartition, t_max: Optional[int] = None, geom: Optional[LatticeGeometry] = None) -> np.ndarray:
    """All Omega_+ sites, optionally only those with time label <= ``t_max``."""
    sites = partition.omega_plus
    if t_max is not None:
        sites = sites[geom.t_index[sites] <= t_max]
    return sites


@dataclass(frozen=True)
class ActionIdentity:
    lhs: float
    rhs: float
    residual: float
    lhs_imag: float = 0.0


def region_energy(op: ScalarOperator, partition: RegionPartition, u: np.ndarray, convention: str = "edge") -> float:
    """Discrete ``sum (|grad u|^2 + V |u|^2) dV`` over the closed negative-time region.

    ``convention="edge"`` counts every edge with both ends in Omega_- u Sigma,
    half of each edge from Sigma into Omega_+, and the potential on Omega_- u Sigma.
    ``convention="trapezoid"`` halves the Sigma plane instead (edges inside Sigma
    and the potential there) and drops edges into Omega_+; for this choice the
    reflection form equals twice the energy exactly.
    """
    lab = partition.labels
    a, b = op.edges[:, 0], op.edges[:, 1]
    la_, lb_ = lab[a], lab[b]
    if convention == "edge":
        closed = (la_ <= 0) & (lb_ <= 0)
        crossing = ((la_ == 0) & (lb_ == 1)) | ((la_ == 1) & (lb_ == 0))
        ce = np.where(closed, 1.0, 0.0) + np.where(crossing, 0.5, 0.0)
        cs = np.where(lab <= 0, 1.0, 0.0)
    elif convention == "trapezoid":
        touches_minus = (la_ == -1) | (lb_ == -1)
        closed = (la_ <= 0) & (lb_ <= 0)
        ce = np.where(closed & touches_minus, 1.0, 0.0) + np.where((la_ == 0) & (lb_ == 0), 0.5, 0.0)
        cs = np.where(lab == -1, 1.0, 0.0) + np.where(lab == 0, 0.5, 0.0)
    else:
        raise ValueError(f"unknown convention {convention!r}")
    grad = np.sum(ce * op.edge_weights * np.abs(u[a] - u[b]) ** 2)
    pot = np.sum(cs * op.mu * op.V * np.abs(u) ** 2)
    return float(grad + pot)


def action_identity_residual(op: ScalarOperator, refl: ReflectionStructure, partition: RegionPartition,
                             f: np.ndarray, cfg: SolverConfig = SolverConfig(),
                             convention: str = "edge") -> ActionIdentity:
    """Compare ``<U_theta f, C f>_mu`` with twice the Euclidean action of ``u = C f``."""
    f = np.asarray(f)
    outside = np.flatnonzero((partition.labels != 1) & (f != 0))
    if outside.size:
        raise ValueError("f must be supported in Omega_+ (t >= h)")
    if not np.any(f):
        return ActionIdentity(0.0, 0.0, 0.0)
    u = covariance_apply(op, f, cfg)
    lhs = op.inner(f[refl.perm], u)
    rhs = 2.0 * region_energy(op, partition, u, convention)
    return ActionIdentity(lhs=float(lhs.real), rhs=rhs, residual=abs(lhs.real - rhs) / abs(lhs.real),
                          lhs_imag=float(lhs.imag))
