"""Euclidean Dirac propagator on a flat periodic lattice and its reflection form.

Conventions
-----------
``D = sum_j gamma_j d_j`` with central differences ``d_j``; a constant lapse
``F`` rescales the time links by ``1/sqrt(F)``.  ``D`` is anti-Hermitian.
The twisted reflection is ``theta = gamma_0 (x) eps`` with ``eps: t -> -t``.

Orientation: for ``f`` supported at ``t > 0``,

    <theta f, (D - m)^{-1} f> = - sum_{t=0} |u|^2 / sqrt(F) <= 0,   u = (D - m)^{-1} f,

so the positive (reflection-positive) form on positive-time data is

    (f, g)_D = <theta f, (m - D)^{-1} g> = - <theta f, (D - m)^{-1} g>.

Every Gram matrix in this module is of ``(., .)_D``; the raw propagator value
is reported next to it where both appear.  In momentum space the form has
kernel ``c * B(p) / omega`` with ``B = omega + eta.p + m gamma_0`` (the
A-matrix at mass ``-m``) and ``c = h^2 / (2 V_space)`` for the spatial
transform ``f^(p) = h^{d-1} sum_x f(x) exp(-i p.x)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .clifford import CliffordRep, a_operator
from .geometry import LatticeGeometry, RegionPartition, ReflectionStructure, partition_regions
from .linalg import GramReport, SolverConfig, cg_solve, map_columns


@dataclass(frozen=True, eq=False)
class DiracOperator:
    geometry: LatticeGeometry
    rep: CliffordRep
    lapse: float
    matrix: sp.csr_matrix

    @property
    def spinor_dim(self) -> int:
        return self.rep.spinor_dim

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def normal(self, m: float) -> sp.csr_matrix:
        """``(D - m)^dagger (D - m) = m^2 - D^2``."""
        return self._normal(float(m))

    @cached_property
    def _squared(self) -> sp.csr_matrix:
        return (self.matrix @ self.matrix).tocsr()

    def _normal(self, m: float) -> sp.csr_matrix:
        return (m * m * sp.identity(self.size, format="csr") - self._squared).tocsr()

    def field(self, values: np.ndarray) -> np.ndarray:
        """Flatten a ``(n_sites, spinor)`` or lattice-shaped spinor array to a DOF vector."""
        return np.asarray(values).reshape(-1)


def _central_difference(geom: LatticeGeometry, axis: int) -> sp.csr_matrix:
    n = geom.n_sites
    s = np.arange(n)
    h = geom.spacing
    fwd = sp.csr_matrix((np.ones(n), (s, geom.forward[axis])), shape=(n, n))
    bwd = sp.csr_matrix((np.ones(n), (s, geom.backward[axis])), shape=(n, n))
    return ((fwd - bwd) / (2 * h)).tocsr()


def assemble_dirac(geom: LatticeGeometry, rep: CliffordRep, lapse: float = 1.0) -> DiracOperator:
    if rep.d != geom.dims:
        raise ValueError(f"Clifford rep has d={rep.d} but the lattice has {geom.dims} axes")
    if not all(geom.spec.periodic):
        raise ValueError("the lattice Dirac operator needs every axis periodic")
    if not lapse > 0:
        raise ValueError(f"lapse F must be positive, got {lapse}")
    D = None
    for j in range(geom.dims):
        dj = _central_difference(geom, j)
        if j == 0:
            dj = dj / np.sqrt(lapse)
        term = sp.kron(dj, sp.csr_matrix(rep.gammas[j]), format="csr")
        D = term if D is None else D + term
    D = D.tocsr()
    D.eliminate_zeros()
    return DiracOperator(geometry=geom, rep=rep, lapse=float(lapse), matrix=D)


@dataclass(frozen=True, eq=False)
class ThetaOperator:
    perm: np.ndarray
    gamma0: np.ndarray
    matrix: sp.csr_matrix

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.matrix @ f


def theta_map(geom: LatticeGeometry, refl: ReflectionStructure, rep: CliffordRep) -> ThetaOperator:
    n = geom.n_sites
    P = sp.csr_matrix((np.ones(n), (np.arange(n), refl.perm)), shape=(n, n))
    T = sp.kron(P, sp.csr_matrix(rep.gamma0), format="csr")
    return ThetaOperator(perm=refl.perm, gamma0=rep.gamma0, matrix=T)


def anticommutation_residual(dirac: DiracOperator, theta: ThetaOperator) -> float:
    A = (theta.matrix @ dirac.matrix + dirac.matrix @ theta.matrix).tocoo()
    return float(np.max(np.abs(A.data))) if A.nnz else 0.0


def propagator_apply(dirac: DiracOperator, m: float, f: np.ndarray, cfg: SolverConfig = SolverConfig()):
    """Solve ``(D - m) u = f``; returns ``(u, relative residual)``.

    Uses ``(D - m)^{-1} = -(D + m)(m^2 - D^2)^{-1}``: CG on the Hermitian
    positive definite normal operator, whose residual is exactly the residual
    of the original system.
    """
    if not m > 0:
        raise ValueError("mass must be positive")
    f = np.asarray(f, dtype=complex)
    w, rel = cg_solve(dirac.normal(m), f, cfg, what="Dirac solve")
    u = -(dirac.matrix @ w + m * w)
    return u, rel


def positive_time_dofs(dirac: DiracOperator, partition: RegionPartition,
                       t_max: Optional[int] = None) -> np.ndarray:
    """DOF indices (site-major, spinor-minor) of every site in Omega_+, optionally up to label ``t_max``."""
    sites = partition.omega_plus
    if t_max is not None:
        sites = sites[dirac.geometry.t_index[sites] <= t_max]
    s = dirac.spinor_dim
    return (sites[:, None] * s + np.arange(s)[None, :]).reshape(-1)


def _basis_columns(dirac: DiracOperator, basis) -> np.ndarray:
    basis = np.asarray(basis)
    if basis.ndim == 1:
        E = np.zeros((dirac.size, basis.size), dtype=complex)
        E[basis.astype(np.int64), np.arange(basis.size)] = 1.0
        return E
    if basis.shape[0] != dirac.size:
        raise ValueError(f"basis columns have length {basis.shape[0]}, expected {dirac.size}")
    return basis.astype(complex)


def _check_support(dirac: DiracOperator, E: np.ndarray, partition: RegionPartition) -> None:
    s = dirac.spinor_dim
    site_mass = np.abs(E).reshape(dirac.geometry.n_sites, s, -1).sum(axis=(1, 2))
    bad = np.flatnonzero((site_mass > 0) & (partition.labels != 1))
    if bad.size:
        raise ValueError(f"basis touches sites {bad[:5].tolist()} outside Omega_+ (need t >= h)")


def dirac_gram_lattice(dirac: DiracOperator, m: float, theta: ThetaOperator, basis,
                       cfg: SolverConfig = SolverConfig(),
                       partition: Optional[RegionPartition] = None) -> GramReport:
    """``M_ab = <theta f_a, (m - D)^{-1} f_b> h^d``.

    ``basis`` is either an integer array of DOF indices (point deltas) or a
    ``(n_dof, k)`` array of basis vectors; all must live in Omega_+.
    """
    geom = dirac.geometry
    if partition is None:
        fixed = np.flatnonzero(theta.perm == np.arange(geom.n_sites))
        partition = partition_regions(geom, ReflectionStructure(axis=0, perm=theta.perm, fixed=fixed))
    E = _basis_columns(dirac, basis)
    _check_support(dirac, E, partition)
    out = map_columns(lambda b: propagator_apply(dirac, m, E[:, b], cfg), E.shape[1], cfg.workers)
    U = np.stack([u for u, _ in out], axis=1) if out else np.zeros((dirac.size, 0), dtype=complex)
    res = np.array([r for _, r in out])
    TE = theta.matrix @ E
    vol = geom.spacing**geom.dims
    M = -(TE.conj().T @ U) * vol
    return GramReport(matrix=M, basis=f"Dirac form on {E.shape[1]} positive-time vectors", solver_residuals=res)


# --- semi-analytic (continuous time, spatial torus) path -------------------------------------


@dataclass(frozen=True, eq=False)
class MomentumGrid:
    spatial_shape: tuple
    spacing: float
    mass: float
    n_times: int
    p: np.ndarray  # (n_modes, d-1)
    omega: np.ndarray  # (n_modes,)

    @property
    def times(self) -> np.ndarray:
        return self.spacing * np.arange(1, self.n_times + 1)

    @property
    def n_modes(self) -> int:
        return self.omega.size

    @property
    def spatial_volume(self) -> float:
        return float(np.prod([n * self.spacing for n in self.spatial_shape]))

    @property
    def normalization(self) -> float:
        """``c`` in ``M = c sum_p g_a^dagger (B / omega) g_b``."""
        return self.spacing**2 / (2.0 * self.spatial_volume)


def build_momentum_grid(spatial_shape, spacing: float, mass: float, n_times: int) -> MomentumGrid:
    """Torus modes ``2 pi k / (N h)`` in FFT order, with ``omega = sqrt(p^2 + m^2)``."""
    spatial_shape = tuple(int(n) for n in spatial_shape)
    if not mass > 0:
        raise ValueError("mass must be positive")
    if not spacing > 0 or n_times < 1:
        raise ValueError("need spacing > 0 and at least one positive time")
    axes = [2 * np.pi * np.fft.fftfreq(n, d=spacing) for n in spatial_shape]
    if axes:
        p = np.stack([a.reshape(-1) for a in np.meshgrid(*axes, indexing="ij")], axis=1)
    else:
        p = np.zeros((1, 0))
    omega = np.sqrt(np.sum(p**2, axis=1) + mass**2)
    return MomentumGrid(spatial_shape=spatial_shape, spacing=float(spacing), mass=float(mass),
                        n_times=int(n_times), p=p, omega=omega)


def spatial_dft(grid: MomentumGrid, f: np.ndarray) -> np.ndarray:
    """``(..., n_times, *spatial, s) -> (..., n_times, n_modes, s)``, ``h^{d-1} sum_x f e^{-ipx}``."""
    f = np.asarray(f, dtype=complex)
    ns = len(grid.spatial_shape)
    lead = f.ndim - ns - 1
    if f.shape[lead:lead + ns] != grid.spatial_shape:
        raise ValueError(f"spatial shape {f.shape[lead:lead + ns]} does not match grid {grid.spatial_shape}")
    if ns:
        f = np.fft.fftn(f, axes=tuple(range(lead, lead + ns)))
    scale = grid.spacing**ns
    return (f * scale).reshape(f.shape[:lead] + (grid.n_modes, f.shape[-1]))


def kernel_matrices(grid: MomentumGrid, rep: CliffordRep) -> np.ndarray:
    """``B(p) / omega(p)`` per mode, shape ``(n_modes, s, s)``; PSD with spectrum ``{0, 2}``."""
    if rep.d != len(grid.spatial_shape) + 1:
        raise ValueError("Clifford dimension does not match the grid")
    B = np.stack([a_operator(rep, p, -grid.mass) for p in grid.p])
    return B / grid.omega[:, None, None]


def _time_collapse(grid: MomentumGrid, fhat: np.ndarray) -> np.ndarray:
    """``g(p) = sum_i exp(-t_i omega) f^(t_i, p)``."""
    if fhat.shape[-3] != grid.n_times:
        raise ValueError(f"expected {grid.n_times} time slices, got {fhat.shape[-3]}")
    decay = np.exp(-grid.times[:, None] * grid.omega[None, :])  # (n_times, n_modes)
    return np.einsum("tp,...tps->...ps", decay, fhat)


def dirac_gram_momentum(grid: MomentumGrid, rep: CliffordRep, m: float, fhat: np.ndarray) -> GramReport:
    """Gram of ``(., .)_D`` from spatial transforms ``fhat`` of shape ``(k, n_times, n_modes, s)``."""
    if not np.isclose(m, grid.mass):
        raise ValueError(f"mass {m} differs from the grid mass {grid.mass}")
    fhat = np.asarray(fhat, dtype=complex)
    if fhat.ndim == 3:
        fhat = fhat[None]
    g = _time_collapse(grid, fhat)  # (k, n_modes, s)
    K = kernel_matrices(grid, rep)
    M = grid.normalization * np.einsum("aps,pst,bpt->ab", g.conj(), K, g)
    return GramReport(matrix=M, basis=f"momentum Gram on {fhat.shape[0]} functions")


def square_form_value(grid: MomentumGrid, rep: CliffordRep, m: float, f: np.ndarray) -> float:
    """``c sum_p |(B/omega)^{1/2} g(p)|^2`` for one function ``f`` of shape ``(n_times, *spatial, s)``."""
    if not np.isclose(m, grid.mass):
        raise ValueError(f"mass {m} differs from the grid mass {grid.mass}")
    g = _time_collapse(grid, spatial_dft(grid, f))
    K = kernel_matrices(grid, rep)
    w, V = np.linalg.eigh(K)
    root = np.einsum("pij,pj,pkj->pik", V, np.sqrt(np.clip(w, 0.0, None)), V.conj())
    v = np.einsum("pij,pj->pi", root, g)
    return float(grid.normalization * np.sum(np.abs(v) ** 2))


def positive_time_block(dirac: DiracOperator, partition: RegionPartition, grid: MomentumGrid,
                        vec: np.ndarray) -> np.ndarray:
    """Cut a lattice DOF vector to the grid layout ``(n_times, *spatial, s)`` (times h .. n_times h)."""
    geom = dirac.geometry
    arr = np.asarray(vec).reshape(geom.shape + (dirac.spinor_dim,))
    k0 = np.arange(1, grid.n_times + 1) + geom.shape[0] // 2 - 1
    return arr[k0]


# --- potential-theory identity ------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryTermReport:
    gram_value: float  # (f, f)_D
    boundary_value: float  # sum over t = 0 of <g0 u, sqrt(F) g0 u> h^{d-1}, g0 = gamma_0 / sqrt(F)
    gap: float  # |gram - boundary| / |gram|
    propagator_value: complex  # <theta f, (D - m)^{-1} f> h^d = -gram_value
    residual: float
    antipodal_value: float = 0.0  # the same flux through the far fixed plane t = N0 h / 2
    closed_gap: float = 0.0  # gap once the far plane is included with its opposite sign


def boundary_value(dirac: DiracOperator, u: np.ndarray, lapse: Optional[float] = None,
                   plane: int = 0) -> float:
    """Flux through the fixed plane with time label ``plane`` (default ``t = 0``).

    The coordinate Clifford generator for ``dt`` is ``gamma_0 / sqrt(F)``, so
    ``<gamma^0 u, sqrt(F) gamma^0 u> = |u|^2 / sqrt(F)``.
    """
    geom = dirac.geometry
    F = dirac.lapse if lapse is None else float(lapse)
    sites = np.flatnonzero(geom.t_index == plane)
    uu = np.asarray(u).reshape(geom.n_sites, dirac.spinor_dim)[sites]
    g0 = dirac.rep.gamma0 / np.sqrt(F)
    v = uu @ g0.T
    return float(np.sqrt(F) * np.sum(np.abs(v) ** 2) * geom.spacing ** (geom.dims - 1))


def boundary_term_check(dirac: DiracOperator, m: float, theta: ThetaOperator, f: np.ndarray,
                        cfg: SolverConfig = SolverConfig()) -> BoundaryTermReport:
    """Compare ``(f, f)_D`` with the boundary flux of ``u = (D - m)^{-1} f``.

    Only ``u`` enters the boundary term; the mass acts through the solve alone.
    On a periodic time axis the far fixed plane contributes with the opposite
    sign; ``gap`` ignores it (fine when the time extent is long against
    ``1/m``), ``closed_gap`` accounts for it.
    """
    geom = dirac.geometry
    labels = np.zeros(geom.n_sites, dtype=int)
    t = geom.t_index
    labels[(t > 0) & (t < geom.shape[0] // 2)] = 1
    f = np.asarray(f, dtype=complex).reshape(-1)
    site_has = np.abs(f).reshape(geom.n_sites, -1).sum(axis=1) > 0
    if np.any(site_has & (labels != 1)):
        raise ValueError("f must be supported at t >= h")
    u, rel = propagator_apply(dirac, m, f, cfg)
    raw = np.vdot(theta.apply(f), u) * geom.spacing**geom.dims
    gram = -raw.real
    bval = boundary_value(dirac, u)
    far = boundary_value(dirac, u, plane=geom.shape[0] // 2)
    if gram != 0:
        gap, closed = abs(gram - bval) / abs(gram), abs(gram - bval + far) / abs(gram)
    else:
        gap, closed = abs(bval), abs(bval - far)
    return BoundaryTermReport(gram_value=float(gram), boundary_value=bval, gap=float(gap),
                              propagator_value=complex(raw), residual=rel,
                              antipodal_value=far, closed_gap=float(closed))


# --- p0 integrals behind the time dependence ----------------------------------------------


def contour_kernel(t: float, omega: float) -> tuple:
    """Closed forms of ``int exp(-i p0 t) / (p0^2 + w^2) dp0`` and of the same with a factor ``p0``.

    The second integral is ``-i pi sign(t) exp(-|t| w)``; at ``t = 0`` it is
    only defined as a principal value, which vanishes.
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    e = np.exp(-abs(t) * omega)
    return np.pi * e / omega, -1j * np.pi * np.sign(t) * e


def contour_quadrature(t: float, omega: float) -> tuple:
    """The same two integrals by adaptive Fourier quadrature on the half line."""
    import warnings

    from scipy.integrate import IntegrationWarning, quad

    if not omega > 0:
        raise ValueError("omega must be positive")
    w2 = omega * omega
    with warnings.catch_warnings():
        # QAWF reports slow cycles for these tails even when converged
        warnings.simplefilter("ignore", IntegrationWarning)
        if t == 0:
            i0 = 2 * quad(lambda p: 1.0 / (p * p + w2), 0, np.inf, epsabs=0, epsrel=1e-12)[0]
            # symmetric cut-off: the principal value of the odd integrand
            cut = 1e6 * omega
            i1 = quad(lambda p: p / (p * p + w2), -cut, cut, points=[0.0], limit=200)[0]
            return i0, -1j * i1
        a = abs(t)
        i0 = 2 * quad(lambda p: 1.0 / (p * p + w2), 0, np.inf, weight="cos", wvar=a, epsabs=1e-14)[0]
        # odd integrand: only -i p0 sin(p0 t) survives
        s = 2 * quad(lambda p: p / (p * p + w2), 0, np.inf, weight="sin", wvar=a, epsabs=1e-14)[0]
    return i0, -1j * np.sign(t) * s
