"""Reflection-symmetric lattices standing in for a static Riemannian manifold.

Sites are enumerated row-major over integer coordinates.  Along axis 0 (time)
the integer index ``k`` maps to the time label ``k - N0/2 + 1`` so that the
reflection ``t -> -t`` is a permutation of sites whose fixed set is the
``t = 0`` plane (plus the antipodal plane ``t = N0/2`` on the periodic axis).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class LatticeSpec:
    dims: int
    extent: tuple
    spacing: float = 1.0
    periodic: Optional[tuple] = None

    def __post_init__(self):
        extent = tuple(int(n) for n in self.extent)
        object.__setattr__(self, "extent", extent)
        if self.dims < 1 or len(extent) != self.dims:
            raise ValueError(f"extent {extent} does not match dims={self.dims}")
        if any(n < 2 for n in extent):
            raise ValueError(f"every axis needs at least 2 sites, got extent={extent}")
        if extent[0] % 2:
            raise ValueError(f"time axis needs an even site count, got N0={extent[0]}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        periodic = self.periodic
        if periodic is None:
            periodic = (True,) * self.dims
        periodic = tuple(bool(p) for p in periodic)
        if len(periodic) != self.dims:
            raise ValueError("periodic flags must have one entry per axis")
        if not periodic[0]:
            # only the periodic site-centred reflection is modelled
            raise ValueError("axis 0 must be periodic")
        object.__setattr__(self, "periodic", periodic)


@dataclass(frozen=True, eq=False)
class LatticeGeometry:
    """Site enumeration, integer coordinates and per-axis neighbour tables.

    ``forward[j][s]`` is the site one step along axis ``j`` from ``s`` (``-1``
    when an open axis ends), ``backward[j][s]`` likewise in the other direction.
    """

    spec: LatticeSpec
    coords: np.ndarray  # (n_sites, d) integer labels, axis 0 already shifted
    forward: tuple
    backward: tuple
    spatial_index: np.ndarray  # flat index into the spatial grid, per site

    @property
    def dims(self) -> int:
        return self.spec.dims

    @property
    def shape(self) -> tuple:
        return self.spec.extent

    @property
    def spatial_shape(self) -> tuple:
        return self.spec.extent[1:]

    @property
    def spacing(self) -> float:
        return self.spec.spacing

    @property
    def n_sites(self) -> int:
        return self.coords.shape[0]

    @property
    def t_index(self) -> np.ndarray:
        return self.coords[:, 0]

    @property
    def t(self) -> np.ndarray:
        return self.coords[:, 0] * self.spacing

    @property
    def positions(self) -> np.ndarray:
        return self.coords * self.spacing

    def neighbors(self, s: int) -> list:
        out = []
        for j in range(self.dims):
            for table in (self.forward[j], self.backward[j]):
                if table[s] >= 0:
                    out.append(int(table[s]))
        return out

    def site(self, label: Sequence[int]) -> int:
        """Site index from coordinate labels (time label for axis 0)."""
        label = list(label)
        k0 = label[0] + self.shape[0] // 2 - 1
        idx = np.ravel_multi_index([k0 % self.shape[0]] + label[1:], self.shape)
        return int(idx)

    def as_grid(self, values: np.ndarray) -> np.ndarray:
        """Reshape a per-site array (optionally with trailing dims) to the lattice shape."""
        return np.asarray(values).reshape(self.shape + np.shape(values)[1:])


@dataclass(frozen=True, eq=False)
class StaticMetric:
    """Lapse-squared ``F`` and diagonal spatial metric ``G`` on the spatial grid.

    ``F`` has the spatial shape, ``G`` has shape ``(d-1,) + spatial shape``.
    Neither depends on time, which is what makes the reflection an isometry.
    """

    F: np.ndarray
    G: np.ndarray

    @classmethod
    def flat(cls, geom: LatticeGeometry, lapse: float = 1.0) -> "StaticMetric":
        sshape = geom.spatial_shape
        return cls(F=np.full(sshape, float(lapse)), G=np.ones((geom.dims - 1,) + sshape))

    @classmethod
    def cosine_lapse(cls, geom: LatticeGeometry, amplitude: float = 0.5, axis: int = 1) -> "StaticMetric":
        """``F(x) = 1 + amplitude * cos(2 pi x_axis / N_axis)``, flat ``G``."""
        if geom.dims < 2:
            raise ValueError("cosine lapse needs at least one spatial axis")
        if not abs(amplitude) < 1:
            raise ValueError("|amplitude| must be < 1 to keep F positive")
        sshape = geom.spatial_shape
        n = geom.shape[axis]
        x = np.arange(n).reshape([-1 if a == axis - 1 else 1 for a in range(len(sshape))])
        F = np.broadcast_to(1.0 + amplitude * np.cos(2 * np.pi * x / n), sshape).copy()
        return cls(F=F, G=np.ones((geom.dims - 1,) + sshape))

    def check(self, geom: LatticeGeometry) -> None:
        F = np.asarray(self.F, dtype=float)
        G = np.asarray(self.G, dtype=float)
        if F.shape != geom.spatial_shape:
            raise ValueError(f"F has shape {F.shape}, expected {geom.spatial_shape}")
        if G.shape != (geom.dims - 1,) + geom.spatial_shape:
            raise ValueError(f"G has shape {G.shape}, expected {(geom.dims - 1,) + geom.spatial_shape}")
        if not np.all(F > 0):
            raise ValueError("lapse F must be positive everywhere")
        if not np.all(G > 0):
            raise ValueError("spatial metric entries G_aa must be positive everywhere")

    def site_F(self, geom: LatticeGeometry) -> np.ndarray:
        return np.asarray(self.F, dtype=float).reshape(-1)[geom.spatial_index]

    def site_G(self, geom: LatticeGeometry) -> np.ndarray:
        """Per-site ``G_aa`` as an ``(n_sites, d-1)`` array."""
        G = np.asarray(self.G, dtype=float).reshape(geom.dims - 1, -1)
        return G[:, geom.spatial_index].T


@dataclass(frozen=True, eq=False)
class ReflectionStructure:
    axis: int
    perm: np.ndarray
    fixed: np.ndarray  # sorted site indices with perm[s] == s

    def matrix(self):
        import scipy.sparse as sp

        n = self.perm.size
        # (U f)(s) = f(theta s)
        return sp.csr_matrix((np.ones(n), (np.arange(n), self.perm)), shape=(n, n))


@dataclass(frozen=True, eq=False)
class RegionPartition:
    omega_plus: np.ndarray
    omega_minus: np.ndarray
    sigma: np.ndarray
    labels: np.ndarray = field(repr=False)  # +1, 0, -1 per site


@dataclass(frozen=True, eq=False)
class MeasureField:
    mu: np.ndarray


def build_lattice(spec: LatticeSpec) -> LatticeGeometry:
    shape = spec.extent
    d = spec.dims
    grid = np.indices(shape).reshape(d, -1).T
    coords = grid.copy()
    coords[:, 0] = grid[:, 0] - shape[0] // 2 + 1
    n = grid.shape[0]
    forward, backward = [], []
    for j in range(d):
        for step, store in ((1, forward), (-1, backward)):
            moved = grid.copy()
            moved[:, j] += step
            if spec.periodic[j]:
                moved[:, j] %= shape[j]
                nb = np.ravel_multi_index(moved.T, shape)
            else:
                ok = (moved[:, j] >= 0) & (moved[:, j] < shape[j])
                nb = np.full(n, -1, dtype=np.int64)
                nb[ok] = np.ravel_multi_index(moved[ok].T, shape)
            store.append(_frozen(nb.astype(np.int64)))
    if d > 1:
        spatial = np.ravel_multi_index(grid[:, 1:].T, shape[1:])
    else:
        spatial = np.zeros(n, dtype=np.int64)
    return LatticeGeometry(
        spec=spec,
        coords=_frozen(coords),
        forward=tuple(forward),
        backward=tuple(backward),
        spatial_index=_frozen(np.asarray(spatial, dtype=np.int64)),
    )


def build_reflection(geom: LatticeGeometry) -> ReflectionStructure:
    N0 = geom.shape[0]
    grid = geom.coords.copy()
    # label -> index is k = label + N0/2 - 1, wrapped on the periodic axis
    grid[:, 0] = (-geom.t_index + N0 // 2 - 1) % N0
    perm = np.ravel_multi_index(grid.T, geom.shape).astype(np.int64)
    assert np.array_equal(perm[perm], np.arange(geom.n_sites)), "reflection is not an involution"
    fixed = np.flatnonzero(perm == np.arange(geom.n_sites))
    return ReflectionStructure(axis=0, perm=_frozen(perm), fixed=_frozen(fixed))


def partition_regions(geom: LatticeGeometry, refl: ReflectionStructure) -> RegionPartition:
    N0 = geom.shape[0]
    t = geom.t_index
    labels = np.zeros(geom.n_sites, dtype=np.int8)
    plus = (t > 0) & (t < N0 // 2)
    labels[plus] = 1
    labels[refl.perm[plus]] = -1
    sigma = refl.fixed
    omega_plus = np.flatnonzero(plus)
    omega_minus = np.flatnonzero(labels == -1)
    return RegionPartition(
        omega_plus=_frozen(omega_plus),
        omega_minus=_frozen(omega_minus),
        sigma=_frozen(np.asarray(sigma)),
        labels=_frozen(labels),
    )


def measure_weights(geom: LatticeGeometry, metric: StaticMetric) -> MeasureField:
    """Riemannian cell volume ``sqrt(F det G) h^d`` per site."""
    metric.check(geom)
    F = metric.site_F(geom)
    detG = np.prod(metric.site_G(geom), axis=1) if geom.dims > 1 else np.ones(geom.n_sites)
    mu = np.sqrt(F * detG) * geom.spacing ** geom.dims
    return MeasureField(mu=_frozen(mu))
