import numpy as np
import pytest

from rplab.geometry import LatticeSpec, StaticMetric, build_lattice, build_reflection, partition_regions
from rplab.linalg import SolverConfig
from rplab.scalar import PotentialField, assemble_operator


def make_lattice(dims, extent, h=1.0):
    geom = build_lattice(LatticeSpec(dims, tuple(extent), h))
    refl = build_reflection(geom)
    return geom, refl, partition_regions(geom, refl)


def make_scalar(dims, extent, h=1.0, mass=1.0, metric=None, xi=0.0, R=None):
    geom, refl, part = make_lattice(dims, extent, h)
    metric = metric(geom) if callable(metric) else (metric or StaticMetric.flat(geom))
    op = assemble_operator(geom, metric, PotentialField.from_curvature(geom, mass, xi, R))
    return geom, refl, part, op


def dense_covariance(op):
    """Kernel oracle: ``C(x, y) = [L^{-1}]_{xy} / mu(y)`` from a dense inverse."""
    return np.linalg.inv(op.dense()) / op.mu[None, :]


@pytest.fixture
def cfg():
    return SolverConfig(tolerance=1e-12)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
