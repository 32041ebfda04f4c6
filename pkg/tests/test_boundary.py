import numpy as np
import pytest

from rplab.boundary import (
    BoundaryCovariances,
    dn_monotonicity,
    form_matrix,
    half_difference_residual,
    half_region,
    image_covariances,
    quotient_covariances,
)
from rplab.geometry import StaticMetric
from rplab.scalar import rp_gram
from conftest import dense_covariance, make_scalar


def _setup(dims, extent, **kw):
    geom, refl, part, op = make_scalar(dims, extent, **kw)
    return geom, refl, part, op, half_region(op, refl, part)


def test_half_region_layout():
    geom, refl, part, op, reg = _setup(1, [8])
    assert sorted(geom.t_index[reg.sites].tolist()) == [0, 1, 2, 3, 4]
    assert np.all(refl.perm[reg.sites[reg.boundary]] == reg.sites[reg.boundary])
    inner = reg.sites[reg.interior]
    assert not set(refl.perm[inner].tolist()) & set(reg.sites.tolist())
    assert np.allclose(reg.nu, np.where(reg.boundary, 0.5, 1.0))


def test_image_matches_dense_oracle(cfg):
    geom, refl, part, op, reg = _setup(1, [8])
    C = dense_covariance(op)
    y = reg.sites
    CD = C[np.ix_(y, y)] - C[np.ix_(refl.perm[y], y)]
    CN = C[np.ix_(y, y)] + C[np.ix_(refl.perm[y], y)]
    img = image_covariances(op, refl, reg, cfg)
    assert np.allclose(img.CN, CN, atol=1e-10)
    assert np.allclose(img.CD, CD, atol=1e-10)
    assert np.all(img.CD[reg.boundary, :] == 0.0)
    assert np.all(img.CD[:, reg.boundary] == 0.0)


def test_image_kernels_symmetric(cfg):
    geom, refl, part, op, reg = _setup(2, [8, 4], mass=0.6)
    img = image_covariances(op, refl, reg, cfg)
    assert np.max(np.abs(img.CD - img.CD.T)) <= 1e-10
    assert np.max(np.abs(img.CN - img.CN.T)) <= 1e-10


@pytest.mark.parametrize("metric", [None, lambda g: StaticMetric.cosine_lapse(g, 0.5)])
def test_quotient_equals_image(cfg, metric):
    geom, refl, part, op, reg = _setup(2, [8, 6], h=0.5, mass=0.7, metric=metric)
    img = image_covariances(op, refl, reg, cfg)
    quo = quotient_covariances(op, refl, reg, cfg)
    assert np.max(np.abs(img.CD - quo.CD)) <= 1e-8
    assert np.max(np.abs(img.CN - quo.CN)) <= 1e-8
    assert np.all(quo.CD[reg.boundary, :] == 0.0)


def test_neumann_preserves_constants(cfg):
    m = 0.5
    geom, refl, part, op, reg = _setup(2, [8, 4], mass=m)
    quo = quotient_covariances(op, refl, reg, cfg)
    assert np.allclose(quo.CN @ reg.nu, 1 / m**2, atol=1e-10)


def test_monotonicity(cfg):
    for kw in ({}, {"metric": lambda g: StaticMetric.cosine_lapse(g, 0.5)}):
        dims, ext = (1, [8]) if not kw else (2, [8, 6])
        geom, refl, part, op, reg = _setup(dims, ext, **kw)
        rep = dn_monotonicity(image_covariances(op, refl, reg, cfg))
        assert rep.passed and rep.min_eig >= -1e-10


def test_monotonicity_dimension_mismatch(cfg):
    geom, refl, part, op, reg = _setup(1, [8])
    img = image_covariances(op, refl, reg, cfg)
    bad = BoundaryCovariances(CD=img.CD[:-1, :-1], CN=img.CN, region=reg, construction="image")
    with pytest.raises(ValueError):
        dn_monotonicity(bad)


def test_half_difference(cfg, rng):
    geom, refl, part, op, reg = _setup(1, [8])
    img = image_covariances(op, refl, reg, cfg)
    assert half_difference_residual(op, refl, reg, img, cfg) <= 1e-10
    # quadratic form version on t >= h functions
    C = dense_covariance(op)
    f = np.zeros(reg.size)
    f[reg.interior] = rng.standard_normal(int(reg.interior.sum()))
    lhs = f @ form_matrix(img, img.CN - img.CD) @ f
    full = np.zeros(geom.n_sites)
    full[reg.sites] = f
    Uc = (C @ (full * op.mu))[refl.perm]
    rhs = 2 * np.sum(full * Uc * op.mu)
    assert abs(lhs - rhs) <= 1e-10 * abs(rhs)
    assert f @ form_matrix(img, img.CN - img.CD) @ np.zeros(reg.size) == 0.0


def test_consistency_with_scalar_gram(cfg):
    geom, refl, part, op, reg = _setup(2, [8, 6], mass=0.4, metric=lambda g: StaticMetric.cosine_lapse(g, 0.3))
    img = image_covariances(op, refl, reg, cfg)
    W = form_matrix(img, img.CN - img.CD)
    inner = reg.interior
    half = 0.5 * W[np.ix_(inner, inner)]
    gram = rp_gram(op, refl, reg.sites[inner], cfg, part)
    assert np.max(np.abs(half - gram.matrix)) <= 1e-8
    assert np.allclose(np.linalg.eigvalsh(half), gram.eigenvalues, atol=1e-8)
