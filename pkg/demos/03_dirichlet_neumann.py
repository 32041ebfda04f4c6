# Dirichlet and Neumann covariances on the half lattice, built two independent ways.
import numpy as np

from rplab.boundary import (dn_monotonicity, form_matrix, half_difference_residual, half_region,
                            image_covariances, quotient_covariances)
from rplab.geometry import LatticeSpec, StaticMetric, build_lattice, build_reflection, partition_regions
from rplab.linalg import SolverConfig
from rplab.scalar import PotentialField, assemble_operator, rp_gram

cfg = SolverConfig()
geom = build_lattice(LatticeSpec(2, (16, 8)))
refl = build_reflection(geom)
part = partition_regions(geom, refl)
op = assemble_operator(geom, StaticMetric.cosine_lapse(geom, 0.5), PotentialField.from_curvature(geom, 0.5))
region = half_region(op, refl, part)
print("half region:", region.size, "sites,", int(region.boundary.sum()), "on the fixed planes")

img = image_covariances(op, refl, region, cfg)    # C(x,y) -/+ C(theta x, y)
quo = quotient_covariances(op, refl, region, cfg)  # L inverted on odd / even functions
print("image vs quotient, CD:", np.abs(img.CD - quo.CD).max(), " CN:", np.abs(img.CN - quo.CN).max())
print("U C - (CN - CD)/2:", half_difference_residual(op, refl, region, img, cfg))

mono = dn_monotonicity(img)
print(f"CD <= CN: min eigenvalue of CN - CD is {mono.min_eig:.2e} -> {'PASS' if mono.passed else 'FAIL'}")

# half of CN - CD on t >= h is exactly the scalar reflection Gram
W = 0.5 * form_matrix(img, img.CN - img.CD)
inner = region.interior
gram = rp_gram(op, refl, region.sites[inner], cfg, part)
print("consistency with the scalar Gram:", np.abs(W[np.ix_(inner, inner)] - gram.matrix).max())
