# Reflection positivity of the scalar covariance on a flat torus and on a static metric.
import numpy as np

from rplab.geometry import LatticeSpec, StaticMetric, build_lattice, build_reflection, partition_regions
from rplab.linalg import SolverConfig
from rplab.scalar import PotentialField, assemble_operator, reflection_commutation_residual, rp_gram

cfg = SolverConfig.from_env(tolerance=1e-12)

geom = build_lattice(LatticeSpec(2, (16, 16)))
refl = build_reflection(geom)
part = partition_regions(geom, refl)

for m in (0.2, 1.0):
    op = assemble_operator(geom, StaticMetric.flat(geom), PotentialField.from_curvature(geom, m))
    gram = rp_gram(op, refl, part.omega_plus, cfg, part)
    print(f"flat, m={m}: {gram.size} deltas, hermiticity {gram.hermiticity:.1e}, min eig {gram.min_eig:.2e}")
    print("   five largest eigenvalues:", np.round(gram.eigenvalues[-5:], 5))

# a cosine lapse and a curvature term m^2 + xi R that stays positive
geom = build_lattice(LatticeSpec(2, (16, 12), spacing=0.5))
refl = build_reflection(geom)
part = partition_regions(geom, refl)
R = np.cos(2 * np.pi * np.arange(12) / 12)
pot = PotentialField.from_curvature(geom, 1.0, xi=0.5, R=R)
op = assemble_operator(geom, StaticMetric.cosine_lapse(geom, 0.5), pot)
print("commutator with the reflection:", reflection_commutation_residual(op, refl))
gram = rp_gram(op, refl, part.omega_plus, cfg, part)
print(f"curved: min V {pot.V.min():.2f}, min Gram eigenvalue {gram.min_eig:.2e}")

# dropping below the curvature bound is refused up front
try:
    PotentialField.from_curvature(geom, 0.5, xi=1.0, R=R)
except ValueError as exc:
    print("refused:", exc)
