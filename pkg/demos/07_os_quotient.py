# From a positive reflection Gram to an orthonormal one-particle basis.
import numpy as np

from rplab.geometry import LatticeSpec, StaticMetric, build_lattice, build_reflection, partition_regions
from rplab.linalg import GramReport, SolverConfig
from rplab.quantization import ReflectionPositivityError, one_particle_norm, os_quotient, quotient_gram
from rplab.scalar import PotentialField, assemble_operator, positive_time_sites, rp_gram

geom = build_lattice(LatticeSpec(2, (12, 6)))
refl = build_reflection(geom)
part = partition_regions(geom, refl)
op = assemble_operator(geom, StaticMetric.flat(geom), PotentialField.from_curvature(geom, 0.7))

for t_max in (1, 2, 3, 5):
    sites = positive_time_sites(part, t_max, geom)
    gram = rp_gram(op, refl, sites, SolverConfig(), part)
    h = os_quotient(gram)
    G = quotient_gram(gram, h)
    print(f"t <= {t_max}: basis {h.size:3d}, rank {h.rank:3d}, null {h.null_dim:3d}, "
          f"|Q^T M Q - I| {np.abs(G - np.eye(h.rank)).max():.1e}")

c = np.random.default_rng(3).standard_normal(gram.size)
print("norm of a random section:", one_particle_norm(gram, c))

# a Gram with a genuinely negative direction is refused
bad = GramReport(matrix=np.diag([1.0, 0.2, -1e-3]), basis="fixture")
try:
    os_quotient(bad)
except ReflectionPositivityError as exc:
    print("refused:", exc)
