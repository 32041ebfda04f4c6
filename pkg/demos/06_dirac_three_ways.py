# The Dirac reflection form from the lattice, from momentum space and from the boundary flux.
import numpy as np

from rplab.clifford import gamma_matrices
from rplab.dirac import (anticommutation_residual, assemble_dirac, boundary_term_check, build_momentum_grid,
                         contour_kernel, contour_quadrature, dirac_gram_lattice, positive_time_block,
                         positive_time_dofs, square_form_value, theta_map)
from rplab.geometry import build_reflection, partition_regions
from rplab.linalg import SolverConfig
from rplab.studies import boxed_lattice, dirac_boundary_study, gaussian_source

cfg = SolverConfig()
m = 1.0
rep = gamma_matrices(2)

# the p0 integrals behind the time dependence
for t, w in [(0.0, 2.0), (1.0, 1.0)]:
    print(f"t={t}, omega={w}: closed {contour_kernel(t, w)}, quadrature {contour_quadrature(t, w)}")

# 1. lattice: structure is exact, the spectrum sees the doublers
geom = boxed_lattice(2, 1.0, 8.0, 8.0)
refl = build_reflection(geom)
part = partition_regions(geom, refl)
D = assemble_dirac(geom, rep)
theta = theta_map(geom, refl, rep)
print("{theta, D} residual:", anticommutation_residual(D, theta))
g = dirac_gram_lattice(D, m, theta, positive_time_dofs(D, part), cfg, part)
print(f"lattice Gram: hermiticity {g.hermiticity:.1e}, spectrum range [{g.eigenvalues[0]:.3f}, {g.eigenvalues[-1]:.3f}]")

# 2 and 3. one smooth source, refined; the momentum square form is the continuum-time value
spinor = np.array([1.0, 0.5j])
print("   h     lattice form   momentum form  boundary flux")
for h in (0.25, 0.125, 0.0625):
    geom = boxed_lattice(2, h, 12.0, 4.0)
    refl = build_reflection(geom)
    part = partition_regions(geom, refl)
    D = assemble_dirac(geom, rep)
    theta = theta_map(geom, refl, rep)
    f = (gaussian_source(geom, 1.5, 0.3)[:, None] * spinor[None, :]).reshape(-1)
    r = boundary_term_check(D, m, theta, f, cfg)
    grid = build_momentum_grid(geom.spatial_shape, h, m, geom.shape[0] // 2 - 1)
    sq = square_form_value(grid, rep, m, positive_time_block(D, part, grid, f))
    print(f"{h:7.4f}  {r.gram_value:.7f}   {sq:.7f}   {r.boundary_value:.7f}")

# a constant lapse rescales time; the flux picks up sqrt(F) (gamma^0)^2 = 1/sqrt(F)
for F in (1.0, 4.0):
    s = dirac_boundary_study([0.25, 0.125, 0.0625], lapse=F)
    print(f"F={F}: gaps {np.round(s.gaps, 5)}, reduction {np.round(s.factors, 2)}")
