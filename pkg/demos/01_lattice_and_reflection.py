# A small periodic lattice, the time reflection and the three regions it cuts out.
import numpy as np

from rplab.geometry import LatticeSpec, StaticMetric, build_lattice, build_reflection, measure_weights, partition_regions

geom = build_lattice(LatticeSpec(dims=2, extent=(8, 4), spacing=0.5))
refl = build_reflection(geom)
part = partition_regions(geom, refl)

# time labels run from -N0/2+1 to N0/2; the reflection sends t to -t
print("time labels:", np.unique(geom.t_index))
print("site grid of time labels:\n", geom.as_grid(geom.t_index))

# two fixed planes on a periodic axis: t = 0 and the antipodal t = N0/2
print("fixed planes:", np.unique(geom.t_index[refl.fixed]), "->", refl.fixed.size, "sites")
print("region sizes (+, 0, -):", part.omega_plus.size, part.sigma.size, part.omega_minus.size)

# the cell volume of a static metric does not depend on time, so it is reflection-even
metric = StaticMetric.cosine_lapse(geom, amplitude=0.5)
mu = measure_weights(geom, metric).mu
print("mu on one time slice:", mu[geom.t_index == 1])
print("mu is theta-even:", np.array_equal(mu, mu[refl.perm]))
