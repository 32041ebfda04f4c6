# Gamma matrices from a Pauli chain and the two-level spectrum of the A matrix.
import numpy as np

from rplab.clifford import a_matrix, clifford_residual, gamma_matrices

for d in range(1, 9):
    rep = gamma_matrices(d)
    print(f"d={d}: spinor dim {rep.spinor_dim:2d}, residual {clifford_residual(rep):.1e}")

print("d=1 irreducible:", gamma_matrices(1, irreducible=True).gammas)
print("d=2:\n", gamma_matrices(2).gammas[0].real, "\n", gamma_matrices(2).gammas[1])

rep = gamma_matrices(4)
rng = np.random.default_rng(0)
for _ in range(3):
    p, m = rng.standard_normal(3), rng.uniform(0.2, 2)
    r = a_matrix(rep, p, m)
    print(f"omega={r.omega:.4f}  eigenvalues {np.round(r.eigenvalues, 10)}  |Omega^2 - omega^2| {r.omega_sq_residual:.1e}")

print("d=2, p=3, m=4:", a_matrix(gamma_matrices(2), [3.0], 4.0).eigenvalues)
