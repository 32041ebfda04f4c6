# The reflection form as twice a Euclidean action, checked under refinement.
import numpy as np

from rplab.studies import action_study

spacings = [0.5, 0.25, 0.125, 0.0625]

# edge ownership: edges inside the closed negative half, half weight across the plane
edge = action_study(spacings, convention="edge")
print(" h        <f,Cf>      2 x action   gap")
for h, lhs, rhs, gap in zip(edge.spacings, edge.values, edge.references, edge.gaps):
    print(f"{h:6.4f}  {lhs:.6e}  {rhs:.6e}  {gap:.4f}")
print("gap reduction per halving:", np.round(edge.factors, 2))

# trapezoid weights on the fixed plane turn the identity into an exact discrete one
trap = action_study(spacings, convention="trapezoid")
print("trapezoid gaps:", trap.gaps)
